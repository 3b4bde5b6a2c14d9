//! Run-level configuration: one flat struct holding every tunable default,
//! loadable from a simple `key = value` file.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lassonet::{BatchLogBase, PathConfig, ProxConfig, ProxRule};
use crate::network::AdamConfig;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    /// Adam learning rate.
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Path inflation factor: lambda grows by (1 + delta) per step.
    pub delta: f64,
    /// Hierarchy coefficient C.
    pub hierarchy_c: f64,
    /// Information-criterion constant exponent: C_tau = 3 * 10^tau.
    pub tau: i32,
    pub split_train: f64,
    pub split_validation: f64,
    pub split_test: f64,
    /// "natural" (2^floor(ln n)) or "two" (2^floor(log2 n)).
    pub batch_rule: BatchLogBase,
    /// Explicit batch size; overrides the rule when set.
    pub batch_size: Option<usize>,
    pub warmup_epochs: usize,
    pub epochs_per_step: usize,
    pub lambda0: Option<f64>,
    pub lambda_max: f64,
    /// Truncation per 1D feature.
    pub q1_1d: usize,
    /// Truncation per 2D feature.
    pub q1_2d: usize,
    pub dropout: f64,
    pub prox_rule: ProxRule,
    /// Sample count used in the criterion penalty; None means the full
    /// dataset size, Some overrides it (e.g. validation-set size).
    pub criterion_n: Option<usize>,
    /// Hidden-depth candidates for selection.
    pub grid_depths: Vec<usize>,
    /// Hidden-width candidates for selection.
    pub grid_widths: Vec<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            alpha: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            delta: 0.02,
            hierarchy_c: 10.0,
            tau: 0,
            split_train: 0.6,
            split_validation: 0.2,
            split_test: 0.2,
            batch_rule: BatchLogBase::Natural,
            batch_size: None,
            warmup_epochs: 200,
            epochs_per_step: 20,
            lambda0: None,
            lambda_max: 1e9,
            q1_1d: 4,
            q1_2d: 6,
            dropout: 0.0,
            prox_rule: ProxRule::GroupSearch,
            criterion_n: None,
            grid_depths: vec![1, 2],
            grid_widths: vec![50, 100],
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("alpha", self.alpha),
            ("delta", self.delta),
            ("hierarchy_c", self.hierarchy_c),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Invalid(format!("{name} must be > 0, got {v}")));
            }
        }
        let sum = self.split_train + self.split_validation + self.split_test;
        if (sum - 1.0).abs() > 1e-9
            || self.split_train <= 0.0
            || self.split_validation <= 0.0
            || self.split_test <= 0.0
        {
            return Err(Error::Invalid(
                "split ratios must be positive and sum to 1".into(),
            ));
        }
        if !(-1..=2).contains(&self.tau) {
            return Err(Error::Invalid(format!(
                "tau must be in -1..=2, got {}",
                self.tau
            )));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Invalid("dropout must be in [0, 1)".into()));
        }
        if self.q1_1d == 0 || self.q1_2d == 0 {
            return Err(Error::Invalid("truncation numbers must be >= 1".into()));
        }
        if self.grid_depths.is_empty() || self.grid_widths.is_empty() {
            return Err(Error::Invalid("candidate grids must be nonempty".into()));
        }
        if self.grid_depths.contains(&0) || self.grid_widths.contains(&0) {
            return Err(Error::Invalid("grid entries must be >= 1".into()));
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            alpha: self.alpha,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
        }
    }

    pub fn prox(&self) -> ProxConfig {
        ProxConfig {
            hierarchy_c: self.hierarchy_c,
            alpha: self.alpha,
            lambda: 0.0,
            rule: self.prox_rule,
        }
    }

    pub fn path(&self, loss: crate::network::LossKind) -> PathConfig {
        PathConfig {
            lambda0: self.lambda0,
            delta: self.delta,
            warmup_epochs: self.warmup_epochs,
            epochs_per_step: self.epochs_per_step,
            batch_log_base: self.batch_rule,
            batch_size: self.batch_size,
            lambda_max: self.lambda_max,
            adam: self.adam(),
            loss,
        }
    }

    pub fn split_ratios(&self) -> (f64, f64, f64) {
        (self.split_train, self.split_validation, self.split_test)
    }

    /// Apply `key = value` lines; `#` starts a comment, blank lines ignored.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)?;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Invalid(format!("config line {}: expected key=value", lineno + 1))
            })?;
            self.apply_pair(key.trim(), value.trim()).map_err(|e| {
                Error::Invalid(format!("config line {}: {e}", lineno + 1))
            })?;
        }
        self.validate()
    }

    pub fn apply_pair(&mut self, key: &str, value: &str) -> Result<()> {
        fn f(v: &str) -> Result<f64> {
            v.parse()
                .map_err(|_| Error::Invalid(format!("expected a number, got '{v}'")))
        }
        fn u(v: &str) -> Result<usize> {
            v.parse()
                .map_err(|_| Error::Invalid(format!("expected a non-negative integer, got '{v}'")))
        }
        fn list(v: &str) -> Result<Vec<usize>> {
            v.split(',').map(|s| u(s.trim())).collect()
        }
        match key {
            "alpha" => self.alpha = f(value)?,
            "beta1" => self.beta1 = f(value)?,
            "beta2" => self.beta2 = f(value)?,
            "epsilon" => self.epsilon = f(value)?,
            "delta" => self.delta = f(value)?,
            "hierarchy_c" | "c" => self.hierarchy_c = f(value)?,
            "tau" => {
                self.tau = value
                    .parse()
                    .map_err(|_| Error::Invalid(format!("expected an integer, got '{value}'")))?
            }
            "split_train" => self.split_train = f(value)?,
            "split_validation" => self.split_validation = f(value)?,
            "split_test" => self.split_test = f(value)?,
            "batch_rule" => {
                self.batch_rule = match value {
                    "natural" => BatchLogBase::Natural,
                    "two" => BatchLogBase::Two,
                    other => {
                        return Err(Error::Invalid(format!(
                            "batch_rule must be 'natural' or 'two', got '{other}'"
                        )))
                    }
                }
            }
            "batch_size" => self.batch_size = Some(u(value)?),
            "warmup_epochs" => self.warmup_epochs = u(value)?,
            "epochs_per_step" => self.epochs_per_step = u(value)?,
            "lambda0" => self.lambda0 = Some(f(value)?),
            "lambda_max" => self.lambda_max = f(value)?,
            "q1_1d" => self.q1_1d = u(value)?,
            "q1_2d" => self.q1_2d = u(value)?,
            "dropout" => self.dropout = f(value)?,
            "prox_rule" => {
                self.prox_rule = match value {
                    "group-search" | "group_search" => ProxRule::GroupSearch,
                    "paper" => ProxRule::Paper,
                    other => {
                        return Err(Error::Invalid(format!(
                            "prox_rule must be 'group-search' or 'paper', got '{other}'"
                        )))
                    }
                }
            }
            "criterion_n" => self.criterion_n = Some(u(value)?),
            "grid_depths" => self.grid_depths = list(value)?,
            "grid_widths" => self.grid_widths = list(value)?,
            other => {
                return Err(Error::Invalid(format!("unknown config key '{other}'")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn default_values_match_documented_choices() {
        let c = RunConfig::default();
        assert_eq!(c.alpha, 0.001);
        assert_eq!(c.delta, 0.02);
        assert_eq!(c.hierarchy_c, 10.0);
        assert_eq!(c.tau, 0);
        assert_eq!((c.split_train, c.split_validation, c.split_test), (0.6, 0.2, 0.2));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(
            &path,
            "# comment\nalpha = 0.005\ntau=1\ngrid_widths = 10, 20\nprox_rule = paper\n",
        )
        .unwrap();
        let mut c = RunConfig::default();
        c.apply_file(&path).unwrap();
        assert_eq!(c.alpha, 0.005);
        assert_eq!(c.tau, 1);
        assert_eq!(c.grid_widths, vec![10, 20]);
        assert_eq!(c.prox_rule, ProxRule::Paper);
    }

    #[test]
    fn unknown_key_rejected() {
        let mut c = RunConfig::default();
        assert!(c.apply_pair("nonsense", "1").is_err());
    }

    #[test]
    fn bad_splits_rejected() {
        let mut c = RunConfig::default();
        c.split_train = 0.9;
        assert!(c.validate().is_err());
    }

    #[test]
    fn tau_range_enforced() {
        let mut c = RunConfig::default();
        c.tau = 3;
        assert!(c.validate().is_err());
    }
}
