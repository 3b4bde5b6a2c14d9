//! Deterministic generators for the six benchmark designs: three-class
//! functional data built from fixed synthesis bases plus class-conditional
//! score distributions, with pointwise Gaussian noise.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal, StudentT};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funcdata::{FunctionalDataset, FunctionalSample, GridSpec};

/// Class-conditional score law for one feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ScoreDistribution {
    /// Independent coordinates N(mean_l, var_l).
    Gaussian { mean: Vec<f64>, var: Vec<f64> },
    /// Independent Exp(rate_l) coordinates (mean 1/rate_l).
    Exponential { rates: Vec<f64> },
    /// Independent location-shifted Student t coordinates.
    StudentT { dfs: Vec<f64>, location: f64 },
}

impl ScoreDistribution {
    pub fn dim(&self) -> usize {
        match self {
            ScoreDistribution::Gaussian { mean, .. } => mean.len(),
            ScoreDistribution::Exponential { rates } => rates.len(),
            ScoreDistribution::StudentT { dfs, .. } => dfs.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ScoreDistribution::Gaussian { mean, var } => {
                if mean.len() != var.len() {
                    return Err(Error::Shape("mean and variance lengths differ".into()));
                }
                if var.iter().any(|&v| !(v > 0.0)) {
                    return Err(Error::Invalid("variances must be > 0".into()));
                }
            }
            ScoreDistribution::Exponential { rates } => {
                if rates.iter().any(|&r| !(r > 0.0)) {
                    return Err(Error::Invalid("rates must be > 0".into()));
                }
            }
            ScoreDistribution::StudentT { dfs, .. } => {
                if dfs.iter().any(|&d| !(d > 0.0)) {
                    return Err(Error::Invalid("degrees of freedom must be > 0".into()));
                }
            }
        }
        if self.dim() == 0 {
            return Err(Error::Invalid("score distribution has dimension 0".into()));
        }
        Ok(())
    }
}

/// i.i.d. draws, one row per observation. Deterministic given `seed`.
pub fn gen_scores(dist: &ScoreDistribution, count: usize, seed: u64) -> Result<Array2<f64>> {
    if count == 0 {
        return Err(Error::Invalid("count must be >= 1".into()));
    }
    dist.validate()?;
    let q = dist.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Array2::zeros((count, q));
    match dist {
        ScoreDistribution::Gaussian { mean, var } => {
            for l in 0..q {
                let d = Normal::new(mean[l], var[l].sqrt())
                    .map_err(|e| Error::Invalid(e.to_string()))?;
                for i in 0..count {
                    out[[i, l]] = d.sample(&mut rng);
                }
            }
        }
        ScoreDistribution::Exponential { rates } => {
            for (l, &rate) in rates.iter().enumerate() {
                let d = Exp::new(rate).map_err(|e| Error::Invalid(e.to_string()))?;
                for i in 0..count {
                    out[[i, l]] = d.sample(&mut rng);
                }
            }
        }
        ScoreDistribution::StudentT { dfs, location } => {
            for (l, &df) in dfs.iter().enumerate() {
                let d = StudentT::new(df).map_err(|e| Error::Invalid(e.to_string()))?;
                for i in 0..count {
                    out[[i, l]] = location + d.sample(&mut rng);
                }
            }
        }
    }
    Ok(out)
}

/// Fixed synthesis bases used by the benchmark designs. These are plain
/// monomial-style functions, deliberately unrelated to the classifier's
/// orthonormal cosine system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrueBasis {
    /// phi(s, t) = s
    S,
    /// phi(s, t) = t
    T,
    /// phi(s, t) = s t
    St,
    /// phi(s, t) = s^2
    S2,
    /// phi(s, t) = t^2
    T2,
    /// phi(s) = log(s + 2)
    LogS2,
    /// phi(s) = s
    Lin,
    /// phi(s) = s^3
    Cube,
}

impl TrueBasis {
    pub fn dims(self) -> usize {
        match self {
            TrueBasis::S | TrueBasis::T | TrueBasis::St | TrueBasis::S2 | TrueBasis::T2 => 2,
            TrueBasis::LogS2 | TrueBasis::Lin | TrueBasis::Cube => 1,
        }
    }

    pub fn eval(self, point: &[f64]) -> f64 {
        match self {
            TrueBasis::S => point[0],
            TrueBasis::T => point[1],
            TrueBasis::St => point[0] * point[1],
            TrueBasis::S2 => point[0] * point[0],
            TrueBasis::T2 => point[1] * point[1],
            TrueBasis::LogS2 => (point[0] + 2.0).ln(),
            TrueBasis::Lin => point[0],
            TrueBasis::Cube => point[0].powi(3),
        }
    }
}

pub const BASES_2D: [TrueBasis; 5] = [
    TrueBasis::S,
    TrueBasis::T,
    TrueBasis::St,
    TrueBasis::S2,
    TrueBasis::T2,
];

pub const BASES_1D: [TrueBasis; 3] = [TrueBasis::LogS2, TrueBasis::Lin, TrueBasis::Cube];

/// Evaluate sum_l score_l * phi_l over the grid and add N(0, sd^2) noise.
pub fn synthesize(
    scores: &[f64],
    bases: &[TrueBasis],
    grid: &GridSpec,
    noise_sd: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    if scores.len() != bases.len() {
        return Err(Error::Shape(format!(
            "{} scores for {} bases",
            scores.len(),
            bases.len()
        )));
    }
    if noise_sd < 0.0 {
        return Err(Error::Invalid("noise sd must be >= 0".into()));
    }
    let len = grid.len();
    let mut values = Vec::with_capacity(len);
    for idx in 0..len {
        let point = grid.point(idx);
        let mut v = 0.0;
        for (x, phi) in scores.iter().zip(bases) {
            v += x * phi.eval(&point);
        }
        values.push(v);
    }
    if noise_sd > 0.0 {
        let d = Normal::new(0.0, noise_sd).map_err(|e| Error::Invalid(e.to_string()))?;
        for v in &mut values {
            *v += d.sample(rng);
        }
    }
    Ok(values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelId {
    I,
    II,
    III,
    IV,
    V,
    VI,
}

impl ModelId {
    pub fn parse(s: &str) -> Result<ModelId> {
        Ok(match s.to_ascii_uppercase().as_str() {
            "I" | "1" => ModelId::I,
            "II" | "2" => ModelId::II,
            "III" | "3" => ModelId::III,
            "IV" | "4" => ModelId::IV,
            "V" | "5" => ModelId::V,
            "VI" | "6" => ModelId::VI,
            other => return Err(Error::Invalid(format!("unknown model id '{other}'"))),
        })
    }

    /// True when the design mixes 30 1D features with 2D features.
    pub fn mixed(self) -> bool {
        matches!(self, ModelId::IV | ModelId::V | ModelId::VI)
    }
}

impl std::fmt::Display for ModelId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ModelId::I => "I",
            ModelId::II => "II",
            ModelId::III => "III",
            ModelId::IV => "IV",
            ModelId::V => "V",
            ModelId::VI => "VI",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimDesign {
    pub model: ModelId,
    /// Samples per class (K = 3).
    pub n_per_class: usize,
    /// Total feature count.
    pub p: usize,
    /// Points per axis of the 2D grids.
    pub grid_2d: usize,
    /// Points on the 1D grids (mixed designs only).
    pub grid_1d: usize,
    pub noise_sd: f64,
    pub seed: u64,
}

impl SimDesign {
    pub fn validate(&self) -> Result<()> {
        if self.n_per_class == 0 {
            return Err(Error::Invalid("n_per_class must be >= 1".into()));
        }
        let min_p = if self.model.mixed() { 35 } else { 5 };
        if self.p < min_p {
            return Err(Error::Invalid(format!(
                "model {} needs p >= {min_p}, got {}",
                self.model, self.p
            )));
        }
        if self.grid_2d < 2 || (self.model.mixed() && self.grid_1d < 2) {
            return Err(Error::Invalid("grids need at least 2 points per axis".into()));
        }
        if !(self.noise_sd >= 0.0) {
            return Err(Error::Invalid("noise sd must be >= 0".into()));
        }
        Ok(())
    }

    /// 0-based indices of the truly informative features.
    pub fn truth(&self) -> Vec<usize> {
        if self.model.mixed() {
            let mut t = vec![0, 1, 2];
            t.extend(30..35);
            t
        } else {
            (0..5).collect()
        }
    }

    pub fn k(&self) -> usize {
        3
    }
}

const NULL_VAR_2D: [f64; 5] = [1.0, 0.64, 0.36, 0.16, 0.04];
const NULL_VAR_1D: [f64; 3] = [1.0, 0.64, 0.36];

fn gaussian(mean: &[f64], var: &[f64]) -> ScoreDistribution {
    ScoreDistribution::Gaussian {
        mean: mean.to_vec(),
        var: var.to_vec(),
    }
}

fn null_2d() -> ScoreDistribution {
    gaussian(&[0.0; 5], &NULL_VAR_2D)
}

fn null_1d() -> ScoreDistribution {
    gaussian(&[0.0; 3], &NULL_VAR_1D)
}

/// Class-conditional laws of the active 2D features for models I/II/III
/// (also reused by IV/V/VI for their 2D part).
fn active_2d(model: ModelId) -> [ScoreDistribution; 3] {
    let var1 = [25.0, 16.0, 9.0, 4.0, 1.0];
    let var2 = [9.0, 4.0, 2.25, 1.0, 0.25];
    match model {
        ModelId::I | ModelId::IV => [
            gaussian(&[2.5, 2.0, 1.5, 1.0, 0.5], &var1),
            gaussian(&[-2.5, -2.0, -1.5, -1.0, -0.5], &var2),
            null_2d(),
        ],
        ModelId::II | ModelId::V => [
            gaussian(&[0.5; 5], &var1),
            gaussian(&[-0.5; 5], &var2),
            null_2d(),
        ],
        ModelId::III | ModelId::VI => [
            ScoreDistribution::Exponential {
                rates: vec![0.1, 0.12, 0.14, 0.16, 0.18],
            },
            ScoreDistribution::StudentT {
                dfs: vec![3.0, 5.0, 7.0, 9.0, 11.0],
                location: 3.0,
            },
            null_2d(),
        ],
    }
}

/// Class-conditional laws of the active 1D features (models IV/V/VI).
fn active_1d(model: ModelId) -> Result<[ScoreDistribution; 3]> {
    Ok(match model {
        ModelId::IV => [
            gaussian(&[2.5, 2.0, 1.5], &[25.0, 16.0, 9.0]),
            gaussian(&[-2.5, -2.0, -1.5], &[9.0, 4.0, 2.25]),
            null_1d(),
        ],
        ModelId::V => [
            gaussian(&[0.5; 3], &[25.0, 16.0, 9.0]),
            gaussian(&[-0.5; 3], &[9.0, 4.0, 2.25]),
            null_1d(),
        ],
        ModelId::VI => [
            ScoreDistribution::Exponential {
                rates: vec![0.1, 0.15, 0.2],
            },
            ScoreDistribution::StudentT {
                dfs: vec![4.0, 6.0, 8.0],
                location: 3.0,
            },
            gaussian(&[0.0; 3], &[1.2, 0.8, 0.4]),
        ],
        _ => return Err(Error::Invalid(format!("model {model} has no 1D part"))),
    })
}

/// Per-feature score law: `class` is 1-based.
pub fn feature_distribution(design: &SimDesign, feature: usize, class: usize) -> Result<ScoreDistribution> {
    if class < 1 || class > 3 {
        return Err(Error::Invalid(format!("class {class} outside 1..=3")));
    }
    if feature >= design.p {
        return Err(Error::Invalid(format!(
            "feature {feature} outside 0..{}",
            design.p
        )));
    }
    Ok(if design.model.mixed() {
        if feature < 3 {
            active_1d(design.model)?[class - 1].clone()
        } else if feature < 30 {
            null_1d()
        } else if feature < 35 {
            active_2d(design.model)[class - 1].clone()
        } else {
            null_2d()
        }
    } else if feature < 5 {
        active_2d(design.model)[class - 1].clone()
    } else {
        null_2d()
    })
}

fn feature_bases(design: &SimDesign, feature: usize) -> &'static [TrueBasis] {
    if design.model.mixed() && feature < 30 {
        &BASES_1D
    } else {
        &BASES_2D
    }
}

fn subseed(seed: u64, tag: u64, j: u64, k: u64) -> u64 {
    seed.wrapping_mul(0x9E3779B97F4A7C15)
        .wrapping_add(tag.wrapping_mul(0xBF58476D1CE4E5B9))
        .wrapping_add(j.wrapping_mul(0x94D049BB133111EB))
        .wrapping_add(k.wrapping_mul(0xD6E8FEB86659FD93))
}

/// Build the full three-class dataset of a design. Samples are ordered by
/// class (n_per_class each); bit-identical for identical designs.
pub fn gen_model(design: &SimDesign) -> Result<FunctionalDataset> {
    design.validate()?;
    let n_k = design.n_per_class;
    let n = 3 * n_k;
    let grids: Vec<GridSpec> = (0..design.p)
        .map(|j| {
            if design.model.mixed() && j < 30 {
                GridSpec::unit(vec![design.grid_1d])
            } else {
                GridSpec::unit(vec![design.grid_2d, design.grid_2d])
            }
        })
        .collect::<Result<_>>()?;

    let mut features_per_sample: Vec<Vec<Vec<f64>>> = vec![Vec::with_capacity(design.p); n];
    for j in 0..design.p {
        let bases = feature_bases(design, j);
        for class in 1..=3usize {
            let dist = feature_distribution(design, j, class)?;
            let scores = gen_scores(&dist, n_k, subseed(design.seed, 1, j as u64, class as u64))?;
            let mut noise_rng =
                ChaCha8Rng::seed_from_u64(subseed(design.seed, 2, j as u64, class as u64));
            for i in 0..n_k {
                let row: Vec<f64> = scores.row(i).to_vec();
                let values =
                    synthesize(&row, bases, &grids[j], design.noise_sd, &mut noise_rng)?;
                features_per_sample[(class - 1) * n_k + i].push(values);
            }
        }
    }

    let samples: Vec<FunctionalSample> = features_per_sample
        .into_iter()
        .map(FunctionalSample::new)
        .collect();
    let labels: Vec<usize> = (0..n).map(|i| i / n_k + 1).collect();
    FunctionalDataset::new(samples, labels, grids, 3)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scores_are_deterministic() {
        let d = ScoreDistribution::Gaussian {
            mean: vec![1.0, -1.0],
            var: vec![4.0, 0.25],
        };
        let a = gen_scores(&d, 50, 7).unwrap();
        let b = gen_scores(&d, 50, 7).unwrap();
        assert_eq!(a, b);
        let c = gen_scores(&d, 50, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn exponential_uses_rate_convention() {
        let d = ScoreDistribution::Exponential { rates: vec![0.1] };
        let x = gen_scores(&d, 100_000, 3).unwrap();
        let mean = x.column(0).sum() / 100_000.0;
        assert!((mean - 10.0).abs() / 10.0 < 0.02, "mean {mean}");
    }

    #[test]
    fn null_spec_moments() {
        let x = gen_scores(&null_2d(), 100_000, 11).unwrap();
        for (l, &v) in NULL_VAR_2D.iter().enumerate() {
            let col = x.column(l);
            let m = col.sum() / col.len() as f64;
            let var = col.iter().map(|a| (a - m) * (a - m)).sum::<f64>() / (col.len() - 1) as f64;
            assert!(m.abs() < 0.02, "coordinate {l} mean {m}");
            assert!((var - v).abs() / v < 0.03, "coordinate {l} var {var} vs {v}");
        }
    }

    #[test]
    fn student_t_location_shift() {
        let d = ScoreDistribution::StudentT {
            dfs: vec![11.0],
            location: 3.0,
        };
        let x = gen_scores(&d, 100_000, 5).unwrap();
        let mean = x.column(0).sum() / 100_000.0;
        assert!((mean - 3.0).abs() < 0.03, "mean {mean}");
    }

    #[test]
    fn synthesize_single_basis_no_noise() {
        let grid = GridSpec::unit(vec![4, 4]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let v = synthesize(&[1.0, 0.0, 0.0, 0.0, 0.0], &BASES_2D, &grid, 0.0, &mut rng).unwrap();
        for (idx, &val) in v.iter().enumerate() {
            let pt = grid.point(idx);
            assert!((val - pt[0]).abs() < 1e-15);
        }
    }

    #[test]
    fn synthesize_zero_scores_zero_noise() {
        let grid = GridSpec::unit(vec![3]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let v = synthesize(&[0.0; 3], &BASES_1D, &grid, 0.0, &mut rng).unwrap();
        assert!(v.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn noise_variance_close_to_spec() {
        let grid = GridSpec::unit(vec![2]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let reps = 10_000;
        let mut first = Vec::with_capacity(reps);
        for _ in 0..reps {
            let v = synthesize(&[0.0; 3], &BASES_1D, &grid, 0.1, &mut rng).unwrap();
            first.push(v[0]);
        }
        let m = first.iter().sum::<f64>() / reps as f64;
        let var = first.iter().map(|a| (a - m) * (a - m)).sum::<f64>() / (reps - 1) as f64;
        assert!((var - 0.01).abs() / 0.01 < 0.05, "var {var}");
    }

    #[test]
    fn model_i_shape_and_balance() {
        let design = SimDesign {
            model: ModelId::I,
            n_per_class: 10,
            p: 8,
            grid_2d: 6,
            grid_1d: 15,
            noise_sd: 0.1,
            seed: 42,
        };
        let ds = gen_model(&design).unwrap();
        assert_eq!(ds.len(), 30);
        assert_eq!(ds.n_features(), 8);
        assert_eq!(ds.sample(0).features[0].len(), 36);
        for k in 1..=3 {
            assert_eq!(ds.labels().iter().filter(|&&y| y == k).count(), 10);
        }
        assert_eq!(design.truth(), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn mixed_model_layout() {
        let design = SimDesign {
            model: ModelId::IV,
            n_per_class: 4,
            p: 36,
            grid_2d: 5,
            grid_1d: 15,
            noise_sd: 0.1,
            seed: 1,
        };
        let ds = gen_model(&design).unwrap();
        assert_eq!(ds.n_features(), 36);
        assert_eq!(ds.sample(0).features[0].len(), 15);
        assert_eq!(ds.sample(0).features[29].len(), 15);
        assert_eq!(ds.sample(0).features[30].len(), 25);
        assert_eq!(design.truth(), vec![0, 1, 2, 30, 31, 32, 33, 34]);
    }

    #[test]
    fn gen_model_is_deterministic() {
        let design = SimDesign {
            model: ModelId::III,
            n_per_class: 5,
            p: 6,
            grid_2d: 4,
            grid_1d: 15,
            noise_sd: 0.1,
            seed: 77,
        };
        let a = gen_model(&design).unwrap();
        let b = gen_model(&design).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn p_lower_bounds_enforced() {
        let mut design = SimDesign {
            model: ModelId::IV,
            n_per_class: 5,
            p: 34,
            grid_2d: 4,
            grid_1d: 15,
            noise_sd: 0.1,
            seed: 0,
        };
        assert!(gen_model(&design).is_err());
        design.model = ModelId::I;
        design.p = 4;
        assert!(gen_model(&design).is_err());
    }
}
