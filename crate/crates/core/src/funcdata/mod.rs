//! Grid-sampled functional observations: grids, basis systems, quadrature
//! projections, dataset splitting and on-disk format.

mod basis;
mod io;
mod project;
mod split;

pub use basis::{BasisFamily, BasisSpec, FeatureBasis};
pub use io::{load_dataset, save_dataset};
pub use project::{gram_matrix, project, project_dataset, project_samples};
pub use split::{split_dataset, SplitIndices};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Evenly spaced observation grid over a closed box domain.
///
/// Domains are normalized to `[0,1]` per axis internally; loaders rescale
/// arbitrary `[0,a]` boxes on ingest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    sizes: Vec<usize>,
    domain: Vec<[f64; 2]>,
}

impl GridSpec {
    /// Grid on the unit box `[0,1]^d` with the given per-axis point counts.
    pub fn unit(sizes: Vec<usize>) -> Result<Self> {
        let domain = vec![[0.0, 1.0]; sizes.len()];
        Self::new(sizes, domain)
    }

    pub fn new(sizes: Vec<usize>, domain: Vec<[f64; 2]>) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::Invalid("grid must have at least one axis".into()));
        }
        if sizes.len() != domain.len() {
            return Err(Error::Shape(format!(
                "grid has {} axes but domain has {}",
                sizes.len(),
                domain.len()
            )));
        }
        // Degenerate axes are rejected rather than treated as scalars.
        if let Some(&bad) = sizes.iter().find(|&&s| s < 2) {
            return Err(Error::Invalid(format!(
                "grid size {bad} along an axis; every axis needs at least 2 points"
            )));
        }
        if domain.iter().any(|d| !(d[0] < d[1]) || !d[0].is_finite() || !d[1].is_finite()) {
            return Err(Error::Invalid("domain interval must be finite with lo < hi".into()));
        }
        Ok(GridSpec { sizes, domain })
    }

    pub fn dims(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn domain(&self) -> &[[f64; 2]] {
        &self.domain
    }

    /// Total number of grid points.
    pub fn len(&self) -> usize {
        self.sizes.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn is_unit_domain(&self) -> bool {
        self.domain.iter().all(|d| d[0] == 0.0 && d[1] == 1.0)
    }

    /// Same grid with every axis rescaled to `[0,1]`.
    pub fn normalized(&self) -> GridSpec {
        GridSpec {
            sizes: self.sizes.clone(),
            domain: vec![[0.0, 1.0]; self.sizes.len()],
        }
    }

    /// Evenly spaced points (endpoints included) along one axis of the
    /// normalized grid.
    pub fn axis_points(&self, axis: usize) -> Vec<f64> {
        let m = self.sizes[axis];
        (0..m).map(|i| i as f64 / (m - 1) as f64).collect()
    }

    /// Coordinates of the flat (row-major) grid index in `[0,1]^d`.
    pub fn point(&self, mut flat: usize) -> Vec<f64> {
        let d = self.dims();
        let mut coords = vec![0.0; d];
        for axis in (0..d).rev() {
            let m = self.sizes[axis];
            coords[axis] = (flat % m) as f64 / (m - 1) as f64;
            flat /= m;
        }
        coords
    }
}

/// One observation: per-feature arrays in row-major grid order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalSample {
    pub features: Vec<Vec<f64>>,
}

impl FunctionalSample {
    pub fn new(features: Vec<Vec<f64>>) -> Self {
        FunctionalSample { features }
    }

    fn validate(&self, grids: &[GridSpec]) -> Result<()> {
        if self.features.len() != grids.len() {
            return Err(Error::Shape(format!(
                "sample has {} features, expected {}",
                self.features.len(),
                grids.len()
            )));
        }
        for (j, (vals, grid)) in self.features.iter().zip(grids).enumerate() {
            if vals.len() != grid.len() {
                return Err(Error::Shape(format!(
                    "feature {} has {} values, grid declares {}",
                    j + 1,
                    vals.len(),
                    grid.len()
                )));
            }
            if vals.iter().any(|v| !v.is_finite()) {
                return Err(Error::Invalid(format!(
                    "feature {} contains a non-finite value",
                    j + 1
                )));
            }
        }
        Ok(())
    }
}

/// Labeled collection of functional observations sharing one set of feature
/// grids. Labels are 1-based in `{1..K}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalDataset {
    samples: Vec<FunctionalSample>,
    labels: Vec<usize>,
    feature_grids: Vec<GridSpec>,
    k: usize,
}

impl FunctionalDataset {
    pub fn new(
        samples: Vec<FunctionalSample>,
        labels: Vec<usize>,
        feature_grids: Vec<GridSpec>,
        k: usize,
    ) -> Result<Self> {
        if samples.len() != labels.len() {
            return Err(Error::Shape(format!(
                "{} samples but {} labels",
                samples.len(),
                labels.len()
            )));
        }
        if k < 2 {
            return Err(Error::Invalid("need at least 2 classes".into()));
        }
        let mut seen = vec![false; k];
        for &y in &labels {
            if y < 1 || y > k {
                return Err(Error::Invalid(format!("label {y} outside 1..={k}")));
            }
            seen[y - 1] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::Invalid(format!("class {} has no samples", missing + 1)));
        }
        for s in &samples {
            s.validate(&feature_grids)?;
        }
        Ok(FunctionalDataset {
            samples,
            labels,
            feature_grids,
            k,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_grids.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn samples(&self) -> &[FunctionalSample] {
        &self.samples
    }

    pub fn feature_grids(&self) -> &[GridSpec] {
        &self.feature_grids
    }

    pub fn sample(&self, i: usize) -> &FunctionalSample {
        &self.samples[i]
    }

    /// Mutable access to one sample's raw values (used by tests that poison
    /// held-out samples). Re-validation is the caller's responsibility.
    pub fn sample_values_mut(&mut self, i: usize) -> &mut FunctionalSample {
        &mut self.samples[i]
    }
}
