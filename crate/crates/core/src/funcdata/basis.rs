//! Orthonormal functional weight systems.
//!
//! The default family is the tensor-product cosine basis on `[0,1]^d`: the
//! 1D factors are `1, sqrt(2) cos(pi k s)` and multi-factor elements are
//! enumerated by increasing total degree, ties broken lexicographically.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BasisFamily {
    /// Tensor products of `{1, sqrt(2) cos(pi k s)}` factors.
    CosineTensor,
}

/// Basis family and truncation count for one feature.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureBasis {
    pub family: BasisFamily,
    pub dims: usize,
    /// Number of retained basis elements (q_1j >= 1).
    pub truncation: usize,
}

/// Per-feature basis system; the projected score vector has length
/// `total_truncation()`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisSpec {
    features: Vec<FeatureBasis>,
}

impl BasisSpec {
    pub fn new(features: Vec<FeatureBasis>) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::Invalid("basis spec needs at least one feature".into()));
        }
        for (j, f) in features.iter().enumerate() {
            if f.truncation < 1 {
                return Err(Error::Invalid(format!("feature {}: truncation must be >= 1", j + 1)));
            }
            if f.dims < 1 {
                return Err(Error::Invalid(format!("feature {}: dims must be >= 1", j + 1)));
            }
        }
        Ok(BasisSpec { features })
    }

    /// Cosine basis with the given `(dims, truncation)` per feature.
    pub fn cosine(per_feature: &[(usize, usize)]) -> Result<Self> {
        Self::new(
            per_feature
                .iter()
                .map(|&(dims, truncation)| FeatureBasis {
                    family: BasisFamily::CosineTensor,
                    dims,
                    truncation,
                })
                .collect(),
        )
    }

    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    pub fn feature(&self, j: usize) -> &FeatureBasis {
        &self.features[j]
    }

    pub fn features(&self) -> &[FeatureBasis] {
        &self.features
    }

    pub fn truncations(&self) -> Vec<usize> {
        self.features.iter().map(|f| f.truncation).collect()
    }

    /// q_1 = sum over features of q_1j.
    pub fn total_truncation(&self) -> usize {
        self.features.iter().map(|f| f.truncation).sum()
    }

    /// Evaluate basis element `l` of feature `j` at a point of `[0,1]^d`.
    pub fn eval(&self, feature: usize, l: usize, point: &[f64]) -> Result<f64> {
        let fb = self
            .features
            .get(feature)
            .ok_or_else(|| Error::Domain(format!("feature index {feature} out of range")))?;
        if l >= fb.truncation {
            return Err(Error::Domain(format!(
                "basis index {l} out of range (truncation {})",
                fb.truncation
            )));
        }
        if point.len() != fb.dims {
            return Err(Error::Shape(format!(
                "point has {} coordinates, feature has {} dims",
                point.len(),
                fb.dims
            )));
        }
        if point.iter().any(|&s| !(0.0..=1.0).contains(&s)) {
            return Err(Error::Domain("point outside [0,1]^d".into()));
        }
        let index = multi_index(fb.dims, l);
        Ok(index
            .iter()
            .zip(point)
            .map(|(&k, &s)| cosine_factor(k, s))
            .product())
    }
}

fn cosine_factor(k: usize, s: f64) -> f64 {
    if k == 0 {
        1.0
    } else {
        std::f64::consts::SQRT_2 * (std::f64::consts::PI * k as f64 * s).cos()
    }
}

/// The `l`-th multi-index in the graded lexicographic enumeration over d
/// axes: total degree ascending, lexicographic within a degree.
pub(crate) fn multi_index(d: usize, l: usize) -> Vec<usize> {
    let mut count = 0usize;
    for degree in 0.. {
        for idx in compositions(d, degree) {
            if count == l {
                return idx;
            }
            count += 1;
        }
    }
    unreachable!()
}

/// All weak compositions of `degree` into `d` parts, ascending lexicographic.
fn compositions(d: usize, degree: usize) -> Vec<Vec<usize>> {
    if d == 1 {
        return vec![vec![degree]];
    }
    let mut out = Vec::new();
    for first in 0..=degree {
        for rest in compositions(d - 1, degree - first) {
            let mut idx = Vec::with_capacity(d);
            idx.push(first);
            idx.extend(rest);
            out.push(idx);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multi_index_order_2d() {
        let want: Vec<Vec<usize>> = vec![
            vec![0, 0],
            vec![0, 1],
            vec![1, 0],
            vec![0, 2],
            vec![1, 1],
            vec![2, 0],
            vec![0, 3],
        ];
        for (l, w) in want.iter().enumerate() {
            assert_eq!(&multi_index(2, l), w, "element {l}");
        }
    }

    #[test]
    fn multi_index_order_1d() {
        for l in 0..8 {
            assert_eq!(multi_index(1, l), vec![l]);
        }
    }

    #[test]
    fn multi_index_order_3d_degree_one() {
        assert_eq!(multi_index(3, 0), vec![0, 0, 0]);
        assert_eq!(multi_index(3, 1), vec![0, 0, 1]);
        assert_eq!(multi_index(3, 2), vec![0, 1, 0]);
        assert_eq!(multi_index(3, 3), vec![1, 0, 0]);
        assert_eq!(multi_index(3, 4), vec![0, 0, 2]);
    }

    #[test]
    fn constant_element_is_one() {
        let spec = BasisSpec::cosine(&[(2, 6)]).unwrap();
        assert_eq!(spec.eval(0, 0, &[0.3, 0.9]).unwrap(), 1.0);
    }

    #[test]
    fn second_element_at_origin_is_sqrt2() {
        let spec = BasisSpec::cosine(&[(1, 3)]).unwrap();
        let v = spec.eval(0, 1, &[0.0]).unwrap();
        assert!((v - std::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn out_of_range_rejected() {
        let spec = BasisSpec::cosine(&[(1, 3)]).unwrap();
        assert!(spec.eval(0, 3, &[0.5]).is_err());
        assert!(spec.eval(0, 1, &[1.5]).is_err());
        assert!(spec.eval(1, 0, &[0.5]).is_err());
    }
}
