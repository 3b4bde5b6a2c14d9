//! Classification losses.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Probabilities are floored here before logs so log-likelihood based
/// criteria stay finite.
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LossKind {
    /// max(1 - (2Y-3) f, 0) for labels in {1,2}.
    Hinge,
    /// -log p_Y on softmax outputs.
    CrossEntropy,
}

/// Binary hinge loss on a raw score.
pub fn loss_hinge(f_value: f64, label: usize) -> Result<f64> {
    if label != 1 && label != 2 {
        return Err(Error::Invalid(format!("hinge label {label} outside {{1,2}}")));
    }
    let u = (2.0 * label as f64) - 3.0;
    Ok((1.0 - u * f_value).max(0.0))
}

/// Cross-entropy -log p_label on a probability vector.
pub fn loss_cross_entropy(probs: &[f64], label: usize) -> Result<f64> {
    if label < 1 || label > probs.len() {
        return Err(Error::Invalid(format!(
            "label {label} outside 1..={}",
            probs.len()
        )));
    }
    Ok(-(probs[label - 1].max(PROB_FLOOR)).ln())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hinge_values() {
        assert_eq!(loss_hinge(1.0, 2).unwrap(), 0.0);
        assert_eq!(loss_hinge(1.0, 1).unwrap(), 2.0);
        assert_eq!(loss_hinge(0.0, 1).unwrap(), 1.0);
        assert_eq!(loss_hinge(0.0, 2).unwrap(), 1.0);
        assert!(loss_hinge(0.0, 3).is_err());
    }

    #[test]
    fn cross_entropy_values() {
        let v = loss_cross_entropy(&[0.5, 0.25, 0.25], 1).unwrap();
        assert!((v - 2.0f64.ln()).abs() < 1e-12);

        let one_hot = loss_cross_entropy(&[0.0, 1.0, 0.0], 2).unwrap();
        assert_eq!(one_hot, 0.0);

        let uniform = loss_cross_entropy(&[0.25; 4], 3).unwrap();
        assert!((uniform - 4.0f64.ln()).abs() < 1e-12);

        assert!(loss_cross_entropy(&[0.5, 0.5], 3).is_err());
    }

    #[test]
    fn floor_keeps_logs_finite() {
        let v = loss_cross_entropy(&[1.0, 0.0], 2).unwrap();
        assert!(v.is_finite());
        assert!((v - (-(PROB_FLOOR).ln())).abs() < 1e-9);
    }
}
