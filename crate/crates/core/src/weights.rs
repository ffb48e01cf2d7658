use nalgebra::DVector;

use crate::error::{Error, Result};

/// Smallest |1ᵀθ| for which relative weights are defined.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;

/// Absolute positions θ in the risky assets. The risk-free position is 1 − 1ᵀθ.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    pub theta: DVector<f64>,
    pub labels: Vec<String>,
}

impl WeightVector {
    pub fn new(theta: DVector<f64>, labels: Vec<String>) -> Result<Self> {
        if labels.len() != theta.len() {
            return Err(Error::DimensionMismatch {
                expected: theta.len(),
                actual: labels.len(),
            });
        }
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite portfolio weight".into()));
        }
        Ok(Self { theta, labels })
    }

    /// Weights labelled `A1..Am`.
    pub fn unlabeled(theta: DVector<f64>) -> Result<Self> {
        let labels = (1..=theta.len()).map(|j| format!("A{j}")).collect();
        Self::new(theta, labels)
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    /// 1ᵀθ
    pub fn gross(&self) -> f64 {
        self.theta.sum()
    }

    pub fn risk_free_position(&self) -> f64 {
        1.0 - self.gross()
    }

    pub fn relative(&self) -> Result<DVector<f64>> {
        relative_weights(self)
    }
}

/// ω = θ / (1ᵀθ).
pub fn relative_weights(w: &WeightVector) -> Result<DVector<f64>> {
    let total = w.gross();
    if total.abs() <= NORMALIZATION_TOLERANCE {
        return Err(Error::DegenerateNormalization(total));
    }
    Ok(&w.theta / total)
}
