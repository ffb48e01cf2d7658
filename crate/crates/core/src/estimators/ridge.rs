use nalgebra::DVector;

use super::{labeled, ols_system, RegressionSystem};
use crate::error::{Error, Result};
use crate::linalg::SortedEigen;
use crate::returns::ReturnsMatrix;
use crate::weights::WeightVector;

/// Ridge solutions along a penalty grid from one eigendecomposition of X'X.
///
/// With X'X = QΛQᵀ the ridge weights are Q (Qᵀ X'y ⊘ (Λ + λ)), so each extra
/// grid point costs O(m²).
#[derive(Debug, Clone)]
pub struct RidgePath<'a> {
    sys: &'a RegressionSystem,
    eig: SortedEigen,
    rotated_xty: DVector<f64>,
}

impl<'a> RidgePath<'a> {
    pub fn new(sys: &'a RegressionSystem) -> Self {
        let eig = SortedEigen::new(&sys.gram);
        let rotated_xty = eig.vectors.tr_mul(&sys.xty);
        Self {
            sys,
            eig,
            rotated_xty,
        }
    }

    pub fn solve(&self, lambda: f64) -> Result<DVector<f64>> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "ridge penalty must be nonnegative, got {lambda}"
            )));
        }
        if lambda == 0.0 {
            return ols_system(self.sys);
        }
        let scaled = DVector::from_iterator(
            self.rotated_xty.len(),
            self.rotated_xty
                .iter()
                .zip(self.eig.values.iter())
                .map(|(&c, &ev)| c / (ev.max(0.0) + lambda)),
        );
        Ok(&self.eig.vectors * scaled)
    }
}

/// θ̂ = (X'X + λI)⁻¹X'y
pub fn ridge_system(sys: &RegressionSystem, lambda: f64) -> Result<DVector<f64>> {
    RidgePath::new(sys).solve(lambda)
}

pub fn estimate_ridge(returns: &ReturnsMatrix, r_bar: f64, lambda: f64) -> Result<WeightVector> {
    let sys = RegressionSystem::from_returns(returns, r_bar)?;
    labeled(returns, ridge_system(&sys, lambda)?)
}
