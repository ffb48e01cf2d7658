use nalgebra::{DMatrix, DVector};

use crate::returns::ReturnsMatrix;

/// Sample mean, maximum-likelihood covariance and raw second-moment matrix of a panel.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMoments {
    pub mean: DVector<f64>,
    /// Covariance with the 1/n normalization.
    pub cov: DMatrix<f64>,
    pub n_obs: usize,
    /// X'X
    pub gram: DMatrix<f64>,
}

pub fn compute_moments(returns: &ReturnsMatrix) -> SampleMoments {
    let x = returns.data();
    let n = x.nrows();
    let nf = n as f64;
    let gram = x.tr_mul(x);
    let mean = x.row_sum().transpose() / nf;
    let mut cov = &gram / nf - &mean * mean.transpose();
    crate::linalg::symmetrize(&mut cov);
    SampleMoments {
        mean,
        cov,
        n_obs: n,
        gram,
    }
}

impl SampleMoments {
    pub fn n_assets(&self) -> usize {
        self.mean.len()
    }

    /// Σ̂ + μ̂μ̂ᵀ, the sample second-moment matrix (X'X / n).
    pub fn second_moment(&self) -> DMatrix<f64> {
        &self.cov + &self.mean * self.mean.transpose()
    }
}
