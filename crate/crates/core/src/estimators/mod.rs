//! Portfolio weight estimators.
//!
//! Every regression-based estimator regresses the constant ideal return r̄ on the
//! asset returns without an intercept, so it only needs the sufficient statistics
//! X'X and X'y held by [`RegressionSystem`]. Cross-validation builds one system
//! per training fold and reuses the solvers below directly.

mod benchmarks;
mod lasso;
mod pcr;
mod ridge;
pub mod spike_slab;
mod traditional;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::returns::ReturnsMatrix;
use crate::weights::WeightVector;

pub use benchmarks::{
    empirical_bayes_shrinkage, estimate_empirical_bayes, estimate_empirical_bayes_with_shrinkage,
    estimate_equal_weights, estimate_min_variance, estimate_mv_noshort, mv_noshort_system,
    noshort_kkt_residual,
};
pub use lasso::{
    estimate_lasso, lambda_max, lasso_kkt_residual, lasso_path, lasso_system, LASSO_MAX_SWEEPS,
};
pub use pcr::{estimate_pcr, pcr_system, PcrPath};
pub use ridge::{estimate_ridge, ridge_system, RidgePath};
pub use spike_slab::{
    estimate_spike_slab, spike_slab_system, InclusionPrior, SpikeSlabConfig, SpikeSlabModel,
    SpikeSlabPosterior,
};
pub use traditional::{estimate_ols, ols_system};

/// Gram matrix X'X and cross-product X'y for the target y = r̄·1.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionSystem {
    pub gram: DMatrix<f64>,
    pub xty: DVector<f64>,
    pub n_obs: usize,
    pub r_bar: f64,
}

impl RegressionSystem {
    pub fn new(gram: DMatrix<f64>, xty: DVector<f64>, n_obs: usize, r_bar: f64) -> Result<Self> {
        let m = xty.len();
        if gram.shape() != (m, m) {
            return Err(Error::DimensionMismatch {
                expected: m,
                actual: gram.nrows(),
            });
        }
        if n_obs == 0 {
            return Err(Error::InvalidInput(
                "regression system without observations".into(),
            ));
        }
        check_r_bar(r_bar)?;
        Ok(Self {
            gram,
            xty,
            n_obs,
            r_bar,
        })
    }

    pub fn from_returns(returns: &ReturnsMatrix, r_bar: f64) -> Result<Self> {
        check_r_bar(r_bar)?;
        let x = returns.data();
        Ok(Self {
            gram: x.tr_mul(x),
            xty: x.row_sum().transpose() * r_bar,
            n_obs: x.nrows(),
            r_bar,
        })
    }

    /// System built from a subset of the periods of `returns`.
    pub fn from_rows(returns: &ReturnsMatrix, rows: &[usize], r_bar: f64) -> Result<Self> {
        check_r_bar(r_bar)?;
        if rows.is_empty() {
            return Err(Error::InvalidInput(
                "regression system without observations".into(),
            ));
        }
        let x = returns.data().select_rows(rows.iter());
        Ok(Self {
            gram: x.tr_mul(&x),
            xty: x.row_sum().transpose() * r_bar,
            n_obs: rows.len(),
            r_bar,
        })
    }

    pub fn n_assets(&self) -> usize {
        self.xty.len()
    }

    /// y'y for the constant target.
    pub fn yty(&self) -> f64 {
        self.n_obs as f64 * self.r_bar * self.r_bar
    }

    /// (1/n) Σᵢ (r̄ − xᵢᵀθ)², evaluated from the sufficient statistics.
    pub fn mean_squared_error(&self, theta: &DVector<f64>) -> f64 {
        let quad = theta.dot(&(&self.gram * theta));
        (self.yty() - 2.0 * theta.dot(&self.xty) + quad) / self.n_obs as f64
    }
}

fn check_r_bar(r_bar: f64) -> Result<()> {
    if r_bar > 0.0 && r_bar.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "r_bar must be positive, got {r_bar}"
        )))
    }
}

pub(crate) fn labeled(returns: &ReturnsMatrix, theta: DVector<f64>) -> Result<WeightVector> {
    WeightVector::new(theta, returns.asset_labels().to_vec())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PenaltyKind {
    None,
    Ridge,
    Lasso,
    Pcr,
}

impl PenaltyKind {
    pub fn name(self) -> &'static str {
        match self {
            PenaltyKind::None => "none",
            PenaltyKind::Ridge => "ridge",
            PenaltyKind::Lasso => "lasso",
            PenaltyKind::Pcr => "pcr",
        }
    }
}

/// A penalty family together with its tuning value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PenaltySpec {
    None,
    Ridge(f64),
    Lasso(f64),
    /// Number of principal components kept.
    Pcr(usize),
}

impl PenaltySpec {
    pub fn kind(&self) -> PenaltyKind {
        match self {
            PenaltySpec::None => PenaltyKind::None,
            PenaltySpec::Ridge(_) => PenaltyKind::Ridge,
            PenaltySpec::Lasso(_) => PenaltyKind::Lasso,
            PenaltySpec::Pcr(_) => PenaltyKind::Pcr,
        }
    }

    /// Builds the penalty of `kind` at grid value `value`.
    pub fn from_grid(kind: PenaltyKind, value: f64) -> Self {
        match kind {
            PenaltyKind::None => PenaltySpec::None,
            PenaltyKind::Ridge => PenaltySpec::Ridge(value),
            PenaltyKind::Lasso => PenaltySpec::Lasso(value),
            PenaltyKind::Pcr => PenaltySpec::Pcr(value.round() as usize),
        }
    }

    pub fn validate(&self, m: usize) -> Result<()> {
        match *self {
            PenaltySpec::None => Ok(()),
            PenaltySpec::Ridge(l) | PenaltySpec::Lasso(l) => {
                if l >= 0.0 && l.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidInput(format!(
                        "penalty must be nonnegative, got {l}"
                    )))
                }
            }
            PenaltySpec::Pcr(k) => {
                if (1..=m).contains(&k) {
                    Ok(())
                } else {
                    Err(Error::InvalidInput(format!(
                        "component count {k} outside 1..={m}"
                    )))
                }
            }
        }
    }
}

/// Solves the penalized regression for a prepared system.
pub fn fit_system(sys: &RegressionSystem, penalty: &PenaltySpec) -> Result<DVector<f64>> {
    penalty.validate(sys.n_assets())?;
    match *penalty {
        PenaltySpec::None => ols_system(sys),
        PenaltySpec::Ridge(l) => ridge_system(sys, l),
        PenaltySpec::Lasso(l) => lasso_system(sys, l, None),
        PenaltySpec::Pcr(k) => pcr_system(sys, k),
    }
}

pub fn estimate_penalized(
    returns: &ReturnsMatrix,
    r_bar: f64,
    penalty: &PenaltySpec,
) -> Result<WeightVector> {
    let sys = RegressionSystem::from_returns(returns, r_bar)?;
    labeled(returns, fit_system(&sys, penalty)?)
}
