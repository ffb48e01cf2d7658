//! Benchmark strategies: equal weights, minimum variance, long-only mean-variance
//! and Jorion-style empirical Bayes shrinkage of the mean.

use nalgebra::{DMatrix, DVector};

use super::{labeled, RegressionSystem};
use crate::error::{Error, Result};
use crate::linalg::{cholesky_solve, SortedEigen, MAX_CONDITION};
use crate::moments::{compute_moments, SampleMoments};
use crate::returns::ReturnsMatrix;
use crate::weights::WeightVector;

const NOSHORT_MAX_SWEEPS: usize = 100_000;
const STEP_TOLERANCE: f64 = 1e-10;
const KKT_TOLERANCE: f64 = 1e-8;

/// θⱼ = gross / m
pub fn estimate_equal_weights(m: usize, gross: f64) -> Result<WeightVector> {
    if m == 0 {
        return Err(Error::InvalidInput(
            "equal weights need at least one asset".into(),
        ));
    }
    WeightVector::unlabeled(DVector::from_element(m, gross / m as f64))
}

fn checked_cov(mo: &SampleMoments) -> Result<()> {
    let m = mo.n_assets();
    if m + 1 > mo.n_obs {
        return Err(Error::DegenerateMoments {
            condition: f64::INFINITY,
        });
    }
    let condition = SortedEigen::new(&mo.cov).condition_number();
    if !(condition < MAX_CONDITION) {
        return Err(Error::DegenerateMoments { condition });
    }
    Ok(())
}

fn solve_cov(mo: &SampleMoments, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    cholesky_solve(&mo.cov, rhs).ok_or(Error::DegenerateMoments {
        condition: f64::INFINITY,
    })
}

/// ω = Σ̂⁻¹1 / (1ᵀΣ̂⁻¹1), returned as relative weights.
pub fn estimate_min_variance(returns: &ReturnsMatrix) -> Result<WeightVector> {
    let mo = compute_moments(returns);
    checked_cov(&mo)?;
    let ones = DVector::from_element(mo.n_assets(), 1.0);
    let dir = solve_cov(&mo, &ones)?;
    labeled(returns, &dir / dir.sum())
}

/// Minimizes (1/n)‖y − Xθ‖² subject to θ ≥ 0 by projected coordinate descent.
pub fn mv_noshort_system(sys: &RegressionSystem) -> Result<DVector<f64>> {
    let m = sys.n_assets();
    let mut theta: DVector<f64> = DVector::zeros(m);
    let mut resid = sys.xty.clone();
    for _ in 0..NOSHORT_MAX_SWEEPS {
        let mut max_step: f64 = 0.0;
        for j in 0..m {
            let g_jj = sys.gram[(j, j)];
            let old = theta[j];
            let new = if g_jj > 0.0 {
                ((resid[j] + g_jj * old) / g_jj).max(0.0)
            } else {
                0.0
            };
            let step = new - old;
            if step != 0.0 {
                resid.axpy(-step, &sys.gram.column(j), 1.0);
                theta[j] = new;
                max_step = max_step.max(step.abs());
            }
        }
        if max_step < STEP_TOLERANCE {
            if noshort_kkt_residual(sys, &theta) <= KKT_TOLERANCE {
                return Ok(theta);
            }
            resid = &sys.xty - &sys.gram * &theta;
        }
    }
    Err(Error::NonConvergence {
        iterations: NOSHORT_MAX_SWEEPS,
        residual: noshort_kkt_residual(sys, &theta),
    })
}

/// Largest violation of θ ≥ 0, ∇ ≥ 0 and θⱼ∇ⱼ = 0.
pub fn noshort_kkt_residual(sys: &RegressionSystem, theta: &DVector<f64>) -> f64 {
    let grad = (&sys.gram * theta - &sys.xty) * (2.0 / sys.n_obs as f64);
    grad.iter()
        .zip(theta.iter())
        .map(|(&g, &t)| {
            if t < 0.0 {
                -t
            } else if t > 0.0 {
                g.abs()
            } else {
                (-g).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

pub fn estimate_mv_noshort(returns: &ReturnsMatrix, r_bar: f64) -> Result<WeightVector> {
    let sys = RegressionSystem::from_returns(returns, r_bar)?;
    labeled(returns, mv_noshort_system(&sys)?)
}

/// Shrinkage weight v = (m+2) / ((m+2) + n (μ̂ − μ_g1)ᵀΣ̂⁻¹(μ̂ − μ_g1)) and the
/// grand mean μ_g = 1ᵀΣ̂⁻¹μ̂ / 1ᵀΣ̂⁻¹1 it shrinks toward.
pub fn empirical_bayes_shrinkage(mo: &SampleMoments) -> Result<(f64, f64)> {
    checked_cov(mo)?;
    let m = mo.n_assets();
    let ones = DVector::from_element(m, 1.0);
    let inv_ones = solve_cov(mo, &ones)?;
    let grand_mean = inv_ones.dot(&mo.mean) / inv_ones.sum();
    let dev = &mo.mean - &ones * grand_mean;
    let quad = dev.dot(&solve_cov(mo, &dev)?);
    let k = m as f64 + 2.0;
    Ok((k / (k + mo.n_obs as f64 * quad), grand_mean))
}

/// Traditional weights with μ̂ replaced by (1 − v)μ̂ + v μ_g 1 for a given v.
pub fn estimate_empirical_bayes_with_shrinkage(
    returns: &ReturnsMatrix,
    r_bar: f64,
    shrinkage: f64,
) -> Result<WeightVector> {
    if !(0.0..=1.0).contains(&shrinkage) {
        return Err(Error::InvalidInput(format!(
            "shrinkage {shrinkage} outside [0, 1]"
        )));
    }
    let mo = compute_moments(returns);
    let (_, grand_mean) = empirical_bayes_shrinkage(&mo)?;
    labeled(
        returns,
        shrunk_mean_weights(&mo, r_bar, shrinkage, grand_mean)?,
    )
}

fn shrunk_mean_weights(
    mo: &SampleMoments,
    r_bar: f64,
    shrinkage: f64,
    grand_mean: f64,
) -> Result<DVector<f64>> {
    if !(r_bar > 0.0) {
        return Err(Error::InvalidInput(format!(
            "r_bar must be positive, got {r_bar}"
        )));
    }
    let m = mo.n_assets();
    let shrunk = &mo.mean * (1.0 - shrinkage) + DVector::from_element(m, shrinkage * grand_mean);
    let second: DMatrix<f64> = &mo.cov + &shrunk * shrunk.transpose();
    cholesky_solve(&second, &(shrunk * r_bar)).ok_or(Error::DegenerateMoments {
        condition: f64::INFINITY,
    })
}

pub fn estimate_empirical_bayes(returns: &ReturnsMatrix, r_bar: f64) -> Result<WeightVector> {
    let mo = compute_moments(returns);
    let m = mo.n_assets();
    if mo.n_obs <= m + 2 {
        return Err(Error::DegenerateMoments {
            condition: f64::INFINITY,
        });
    }
    let (v, grand_mean) = empirical_bayes_shrinkage(&mo)?;
    labeled(returns, shrunk_mean_weights(&mo, r_bar, v, grand_mean)?)
}
