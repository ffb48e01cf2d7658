//! L1-penalized weights by cyclic coordinate descent.
//!
//! The objective is (1/n)‖y − Xθ‖² + λ‖θ‖₁. Working on X'X and X'y, the exact
//! minimizer over coordinate j with the others fixed is
//! S(ρⱼ, nλ/2) / (X'X)ⱼⱼ where ρⱼ = (X'y)ⱼ − Σ_{k≠j}(X'X)ⱼₖθₖ and S is the soft threshold.
//! Coordinate descent crawls on strongly correlated designs, so every few sweeps
//! the stationarity equations are solved directly on the current support and
//! the result is kept if it passes the KKT check.

use nalgebra::DVector;

use super::{labeled, ols_system, RegressionSystem};
use crate::error::{Error, Result};
use crate::linalg::{cholesky_solve, submatrix};
use crate::returns::ReturnsMatrix;
use crate::weights::WeightVector;

pub const LASSO_MAX_SWEEPS: usize = 100_000;
const STEP_TOLERANCE: f64 = 1e-10;
const KKT_TOLERANCE: f64 = 1e-8;
/// Sweeps between attempts to finish exactly on the current support.
const POLISH_EVERY: usize = 10;

fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// Smallest penalty at which the all-zero vector solves the problem.
pub fn lambda_max(sys: &RegressionSystem) -> f64 {
    2.0 / sys.n_obs as f64 * sys.xty.amax()
}

/// Largest violation of the subgradient optimality conditions at `theta`.
pub fn lasso_kkt_residual(sys: &RegressionSystem, theta: &DVector<f64>, lambda: f64) -> f64 {
    let scale = 2.0 / sys.n_obs as f64;
    let grad = (&sys.xty - &sys.gram * theta) * scale;
    grad.iter()
        .zip(theta.iter())
        .map(|(&g, &t)| {
            if t == 0.0 {
                (g.abs() - lambda).max(0.0)
            } else {
                (g - t.signum() * lambda).abs()
            }
        })
        .fold(0.0, f64::max)
}

/// Lasso weights for one penalty, optionally warm-started.
///
/// λ = 0 is the unpenalized problem and is answered by the traditional solution,
/// which fails when X'X is degenerate.
pub fn lasso_system(
    sys: &RegressionSystem,
    lambda: f64,
    warm_start: Option<&DVector<f64>>,
) -> Result<DVector<f64>> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "lasso penalty must be nonnegative, got {lambda}"
        )));
    }
    let m = sys.n_assets();
    if lambda == 0.0 {
        return ols_system(sys);
    }
    if lambda >= lambda_max(sys) {
        return Ok(DVector::zeros(m));
    }

    let threshold = 0.5 * sys.n_obs as f64 * lambda;
    let mut theta = warm_start.cloned().unwrap_or_else(|| DVector::zeros(m));
    // residual correlation X'y − X'Xθ, kept current across coordinate updates
    let mut resid = &sys.xty - &sys.gram * &theta;

    for sweep in 0..LASSO_MAX_SWEEPS {
        if sweep % POLISH_EVERY == POLISH_EVERY - 1 {
            if let Some(exact) = polish(sys, &theta, threshold, lambda) {
                return Ok(exact);
            }
        }
        let mut max_step: f64 = 0.0;
        for j in 0..m {
            let g_jj = sys.gram[(j, j)];
            let old = theta[j];
            let new = if g_jj > 0.0 {
                soft_threshold(resid[j] + g_jj * old, threshold) / g_jj
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
            if lasso_kkt_residual(sys, &theta, lambda) <= KKT_TOLERANCE {
                return Ok(theta);
            }
            // refresh to shed accumulated rounding before continuing
            resid = &sys.xty - &sys.gram * &theta;
        }
    }
    Err(Error::NonConvergence {
        iterations: LASSO_MAX_SWEEPS,
        residual: lasso_kkt_residual(sys, &theta, lambda),
    })
}

/// Solves the stationarity equations on the current support with the current
/// signs. Returns the result only if it keeps those signs and certifies KKT.
fn polish(
    sys: &RegressionSystem,
    theta: &DVector<f64>,
    threshold: f64,
    lambda: f64,
) -> Option<DVector<f64>> {
    let support: Vec<usize> = (0..theta.len()).filter(|&j| theta[j] != 0.0).collect();
    if support.is_empty() {
        return None;
    }
    let gram = submatrix(&sys.gram, &support);
    let rhs = DVector::from_iterator(
        support.len(),
        support
            .iter()
            .map(|&j| sys.xty[j] - threshold * theta[j].signum()),
    );
    let z = cholesky_solve(&gram, &rhs)?;
    let mut out = DVector::zeros(theta.len());
    for (a, &j) in support.iter().enumerate() {
        if z[a].signum() != theta[j].signum() || z[a] == 0.0 {
            return None;
        }
        out[j] = z[a];
    }
    (lasso_kkt_residual(sys, &out, lambda) <= KKT_TOLERANCE).then_some(out)
}

/// Solutions for every penalty in `lambdas`, returned in input order.
///
/// Penalties are visited from largest to smallest, each warm-started from the
/// previous solution.
pub fn lasso_path(sys: &RegressionSystem, lambdas: &[f64]) -> Vec<Result<DVector<f64>>> {
    let mut order: Vec<usize> = (0..lambdas.len()).collect();
    order.sort_by(|&a, &b| lambdas[b].total_cmp(&lambdas[a]));
    let mut out: Vec<Option<Result<DVector<f64>>>> = vec![None; lambdas.len()];
    let mut warm: Option<DVector<f64>> = None;
    for idx in order {
        let res = lasso_system(sys, lambdas[idx], warm.as_ref());
        if let Ok(theta) = &res {
            warm = Some(theta.clone());
        }
        out[idx] = Some(res);
    }
    out.into_iter()
        .map(|r| r.expect("every index visited"))
        .collect()
}

pub fn estimate_lasso(returns: &ReturnsMatrix, r_bar: f64, lambda: f64) -> Result<WeightVector> {
    let sys = RegressionSystem::from_returns(returns, r_bar)?;
    labeled(returns, lasso_system(&sys, lambda, None)?)
}
