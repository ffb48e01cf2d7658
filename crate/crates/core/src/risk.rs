//! Population quantities: optimal weights, generalisation error, Sharpe ratios
//! and estimation risk.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::{RegressionSystem, RidgePath};
use crate::experiments::sample_returns;
use crate::linalg::cholesky_solve;
use crate::population::PopulationSpec;
use crate::rng::derive_seed;
use crate::weights::{WeightVector, NORMALIZATION_TOLERANCE};

/// Variance below which a portfolio is treated as riskless.
pub const ZERO_RISK_TOLERANCE: f64 = 1e-18;

/// θ* = (Σ + μμᵀ)⁻¹ μ r̄
pub fn optimal_weights(pop: &PopulationSpec) -> Result<WeightVector> {
    let theta = cholesky_solve(&pop.second_moment(), &(&pop.mu * pop.r_bar))
        .ok_or(Error::SingularPopulation)?;
    WeightVector::unlabeled(theta)
}

/// ω* = Σ⁻¹μ / (1ᵀΣ⁻¹μ)
pub fn tangency_weights(pop: &PopulationSpec) -> Result<DVector<f64>> {
    let dir = cholesky_solve(&pop.sigma, &pop.mu).ok_or(Error::SingularPopulation)?;
    let total = dir.sum();
    if total.abs() <= NORMALIZATION_TOLERANCE {
        return Err(Error::DegenerateNormalization(total));
    }
    Ok(dir / total)
}

fn check_dim(theta: &DVector<f64>, pop: &PopulationSpec) -> Result<()> {
    if theta.len() != pop.n_assets() {
        return Err(Error::DimensionMismatch {
            expected: pop.n_assets(),
            actual: theta.len(),
        });
    }
    Ok(())
}

/// F(θ) = (r̄ − μᵀθ)² + θᵀΣθ
pub fn generalisation_error(theta: &DVector<f64>, pop: &PopulationSpec) -> Result<f64> {
    check_dim(theta, pop)?;
    let shortfall = pop.r_bar - pop.mu.dot(theta);
    Ok(shortfall * shortfall + theta.dot(&(&pop.sigma * theta)))
}

pub fn population_sharpe(theta: &DVector<f64>, pop: &PopulationSpec) -> Result<f64> {
    check_dim(theta, pop)?;
    let var = theta.dot(&(&pop.sigma * theta));
    if !(var > ZERO_RISK_TOLERANCE) {
        return Err(Error::ZeroRiskPortfolio);
    }
    Ok(pop.mu.dot(theta) / var.sqrt())
}

/// Largest achievable Sharpe ratio, √(μᵀΣ⁻¹μ).
pub fn max_sharpe(pop: &PopulationSpec) -> Result<f64> {
    let dir = cholesky_solve(&pop.sigma, &pop.mu).ok_or(Error::SingularPopulation)?;
    Ok(pop.mu.dot(&dir).max(0.0).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiskReport {
    pub risk: f64,
    pub bias_sq: f64,
    pub variance: f64,
    pub mean_weights: DVector<f64>,
    pub weight_cov: DMatrix<f64>,
}

/// R̂ = (θ* − θ̄)ᵀA(θ* − θ̄) + tr(A S), with S normalized by K − 1.
pub fn estimation_risk(samples: &[DVector<f64>], pop: &PopulationSpec) -> Result<RiskReport> {
    let k = samples.len();
    if k < 2 {
        return Err(Error::InsufficientSamples(k));
    }
    let m = pop.n_assets();
    for s in samples {
        check_dim(s, pop)?;
    }
    let theta_star = optimal_weights(pop)?.theta;
    let a = pop.second_moment();

    let mut mean = DVector::zeros(m);
    for s in samples {
        mean += s;
    }
    mean /= k as f64;
    let mut cov = DMatrix::zeros(m, m);
    for s in samples {
        let d = s - &mean;
        cov.ger(1.0, &d, &d, 1.0);
    }
    cov /= (k - 1) as f64;

    let bias = &theta_star - &mean;
    let bias_sq = bias.dot(&(&a * &bias));
    let variance = (&a * &cov).trace();
    Ok(RiskReport {
        risk: bias_sq + variance,
        bias_sq,
        variance,
        mean_weights: mean,
        weight_cov: cov,
    })
}

/// λ̄ = 2F* / ‖θ*‖²; ridge beats OLS for every penalty in (0, λ̄). +∞ when θ* = 0.
pub fn ridge_dominance_bound(pop: &PopulationSpec) -> Result<f64> {
    let theta = optimal_weights(pop)?.theta;
    let norm_sq = theta.norm_squared();
    if norm_sq == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(2.0 * generalisation_error(&theta, pop)? / norm_sq)
}

/// Ridge estimation risk along a penalty grid. Replication k draws its training
/// set from the seed stream (seed, k), shared by every λ.
pub fn bias_variance_curve(
    pop: &PopulationSpec,
    n: usize,
    lambdas: &[f64],
    k: usize,
    seed: u64,
) -> Result<Vec<RiskReport>> {
    if k < 2 {
        return Err(Error::InsufficientSamples(k));
    }
    let fits: Vec<Vec<DVector<f64>>> = (0..k)
        .into_par_iter()
        .map(|rep| -> Result<Vec<DVector<f64>>> {
            let x = sample_returns(pop, n, derive_seed(seed, &[rep as u64]))?;
            let sys = RegressionSystem::from_returns(&x, pop.r_bar)?;
            let path = RidgePath::new(&sys);
            lambdas.iter().map(|&l| path.solve(l)).collect()
        })
        .collect::<Result<_>>()?;
    (0..lambdas.len())
        .map(|i| {
            let draws: Vec<DVector<f64>> = fits.iter().map(|f| f[i].clone()).collect();
            estimation_risk(&draws, pop)
        })
        .collect()
}
