//! Monte-Carlo simulation study and rolling-sample backtest.

mod backtest;
mod simulation;
mod strategy;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::population::PopulationSpec;
use crate::returns::ReturnsMatrix;

pub use backtest::{
    jobson_korkie_test, run_backtest, significance_stars, BacktestConfig, BacktestResult, JkStat,
};
pub use simulation::{run_simulation, SimulationCell, SimulationConfig, SimulationTable};
pub use strategy::{fit_strategy, CvFolds, FitContext, Policy, Strategy, StrategyResult};

/// Defaults of the built-in generators.
pub const DECAY: f64 = 0.7;
pub const FLOOR: f64 = 0.02;
pub const SHARPE: f64 = 0.5;

/// n iid rows from N(μ, Σ), drawn as μ + L z with Σ = L Lᵀ.
pub fn sample_returns(pop: &PopulationSpec, n: usize, seed: u64) -> Result<ReturnsMatrix> {
    if n == 0 {
        return Err(Error::InvalidInput("sample size must be positive".into()));
    }
    let l = pop
        .sigma
        .clone()
        .cholesky()
        .ok_or(Error::SingularPopulation)?
        .unpack();
    let m = pop.n_assets();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = DMatrix::zeros(n, m);
    let mut z = DVector::zeros(m);
    for i in 0..n {
        for v in z.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        let row = &pop.mu + &l * &z;
        data.set_row(i, &row.transpose());
    }
    ReturnsMatrix::from_matrix(data)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CovarianceModel {
    /// Eigenvalues proportional to decayⁱ + floor. The leading eigenvector is a
    /// noisy equal-weight (market) direction, the rest are random.
    DecayingSpectrum { decay: f64, floor: f64 },
    /// Common correlation ρ between every pair.
    Equicorrelated { rho: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeanModel {
    /// Only the first `active` assets carry a premium.
    Sparse { active: usize },
    /// The premium is earned by the `factors` leading eigenvectors, with
    /// geometrically decreasing prices of risk.
    Factor { factors: usize },
}

/// Built-in synthetic market.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticPopulation {
    pub m: usize,
    pub covariance: CovarianceModel,
    pub mean: MeanModel,
    /// Average asset volatility.
    pub vol: f64,
    /// Maximal Sharpe ratio √(μᵀΣ⁻¹μ) the premium is scaled to.
    pub sharpe: f64,
    pub r_bar: f64,
    pub seed: u64,
}

impl SyntheticPopulation {
    pub fn decaying(m: usize, seed: u64) -> Self {
        Self {
            m,
            covariance: CovarianceModel::DecayingSpectrum {
                decay: DECAY,
                floor: FLOOR,
            },
            mean: MeanModel::Factor { factors: 3.min(m) },
            vol: 0.05,
            sharpe: SHARPE,
            r_bar: 1.0,
            seed,
        }
    }

    pub fn equicorrelated(m: usize, seed: u64) -> Self {
        Self {
            m,
            covariance: CovarianceModel::Equicorrelated { rho: 0.95 },
            mean: MeanModel::Sparse { active: 3.min(m) },
            vol: 0.05,
            sharpe: SHARPE,
            r_bar: 1.0,
            seed,
        }
    }

    pub fn build(&self) -> Result<PopulationSpec> {
        let m = self.m;
        if m == 0 {
            return Err(Error::InvalidInput(
                "population needs at least one asset".into(),
            ));
        }
        if !(self.vol > 0.0 && self.sharpe > 0.0) {
            return Err(Error::InvalidInput(
                "vol and sharpe must be positive".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let var = self.vol * self.vol;
        let (sigma, eigen) = match self.covariance {
            CovarianceModel::DecayingSpectrum { decay, floor } => {
                if !(decay > 0.0 && decay <= 1.0 && floor >= 0.0) {
                    return Err(Error::InvalidInput(format!(
                        "need decay in (0, 1] and floor >= 0, got {decay}, {floor}"
                    )));
                }
                let mut g = DMatrix::from_fn(m, m, |_, _| rng.sample::<f64, _>(StandardNormal));
                for i in 0..m {
                    g[(i, 0)] = 1.0 + 0.3 * g[(i, 0)];
                }
                let mut q = g.qr().q();
                if q.column(0).sum() < 0.0 {
                    q.column_mut(0).neg_mut();
                }
                let raw: Vec<f64> = (0..m).map(|i| decay.powi(i as i32) + floor).collect();
                let scale = m as f64 * var / raw.iter().sum::<f64>();
                let values = DVector::from_iterator(m, raw.iter().map(|v| v * scale));
                let mut s = &q * DMatrix::from_diagonal(&values) * q.transpose();
                crate::linalg::symmetrize(&mut s);
                (s, Some((values, q)))
            }
            CovarianceModel::Equicorrelated { rho } => {
                if !(rho > -1.0 / (m as f64 - 1.0).max(1.0) && rho < 1.0) {
                    return Err(Error::SingularPopulation);
                }
                let s = DMatrix::from_fn(m, m, |i, j| if i == j { var } else { rho * var });
                (s, None)
            }
        };
        let mut mu = match self.mean {
            MeanModel::Sparse { active } => {
                if active == 0 || active > m {
                    return Err(Error::InvalidInput(format!(
                        "need 1 <= active ({active}) <= m ({m})"
                    )));
                }
                let mut mu = DVector::zeros(m);
                for j in 0..active {
                    mu[j] = self.vol * rng.random_range(0.5..1.5);
                }
                mu
            }
            MeanModel::Factor { factors } => {
                if factors == 0 || factors > m {
                    return Err(Error::InvalidInput(format!(
                        "need 1 <= factors ({factors}) <= m ({m})"
                    )));
                }
                let (values, q) = match eigen {
                    Some(e) => e,
                    None => {
                        let e = crate::linalg::SortedEigen::new(&sigma);
                        (e.values, e.vectors)
                    }
                };
                // μ = Σ w with w in the span of the leading eigenvectors
                let mut mu = DVector::zeros(m);
                for i in 0..factors {
                    let price = 0.5f64.powi(i as i32) * rng.random_range(0.5..1.5);
                    mu.axpy(price * values[i], &q.column(i), 1.0);
                }
                mu
            }
        };
        let dir = crate::linalg::cholesky_solve(&sigma, &mu).ok_or(Error::SingularPopulation)?;
        mu *= self.sharpe / mu.dot(&dir).sqrt();
        PopulationSpec::new(mu, sigma, self.r_bar)
    }
}
