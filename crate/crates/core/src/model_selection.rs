//! K-fold cross-validation of penalty levels.

use nalgebra::DVector;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::{
    lambda_max, lasso_path, PcrPath, PenaltyKind, RegressionSystem, RidgePath,
};
use crate::returns::ReturnsMatrix;

pub const DEFAULT_FOLDS: usize = 5;
/// Number of log-spaced points in a ridge/lasso grid, before λ = 0 is appended.
pub const GRID_POINTS: usize = 100;
/// Ratio between the smallest and largest positive grid value.
pub const GRID_SPAN: f64 = 1e-4;

/// Random balanced assignment of n observations to k folds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub k: usize,
    /// Fold number (1..=k) of each observation.
    pub assignments: Vec<usize>,
    pub seed: u64,
}

impl FoldPlan {
    pub fn n_obs(&self) -> usize {
        self.assignments.len()
    }

    /// Held-out observations of fold `f` (1-based).
    pub fn test_rows(&self, f: usize) -> Vec<usize> {
        self.assignments
            .iter()
            .enumerate()
            .filter_map(|(i, &a)| (a == f).then_some(i))
            .collect()
    }

    pub fn train_rows(&self, f: usize) -> Vec<usize> {
        self.assignments
            .iter()
            .enumerate()
            .filter_map(|(i, &a)| (a != f).then_some(i))
            .collect()
    }
}

pub fn make_folds(n: usize, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 || k > n {
        return Err(Error::InvalidFoldCount { n, k });
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut assignments = vec![0; n];
    for (pos, &i) in perm.iter().enumerate() {
        assignments[i] = pos % k + 1;
    }
    Ok(FoldPlan {
        k,
        assignments,
        seed,
    })
}

/// Cross-validation error along a penalty grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CvCurve {
    pub kind: PenaltyKind,
    pub lambdas: Vec<f64>,
    /// Mean held-out error per grid point; +∞ where some fold could not be fit.
    pub errors: Vec<f64>,
    /// `per_fold[f][i]`: held-out error of fold f+1 at grid point i.
    pub per_fold: Vec<Vec<f64>>,
    pub chosen: f64,
}

impl CvCurve {
    pub fn chosen_index(&self) -> usize {
        self.lambdas
            .iter()
            .position(|&l| l == self.chosen)
            .expect("chosen value comes from the grid")
    }
}

/// Log-spaced grid from λ_max down to λ_max·10⁻⁴ plus a trailing 0.
pub fn log_grid(top: f64) -> Vec<f64> {
    let mut grid: Vec<f64> = (0..GRID_POINTS)
        .map(|i| top * GRID_SPAN.powf(i as f64 / (GRID_POINTS - 1) as f64))
        .collect();
    grid.push(0.0);
    grid
}

/// Lasso grid on the full sample: starts at the smallest all-zero penalty.
pub fn lasso_grid(returns: &ReturnsMatrix, r_bar: f64) -> Result<Vec<f64>> {
    let sys = RegressionSystem::from_returns(returns, r_bar)?;
    Ok(log_grid(lambda_max(&sys)))
}

/// Ridge grid topped at trace(X'X): the largest penalty then dominates every
/// eigenvalue of X'X. The lasso λ_max is on the scale of r̄·x̄ rather than x'x
/// and sits far below the ridge optimum for returns of realistic size.
pub fn ridge_grid(returns: &ReturnsMatrix, r_bar: f64) -> Result<Vec<f64>> {
    let sys = RegressionSystem::from_returns(returns, r_bar)?;
    Ok(log_grid(sys.gram.trace()))
}

/// Component counts 1..=min(m, smallest training-fold rank).
pub fn pcr_grid(returns: &ReturnsMatrix, plan: &FoldPlan) -> Result<Vec<f64>> {
    let m = returns.n_assets();
    let mut limit = m;
    for f in 1..=plan.k {
        let sys = RegressionSystem::from_rows(returns, &plan.train_rows(f), 1.0)?;
        limit = limit.min(PcrPath::new(&sys).rank());
    }
    Ok((1..=limit).map(|k| k as f64).collect())
}

pub fn default_grid(
    returns: &ReturnsMatrix,
    r_bar: f64,
    kind: PenaltyKind,
    plan: &FoldPlan,
) -> Result<Vec<f64>> {
    match kind {
        PenaltyKind::None => Ok(vec![0.0]),
        PenaltyKind::Ridge => ridge_grid(returns, r_bar),
        PenaltyKind::Lasso => lasso_grid(returns, r_bar),
        PenaltyKind::Pcr => pcr_grid(returns, plan),
    }
}

/// Fits every grid point on one training system; failures become `None`.
pub fn fit_grid(
    sys: &RegressionSystem,
    kind: PenaltyKind,
    grid: &[f64],
) -> Vec<Option<DVector<f64>>> {
    match kind {
        PenaltyKind::None => grid
            .iter()
            .map(|_| crate::estimators::ols_system(sys).ok())
            .collect(),
        PenaltyKind::Ridge => {
            let path = RidgePath::new(sys);
            grid.iter().map(|&l| path.solve(l).ok()).collect()
        }
        PenaltyKind::Lasso => lasso_path(sys, grid).into_iter().map(|r| r.ok()).collect(),
        PenaltyKind::Pcr => {
            let path = PcrPath::new(sys);
            grid.iter()
                .map(|&k| {
                    if k >= 1.0 && k.fract() == 0.0 {
                        path.solve(k as usize).ok()
                    } else {
                        None
                    }
                })
                .collect()
        }
    }
}

/// Penalty preferred when two grid points tie: more shrinkage for ridge/lasso,
/// fewer components for PCR.
fn prefer(kind: PenaltyKind, candidate: f64, incumbent: f64) -> bool {
    match kind {
        PenaltyKind::Pcr => candidate < incumbent,
        _ => candidate > incumbent,
    }
}

pub fn cross_validate(
    returns: &ReturnsMatrix,
    r_bar: f64,
    kind: PenaltyKind,
    grid: &[f64],
    plan: &FoldPlan,
) -> Result<CvCurve> {
    if plan.n_obs() != returns.n_periods() {
        return Err(Error::DimensionMismatch {
            expected: returns.n_periods(),
            actual: plan.n_obs(),
        });
    }
    if grid.is_empty() {
        return Err(Error::InvalidInput("empty penalty grid".into()));
    }
    let per_fold: Vec<Vec<f64>> = (1..=plan.k)
        .into_par_iter()
        .map(|f| -> Result<Vec<f64>> {
            let train = plan.train_rows(f);
            let test = plan.test_rows(f);
            let sys = RegressionSystem::from_rows(returns, &train, r_bar)?;
            Ok(fit_grid(&sys, kind, grid)
                .into_iter()
                .map(|fit| match fit {
                    Some(theta) => returns.mean_squared_shortfall(&test, &theta, r_bar),
                    None => f64::INFINITY,
                })
                .collect())
        })
        .collect::<Result<_>>()?;

    let k = plan.k as f64;
    let errors: Vec<f64> = (0..grid.len())
        .map(|i| per_fold.iter().map(|fold| fold[i]).sum::<f64>() / k)
        .collect();

    let mut best: Option<usize> = None;
    for (i, &e) in errors.iter().enumerate() {
        if !e.is_finite() {
            continue;
        }
        best = match best {
            None => Some(i),
            Some(b) if e < errors[b] || (e == errors[b] && prefer(kind, grid[i], grid[b])) => {
                Some(i)
            }
            keep => keep,
        };
    }
    let chosen = grid[best.ok_or(Error::AllInfeasible)?];
    Ok(CvCurve {
        kind,
        lambdas: grid.to_vec(),
        errors,
        per_fold,
        chosen,
    })
}
