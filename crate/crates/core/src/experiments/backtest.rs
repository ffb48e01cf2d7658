use rayon::prelude::*;
use statrs::function::erf::erfc;

use super::strategy::{fit_strategy, CvFolds, FitContext, Strategy};
use crate::error::{Error, Result};
use crate::returns::ReturnsMatrix;
use crate::rng::derive_seed;

#[derive(Debug, Clone, PartialEq)]
pub struct BacktestConfig {
    /// Estimation window length n.
    pub window: usize,
    pub strategies: Vec<Strategy>,
    pub folds: CvFolds,
    pub seed: u64,
    pub r_bar: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JkStat {
    pub z: f64,
    /// Two-sided p-value under the standard normal.
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BacktestResult {
    pub strategies: Vec<String>,
    /// Period labels of the out-of-sample returns.
    pub periods: Vec<String>,
    /// `oos_returns[s][t]`, T − n entries per strategy.
    pub oos_returns: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
    /// Sample standard deviation (1/(T−n−1)).
    pub std: Vec<f64>,
    /// mean / std; `None` when std is zero or the strategy failed in every window.
    pub sharpe: Vec<Option<f64>>,
    /// `jk[q][l]` tests Sharpe(q) = Sharpe(l); positive z favours q.
    pub jk: Vec<Vec<Option<JkStat>>>,
    /// Per-strategy messages for windows that fell back to a zero position.
    pub diagnostics: Vec<Vec<String>>,
    pub failed: Vec<bool>,
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = if x.len() > 1 {
        x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var)
}

/// Rolling-sample backtest: for t = n..T−1 every strategy is fit on rows
/// t−n..t−1 and earns x_tᵀθ̂ in period t. Cross-validation reruns in each
/// window with folds seeded by (seed, t).
pub fn run_backtest(returns: &ReturnsMatrix, cfg: &BacktestConfig) -> Result<BacktestResult> {
    let t_total = returns.n_periods();
    if cfg.window < 2 || cfg.window >= t_total {
        return Err(Error::InvalidInput(format!(
            "window {} must lie in 2..{t_total}",
            cfg.window
        )));
    }
    if cfg.strategies.is_empty() {
        return Err(Error::InvalidInput("no strategies".into()));
    }
    let n_strat = cfg.strategies.len();
    // per_window[t - n][s]
    let per_window: Vec<Vec<Result<f64>>> = (cfg.window..t_total)
        .into_par_iter()
        .map(|t| {
            let train = match returns.window(t - cfg.window, t) {
                Ok(x) => x,
                Err(e) => return vec![Err(e); n_strat],
            };
            let ctx = FitContext {
                r_bar: cfg.r_bar,
                folds: cfg.folds,
                seed: derive_seed(cfg.seed, &[t as u64]),
            };
            let x_t = returns.row(t);
            cfg.strategies
                .iter()
                .map(|s| fit_strategy(s, &train, &ctx, None).map(|r| r.weights.theta.dot(&x_t)))
                .collect()
        })
        .collect();

    let periods = returns.period_index()[cfg.window..].to_vec();
    let mut oos_returns = vec![Vec::with_capacity(periods.len()); n_strat];
    let mut diagnostics = vec![Vec::new(); n_strat];
    let mut successes = vec![0usize; n_strat];
    for (w, row) in per_window.into_iter().enumerate() {
        for (s, r) in row.into_iter().enumerate() {
            match r {
                Ok(v) => {
                    successes[s] += 1;
                    oos_returns[s].push(v);
                }
                Err(e) => {
                    diagnostics[s].push(format!("{}: {e}", periods[w]));
                    oos_returns[s].push(0.0);
                }
            }
        }
    }
    let failed: Vec<bool> = successes.iter().map(|&c| c == 0).collect();
    let mut mean = Vec::with_capacity(n_strat);
    let mut std = Vec::with_capacity(n_strat);
    let mut sharpe = Vec::with_capacity(n_strat);
    for s in 0..n_strat {
        let (mu, var) = mean_var(&oos_returns[s]);
        let sd = var.sqrt();
        mean.push(mu);
        std.push(sd);
        sharpe.push((sd > 0.0 && !failed[s]).then(|| mu / sd));
    }
    let jk = (0..n_strat)
        .map(|q| {
            (0..n_strat)
                .map(|l| {
                    if failed[q] || failed[l] {
                        None
                    } else if q == l {
                        sharpe[q].map(|_| JkStat {
                            z: 0.0,
                            p_value: 1.0,
                        })
                    } else {
                        jobson_korkie_test(&oos_returns[q], &oos_returns[l]).ok()
                    }
                })
                .collect()
        })
        .collect();
    Ok(BacktestResult {
        strategies: cfg.strategies.iter().map(|s| s.name()).collect(),
        periods,
        oos_returns,
        mean,
        std,
        sharpe,
        jk,
        diagnostics,
        failed,
    })
}

/// Jobson–Korkie statistic with Memmel's variance for H₀: Sharpe(q) = Sharpe(l).
pub fn jobson_korkie_test(returns_q: &[f64], returns_l: &[f64]) -> Result<JkStat> {
    let t = returns_q.len();
    if t != returns_l.len() {
        return Err(Error::DimensionMismatch {
            expected: t,
            actual: returns_l.len(),
        });
    }
    if t < 3 {
        return Err(Error::DegenerateSeries(format!("length {t} below 3")));
    }
    let (mq, vq) = mean_var(returns_q);
    let (ml, vl) = mean_var(returns_l);
    if !(vq > 0.0 && vl > 0.0) {
        return Err(Error::DegenerateSeries("zero variance".into()));
    }
    let cov = returns_q
        .iter()
        .zip(returns_l)
        .map(|(a, b)| (a - mq) * (b - ml))
        .sum::<f64>()
        / (t as f64 - 1.0);
    let (sq, sl) = (vq.sqrt(), vl.sqrt());
    let numerator = sl * mq - sq * ml;
    if numerator == 0.0 {
        return Ok(JkStat {
            z: 0.0,
            p_value: 1.0,
        });
    }
    // every product below is written so that swapping q and l leaves ψ bit-identical
    let vv = vq * vl;
    let ss = sq * sl;
    let psi = (2.0 * vv - 2.0 * ss * cov + 0.5 * (mq * mq * vl + ml * ml * vq)
        - (mq * ml) / (2.0 * ss) * (cov * cov + vv))
        / t as f64;
    if !(psi > 0.0) {
        return Err(Error::DegenerateSeries(format!(
            "nonpositive variance estimate {psi}"
        )));
    }
    let z = numerator / psi.sqrt();
    Ok(JkStat {
        z,
        p_value: erfc(z.abs() / std::f64::consts::SQRT_2),
    })
}

/// `***`, `**`, `*` for significance at the 1%, 5% and 10% levels.
pub fn significance_stars(p_value: f64) -> &'static str {
    if p_value < 0.01 {
        "***"
    } else if p_value < 0.05 {
        "**"
    } else if p_value < 0.10 {
        "*"
    } else {
        ""
    }
}
