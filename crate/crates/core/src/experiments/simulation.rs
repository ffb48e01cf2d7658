use nalgebra::DVector;
use rayon::prelude::*;

use super::sample_returns;
use super::strategy::{fit_strategy, CvFolds, FitContext, Strategy};
use crate::error::{Error, Result};
use crate::population::PopulationSpec;
use crate::risk::{estimation_risk, max_sharpe, population_sharpe};
use crate::rng::derive_seed;

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub pop: PopulationSpec,
    pub n_list: Vec<usize>,
    pub strategies: Vec<Strategy>,
    /// Replications per sample size.
    pub k: usize,
    pub seed: u64,
    pub folds: CvFolds,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::InsufficientSamples(self.k));
        }
        if let Some(&n) = self.n_list.iter().find(|&&n| n < 2) {
            return Err(Error::InvalidInput(format!("sample size {n} below 2")));
        }
        if self.n_list.is_empty() || self.strategies.is_empty() {
            return Err(Error::InvalidInput(
                "empty sample-size or strategy list".into(),
            ));
        }
        Ok(())
    }
}

/// One (strategy, n) entry. `None` marks an infeasible cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationCell {
    pub sharpe: Option<f64>,
    pub risk: Option<f64>,
    /// Replications whose fit failed.
    pub failures: usize,
    /// Replications scored with Sharpe 0 because the portfolio had no risk.
    pub zero_risk: usize,
    /// First failure message, if any.
    pub diagnostic: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTable {
    pub strategies: Vec<String>,
    pub n_list: Vec<usize>,
    /// `cells[s][j]`: strategy s at sample size n_list[j].
    pub cells: Vec<Vec<SimulationCell>>,
    pub population_sharpe: f64,
}

impl SimulationTable {
    pub fn cell(&self, strategy: &str, n: usize) -> Option<&SimulationCell> {
        let s = self.strategies.iter().position(|x| x == strategy)?;
        let j = self.n_list.iter().position(|&x| x == n)?;
        Some(&self.cells[s][j])
    }
}

/// Table of average population Sharpe ratios and estimation risks.
///
/// Every strategy sees the same K training sets for a given n. Failed fits are
/// dropped from a cell's averages; a cell with fewer than two successful
/// replications is infeasible.
pub fn run_simulation(cfg: &SimulationConfig) -> Result<SimulationTable> {
    cfg.validate()?;
    let n_strat = cfg.strategies.len();
    let mut cells = vec![Vec::with_capacity(cfg.n_list.len()); n_strat];
    for &n in &cfg.n_list {
        // fits[rep][s]
        let fits: Vec<Vec<Result<DVector<f64>>>> = (0..cfg.k)
            .into_par_iter()
            .map(|rep| {
                let path = [n as u64, rep as u64];
                let x = match sample_returns(&cfg.pop, n, derive_seed(cfg.seed, &path)) {
                    Ok(x) => x,
                    Err(e) => return vec![Err(e); n_strat],
                };
                let ctx = FitContext {
                    r_bar: cfg.pop.r_bar,
                    folds: cfg.folds,
                    seed: derive_seed(cfg.seed, &[n as u64, rep as u64, 1]),
                };
                cfg.strategies
                    .iter()
                    .map(|s| fit_strategy(s, &x, &ctx, Some(&cfg.pop)).map(|r| r.weights.theta))
                    .collect()
            })
            .collect();
        let mut by_strategy: Vec<Vec<Result<DVector<f64>>>> =
            vec![Vec::with_capacity(cfg.k); n_strat];
        for rep in fits {
            for (s, fit) in rep.into_iter().enumerate() {
                by_strategy[s].push(fit);
            }
        }
        for (s, column) in by_strategy.into_iter().enumerate() {
            cells[s].push(cell(column, &cfg.pop)?);
        }
    }
    Ok(SimulationTable {
        strategies: cfg.strategies.iter().map(|s| s.name()).collect(),
        n_list: cfg.n_list.clone(),
        cells,
        population_sharpe: max_sharpe(&cfg.pop)?,
    })
}

fn cell(fits: Vec<Result<DVector<f64>>>, pop: &PopulationSpec) -> Result<SimulationCell> {
    let total = fits.len();
    let mut ok = Vec::with_capacity(total);
    let mut diagnostic = None;
    for f in fits {
        match f {
            Ok(theta) => ok.push(theta),
            Err(e) => {
                diagnostic.get_or_insert_with(|| e.to_string());
            }
        }
    }
    let failures = total - ok.len();
    if ok.len() < 2 {
        return Ok(SimulationCell {
            sharpe: None,
            risk: None,
            failures,
            zero_risk: 0,
            diagnostic,
        });
    }
    let mut zero_risk = 0;
    let mut sharpe_sum = 0.0;
    for theta in &ok {
        match population_sharpe(theta, pop) {
            Ok(s) => sharpe_sum += s,
            Err(Error::ZeroRiskPortfolio) => zero_risk += 1,
            Err(e) => return Err(e),
        }
    }
    let report = estimation_risk(&ok, pop)?;
    Ok(SimulationCell {
        sharpe: Some(sharpe_sum / ok.len() as f64),
        risk: Some(report.risk),
        failures,
        zero_risk,
        diagnostic,
    })
}
