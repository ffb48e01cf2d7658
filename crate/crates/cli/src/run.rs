//! The estimate, simulate and backtest commands.

use serde_json::{json, Value};

use regfolio::experiments::{
    fit_strategy, run_backtest, run_simulation, significance_stars, BacktestConfig, FitContext,
    SimulationConfig, StrategyResult,
};
use regfolio::model_selection::CvCurve;
use regfolio::risk::{bias_variance_curve, max_sharpe, optimal_weights, ridge_dominance_bound};
use regfolio::rng::derive_seed;

use crate::config::{Command, RunConfig};
use crate::error::{CliError, Result};
use crate::ingest::ingest_csv_with;
use crate::output::{format_cell, format_number, sanitize, OutputDir};

/// Ridge penalties of the bias/variance table, as multiples of the dominance bound.
pub const BIAS_VARIANCE_MULTIPLES: usize = 41;
const BIAS_VARIANCE_STREAM: u64 = 0xb1a5;

/// What a successful run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub config_hash: String,
    pub files: Vec<String>,
    pub warnings: Vec<String>,
}

pub fn run(cfg: &RunConfig) -> Result<RunSummary> {
    let echo = cfg.echo()?;
    let hash = cfg.config_hash()?;
    let mut out = OutputDir::create(&cfg.out, &hash, cfg.seed)?;
    let (details, warnings) = match cfg.command {
        Command::Estimate => estimate(cfg, &mut out)?,
        Command::Simulate => simulate(cfg, &mut out)?,
        Command::Backtest => backtest(cfg, &mut out)?,
    };
    let config: serde_json::Map<String, Value> = echo
        .into_iter()
        .map(|(k, v)| (k, Value::String(v)))
        .collect();
    let mut files = out.written().to_vec();
    files.push("manifest.json".into());
    let manifest = json!({
        "tool": "regfolio",
        "version": env!("CARGO_PKG_VERSION"),
        "command": cfg.command.to_string(),
        "config_hash": hash,
        "seed": cfg.seed,
        "config": config,
        "files": files,
        "results": details,
    });
    out.write_json("manifest.json", &manifest)?;
    Ok(RunSummary {
        config_hash: hash,
        files: out.written().to_vec(),
        warnings,
    })
}

fn num(x: f64) -> String {
    format_number(x)
}

/// +∞ (an infeasible grid point) prints as "-".
fn finite(x: f64) -> String {
    format_cell(Some(x).filter(|v| v.is_finite()))
}

fn estimate(cfg: &RunConfig, out: &mut OutputDir) -> Result<(Value, Vec<String>)> {
    let input = cfg.input.as_ref().expect("validated");
    let x = ingest_csv_with(input, &cfg.ingest)?;
    let ctx = FitContext {
        r_bar: cfg.r_bar,
        folds: cfg.folds,
        seed: cfg.seed,
    };
    let strategies = cfg.resolved_strategies();
    let mut penalties = Vec::new();
    let mut records = Vec::new();
    let mut warnings = Vec::new();
    let mut first_error = None;
    for s in &strategies {
        let name = s.name();
        match fit_strategy(s, &x, &ctx, None) {
            Ok(res) => {
                write_estimate(out, &res)?;
                penalties.push(vec![name.clone(), format_cell(res.chosen), "ok".into()]);
                records.push(json!({
                    "strategy": name,
                    "status": "ok",
                    "gross": res.weights.gross(),
                    "risk_free": res.weights.risk_free_position(),
                }));
            }
            Err(e) => {
                warnings.push(format!("{name}: {e}"));
                penalties.push(vec![name.clone(), "-".into(), "failed".into()]);
                records
                    .push(json!({ "strategy": name, "status": "failed", "error": e.to_string() }));
                first_error.get_or_insert(e);
            }
        }
    }
    if let Some(e) = first_error {
        if warnings.len() == strategies.len() {
            return Err(CliError::Core(e));
        }
    }
    let header = ["strategy", "penalty", "status"].map(String::from);
    out.write_table("penalties.csv", &header, &penalties)?;
    let details = json!({
        "n_periods": x.n_periods(),
        "n_assets": x.n_assets(),
        "r_bar": cfg.r_bar,
        "strategies": records,
    });
    Ok((details, warnings))
}

fn write_estimate(out: &mut OutputDir, res: &StrategyResult) -> Result<()> {
    let tag = sanitize(&res.name);
    let rows: Vec<Vec<String>> = res
        .weights
        .labels
        .iter()
        .zip(res.weights.theta.iter())
        .map(|(l, &w)| vec![l.clone(), num(w)])
        .collect();
    out.write_table(
        &format!("weights_{tag}.csv"),
        &["asset".into(), "weight".into()],
        &rows,
    )?;
    if let Some(curve) = &res.cv {
        write_cv(out, &format!("cv_{tag}.csv"), curve)?;
    }
    if let Some(post) = &res.posterior {
        let rows: Vec<Vec<String>> = res
            .weights
            .labels
            .iter()
            .enumerate()
            .map(|(j, l)| {
                vec![
                    l.clone(),
                    num(post.inclusion_freq[j]),
                    num(post.point_estimate.theta[j]),
                ]
            })
            .collect();
        let header = ["asset", "inclusion", "posterior_mean"].map(String::from);
        out.write_table(&format!("inclusion_{tag}.csv"), &header, &rows)?;
        let mut header = vec!["draw".to_string(), "sigma2".to_string()];
        header.extend(res.weights.labels.iter().cloned());
        let rows: Vec<Vec<String>> = (0..post.theta_draws.nrows())
            .map(|d| {
                let mut row = vec![(d + 1).to_string(), num(post.sigma2_draws[d])];
                row.extend(post.theta_draws.row(d).iter().map(|&v| num(v)));
                row
            })
            .collect();
        out.write_table(&format!("draws_{tag}.csv"), &header, &rows)?;
    }
    Ok(())
}

fn write_cv(out: &mut OutputDir, name: &str, curve: &CvCurve) -> Result<()> {
    let mut header = vec!["lambda".to_string(), "mean_error".to_string()];
    header.extend((1..=curve.per_fold.len()).map(|f| format!("fold_{f}")));
    let rows: Vec<Vec<String>> = curve
        .lambdas
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            let mut row = vec![num(l), finite(curve.errors[i])];
            row.extend(curve.per_fold.iter().map(|f| finite(f[i])));
            row
        })
        .collect();
    out.write_table(name, &header, &rows)
}

fn simulate(cfg: &RunConfig, out: &mut OutputDir) -> Result<(Value, Vec<String>)> {
    let pop = cfg.load_population()?;
    let sim = SimulationConfig {
        pop: pop.clone(),
        n_list: cfg.n_list.clone(),
        strategies: cfg.resolved_strategies(),
        k: cfg.replications,
        seed: cfg.seed,
        folds: cfg.folds,
    };
    let table = run_simulation(&sim)?;

    let mut header = vec!["strategy".to_string()];
    header.extend(table.n_list.iter().map(|n| format!("n={n}")));
    let rows =
        |pick: &dyn Fn(&regfolio::experiments::SimulationCell) -> Option<f64>| -> Vec<Vec<String>> {
            table
                .strategies
                .iter()
                .zip(&table.cells)
                .map(|(name, cells)| {
                    let mut row = vec![name.clone()];
                    row.extend(cells.iter().map(|c| format_cell(pick(c))));
                    row
                })
                .collect()
        };
    out.write_table("sharpe.csv", &header, &rows(&|c| c.sharpe))?;
    out.write_table("risk.csv", &header, &rows(&|c| c.risk))?;

    let m = pop.n_assets();
    let bound = ridge_dominance_bound(&pop)?;
    let mut bv_rows = Vec::new();
    if bound.is_finite() {
        let multiples: Vec<f64> = (0..BIAS_VARIANCE_MULTIPLES)
            .map(|i| 10f64.powf(i as f64 / 10.0 - 2.0))
            .collect();
        for &n in &cfg.n_list {
            let mut grid: Vec<f64> = if n > m { vec![0.0] } else { Vec::new() };
            grid.extend(multiples.iter().map(|c| c * bound));
            let seed = derive_seed(cfg.seed, &[BIAS_VARIANCE_STREAM, n as u64]);
            let curve = bias_variance_curve(&pop, n, &grid, cfg.replications, seed)?;
            for (l, r) in grid.iter().zip(&curve) {
                bv_rows.push(vec![
                    n.to_string(),
                    num(*l),
                    num(l / bound),
                    num(r.risk),
                    num(r.bias_sq),
                    num(r.variance),
                ]);
            }
        }
    }
    let header = [
        "n",
        "lambda",
        "lambda_over_bound",
        "risk",
        "bias_sq",
        "variance",
    ]
    .map(String::from);
    out.write_table("bias_variance.csv", &header, &bv_rows)?;

    let mut warnings = Vec::new();
    let mut cells = Vec::new();
    for (name, row) in table.strategies.iter().zip(&table.cells) {
        for (n, c) in table.n_list.iter().zip(row) {
            if let Some(d) = &c.diagnostic {
                warnings.push(format!(
                    "{name} at n={n}: {} of {} fits failed ({d})",
                    c.failures, cfg.replications
                ));
            }
            cells.push(json!({
                "strategy": name,
                "n": n,
                "failures": c.failures,
                "zero_risk": c.zero_risk,
                "diagnostic": c.diagnostic,
            }));
        }
    }
    let details = json!({
        "n_assets": m,
        "r_bar": pop.r_bar,
        "population_sharpe": max_sharpe(&pop)?,
        "optimal_weights": optimal_weights(&pop)?.theta.iter().copied().collect::<Vec<f64>>(),
        "ridge_bound": if bound.is_finite() { json!(bound) } else { Value::Null },
        "cells": cells,
    });
    Ok((details, warnings))
}

fn backtest(cfg: &RunConfig, out: &mut OutputDir) -> Result<(Value, Vec<String>)> {
    let input = cfg.input.as_ref().expect("validated");
    let x = ingest_csv_with(input, &cfg.ingest)?;
    let bt = BacktestConfig {
        window: cfg.window.expect("validated"),
        strategies: cfg.resolved_strategies(),
        folds: cfg.folds,
        seed: cfg.seed,
        r_bar: cfg.r_bar,
    };
    let res = run_backtest(&x, &bt)?;
    let names = &res.strategies;

    let mut header = vec!["period".to_string()];
    header.extend(names.iter().cloned());
    let rows: Vec<Vec<String>> = res
        .periods
        .iter()
        .enumerate()
        .map(|(t, p)| {
            let mut row = vec![p.clone()];
            row.extend(res.oos_returns.iter().map(|r| num(r[t])));
            row
        })
        .collect();
    out.write_table("oos_returns.csv", &header, &rows)?;

    let rows: Vec<Vec<String>> = (0..names.len())
        .map(|s| {
            let failed = res.failed[s];
            vec![
                names[s].clone(),
                if failed { "-".into() } else { num(res.mean[s]) },
                if failed { "-".into() } else { num(res.std[s]) },
                format_cell(res.sharpe[s]),
            ]
        })
        .collect();
    out.write_table(
        "sharpe.csv",
        &["strategy", "mean", "std", "sharpe"].map(String::from),
        &rows,
    )?;

    let mut header = vec!["strategy".to_string()];
    header.extend(names.iter().cloned());
    let matrix = |cell: &dyn Fn(&regfolio::experiments::JkStat) -> String| -> Vec<Vec<String>> {
        res.jk
            .iter()
            .enumerate()
            .map(|(q, row)| {
                let mut r = vec![names[q].clone()];
                r.extend(
                    row.iter()
                        .map(|s| s.as_ref().map(cell).unwrap_or_else(|| "-".into())),
                );
                r
            })
            .collect()
    };
    let z = matrix(&|s| format!("{}{}", num(s.z), significance_stars(s.p_value)));
    out.write_table("jk.csv", &header, &z)?;
    let p = matrix(&|s| num(s.p_value));
    out.write_table("jk_pvalues.csv", &header, &p)?;

    let mut warnings = Vec::new();
    let records: Vec<Value> = (0..names.len())
        .map(|s| {
            let d = &res.diagnostics[s];
            if !d.is_empty() {
                warnings.push(format!(
                    "{}: {} window(s) held a zero position",
                    names[s],
                    d.len()
                ));
            }
            json!({ "strategy": names[s], "failed": res.failed[s], "diagnostics": d })
        })
        .collect();
    let details = json!({
        "n_periods": x.n_periods(),
        "n_assets": x.n_assets(),
        "window": bt.window,
        "out_of_sample": res.periods.len(),
        "r_bar": cfg.r_bar,
        "strategies": records,
    });
    Ok((details, warnings))
}
