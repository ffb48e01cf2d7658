//! Run configuration: command-line flags layered over an optional key=value file.
//!
//! Config file keys are the long flag names with `-` replaced by `_`. Blank lines
//! and lines starting with `#` are ignored. Relative paths are resolved against
//! the directory of the config file. Flags given on the command line win.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Parser;
use nalgebra::{DMatrix, DVector};
use regfolio::experiments::{CvFolds, Strategy, SyntheticPopulation};
use regfolio::population::ideal_return;
use regfolio::PopulationSpec;
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};
use crate::ingest::IngestOptions;

pub const DEFAULT_R_BAR: f64 = 1.0;
pub const DEFAULT_ASSETS: usize = 25;
pub const DEFAULT_N_LIST: &[usize] = &[20, 40, 1000];
pub const DEFAULT_REPLICATIONS: usize = 50;
pub const SIMULATE_STRATEGIES: &str = "population,equal,mv,ridge,lasso,pcr";
pub const DATA_STRATEGIES: &str = "mv,ridge,lasso,pcr,equal,min_variance";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Estimate,
    Simulate,
    Backtest,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Command::Estimate => "estimate",
            Command::Simulate => "simulate",
            Command::Backtest => "backtest",
        })
    }
}

impl FromStr for Command {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "estimate" => Ok(Command::Estimate),
            "simulate" => Ok(Command::Simulate),
            "backtest" => Ok(Command::Backtest),
            _ => Err(CliError::Config(format!(
                "unknown command '{s}' (expected estimate, simulate or backtest)"
            ))),
        }
    }
}

/// Mean-variance portfolios estimated as penalized regressions.
///
/// Sharpe ratios of the estimators are invariant to the ideal return r̄; it only
/// rescales the weights. r̄ defaults to 1.
#[derive(Debug, Default, Parser)]
#[command(name = "regfolio", version)]
pub struct Args {
    /// estimate | simulate | backtest (may also come from the config file)
    pub command: Option<String>,
    /// Key=value config file
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Returns CSV: period label, then one column per asset (excess returns)
    #[arg(long)]
    pub input: Option<String>,
    /// Ideal return r̄
    #[arg(long)]
    pub rbar: Option<String>,
    /// Risk aversion α; with --rf sets r̄ = (1 − α r_f)/α
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub rf: Option<String>,
    /// Rolling estimation window (backtest)
    #[arg(long)]
    pub window: Option<String>,
    /// CV folds, or "loo"
    #[arg(long = "cv-k")]
    pub cv_k: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub out: Option<String>,
    /// Comma list, e.g. mv,ridge,ridge=0.5,lasso=cv,pcr=3,equal
    #[arg(long)]
    pub strategies: Option<String>,
    /// Population JSON {"mu": [...], "sigma": [[...]], "r_bar": optional} (simulate)
    #[arg(long)]
    pub population: Option<String>,
    /// Built-in population: decaying | equicorrelated (simulate)
    #[arg(long)]
    pub generator: Option<String>,
    #[arg(long)]
    pub assets: Option<String>,
    #[arg(long = "population-seed")]
    pub population_seed: Option<String>,
    /// Comma list of sample sizes (simulate)
    #[arg(long = "n-list")]
    pub n_list: Option<String>,
    #[arg(long)]
    pub replications: Option<String>,
    /// Column of risk-free returns subtracted from every asset, then dropped
    #[arg(long = "rf-column")]
    pub rf_column: Option<String>,
    /// Drop every row in which some asset return exceeds this value
    #[arg(long = "drop-above")]
    pub drop_above: Option<String>,
    /// Recorded spike-and-slab draws
    #[arg(long = "ss-iter")]
    pub ss_iter: Option<String>,
    #[arg(long = "ss-burn")]
    pub ss_burn: Option<String>,
}

const PATH_KEYS: &[&str] = &["input", "out", "population"];

impl Args {
    fn pairs(&self) -> Vec<(&'static str, Option<&String>)> {
        vec![
            ("command", self.command.as_ref()),
            ("input", self.input.as_ref()),
            ("rbar", self.rbar.as_ref()),
            ("alpha", self.alpha.as_ref()),
            ("rf", self.rf.as_ref()),
            ("window", self.window.as_ref()),
            ("cv_k", self.cv_k.as_ref()),
            ("seed", self.seed.as_ref()),
            ("out", self.out.as_ref()),
            ("strategies", self.strategies.as_ref()),
            ("population", self.population.as_ref()),
            ("generator", self.generator.as_ref()),
            ("assets", self.assets.as_ref()),
            ("population_seed", self.population_seed.as_ref()),
            ("n_list", self.n_list.as_ref()),
            ("replications", self.replications.as_ref()),
            ("rf_column", self.rf_column.as_ref()),
            ("drop_above", self.drop_above.as_ref()),
            ("ss_iter", self.ss_iter.as_ref()),
            ("ss_burn", self.ss_burn.as_ref()),
        ]
    }

    /// Merged settings, config file first, flags on top.
    pub fn settings(&self) -> Result<BTreeMap<String, String>> {
        let mut map = match &self.config {
            Some(path) => read_config_file(path)?,
            None => BTreeMap::new(),
        };
        for (key, value) in self.pairs() {
            if let Some(v) = value {
                map.insert(key.to_string(), v.clone());
            }
        }
        Ok(map)
    }
}

pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new(""));
    let known: Vec<&str> = Args::default().pairs().iter().map(|(k, _)| *k).collect();
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Config(format!(
                "{}:{}: expected key = value",
                path.display(),
                i + 1
            ))
        })?;
        let key = key.trim().replace('-', "_");
        if !known.contains(&key.as_str()) {
            return Err(CliError::Config(format!(
                "{}:{}: unknown key '{key}'",
                path.display(),
                i + 1
            )));
        }
        let mut value = value.trim().to_string();
        if PATH_KEYS.contains(&key.as_str()) && Path::new(&value).is_relative() {
            value = base.join(&value).to_string_lossy().into_owned();
        }
        if map.insert(key.clone(), value).is_some() {
            return Err(CliError::Config(format!(
                "{}:{}: duplicate key '{key}'",
                path.display(),
                i + 1
            )));
        }
    }
    Ok(map)
}

#[derive(Debug, Clone, PartialEq)]
pub enum PopulationSource {
    Decaying { assets: usize, seed: u64 },
    Equicorrelated { assets: usize, seed: u64 },
    File(PathBuf),
}

/// Validated settings for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub input: Option<PathBuf>,
    pub ingest: IngestOptions,
    pub r_bar: f64,
    /// True when r̄ was set explicitly rather than defaulted.
    pub r_bar_given: bool,
    pub alpha: Option<f64>,
    pub rf: Option<f64>,
    pub strategies: Vec<Strategy>,
    pub folds: CvFolds,
    pub seed: u64,
    pub out: PathBuf,
    pub window: Option<usize>,
    pub population: Option<PopulationSource>,
    pub n_list: Vec<usize>,
    pub replications: usize,
    pub ss_iter: Option<usize>,
    pub ss_burn: Option<usize>,
}

fn parse<T: FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<Option<T>> {
    match map.get(key) {
        None => Ok(None),
        Some(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Config(format!("invalid value '{v}' for {key}"))),
    }
}

fn parse_list<T: FromStr>(value: &str, key: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| CliError::Config(format!("invalid entry '{}' in {key}", s.trim())))
        })
        .collect()
}

impl RunConfig {
    pub fn from_args(args: &Args) -> Result<Self> {
        Self::from_settings(&args.settings()?)
    }

    pub fn from_settings(map: &BTreeMap<String, String>) -> Result<Self> {
        let command: Command = map
            .get("command")
            .ok_or_else(|| {
                CliError::Config("missing command (estimate, simulate or backtest)".into())
            })?
            .parse()?;

        let rbar: Option<f64> = parse(map, "rbar")?;
        let alpha: Option<f64> = parse(map, "alpha")?;
        let rf: Option<f64> = parse(map, "rf")?;
        let r_bar = match (rbar, alpha, rf) {
            (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
                return Err(CliError::Config(
                    "give either rbar or alpha with rf, not both".into(),
                ))
            }
            (Some(r), None, None) => r,
            (None, Some(a), Some(f)) => {
                if !(a > 0.0) {
                    return Err(CliError::Config(format!("alpha must be positive, got {a}")));
                }
                ideal_return(a, f)
            }
            (None, None, None) => DEFAULT_R_BAR,
            _ => {
                return Err(CliError::Config(
                    "alpha and rf must be given together".into(),
                ))
            }
        };
        if !(r_bar > 0.0 && r_bar.is_finite()) {
            return Err(CliError::Config(format!(
                "r_bar must be positive, got {r_bar}"
            )));
        }

        let default_strategies = match command {
            Command::Simulate => SIMULATE_STRATEGIES,
            _ => DATA_STRATEGIES,
        };
        let strategies: Vec<Strategy> = map
            .get("strategies")
            .map(String::as_str)
            .unwrap_or(default_strategies)
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| s.parse::<Strategy>().map_err(CliError::from))
            .collect::<Result<_>>()?;
        if strategies.is_empty() {
            return Err(CliError::Config("empty strategy list".into()));
        }
        let mut names: Vec<String> = strategies.iter().map(|s| s.name()).collect();
        names.sort();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(CliError::Config(format!(
                "strategy '{}' listed twice",
                w[0]
            )));
        }

        let folds = match map.get("cv_k").map(|s| s.trim()) {
            None => CvFolds::default(),
            Some("loo") => CvFolds::LeaveOneOut,
            Some(_) => {
                let k: usize = parse(map, "cv_k")?.unwrap();
                if k < 2 {
                    return Err(CliError::Config(format!(
                        "cv_k must be at least 2, got {k}"
                    )));
                }
                CvFolds::K(k)
            }
        };

        let input = map.get("input").map(PathBuf::from);
        if let Some(p) = &input {
            if !p.is_file() {
                return Err(CliError::io(p, "input file not found"));
            }
        }
        match command {
            Command::Estimate | Command::Backtest if input.is_none() => {
                return Err(CliError::Config(format!("{command} needs --input")))
            }
            _ => {}
        }

        let window: Option<usize> = parse(map, "window")?;
        if command == Command::Backtest && window.is_none() {
            return Err(CliError::Config("backtest needs --window".into()));
        }

        let population = if command == Command::Simulate {
            let assets: usize = parse(map, "assets")?.unwrap_or(DEFAULT_ASSETS);
            let seed: u64 = parse(map, "population_seed")?.unwrap_or(0);
            Some(
                match (
                    map.get("population"),
                    map.get("generator").map(String::as_str),
                ) {
                    (Some(_), Some(_)) => {
                        return Err(CliError::Config(
                            "give either population or generator".into(),
                        ))
                    }
                    (Some(p), None) => {
                        let p = PathBuf::from(p);
                        if !p.is_file() {
                            return Err(CliError::io(&p, "population file not found"));
                        }
                        PopulationSource::File(p)
                    }
                    (None, None | Some("decaying")) => PopulationSource::Decaying { assets, seed },
                    (None, Some("equicorrelated")) => {
                        PopulationSource::Equicorrelated { assets, seed }
                    }
                    (None, Some(g)) => {
                        return Err(CliError::Config(format!("unknown generator '{g}'")))
                    }
                },
            )
        } else {
            None
        };

        let n_list = match map.get("n_list") {
            Some(v) => parse_list(v, "n_list")?,
            None => DEFAULT_N_LIST.to_vec(),
        };

        Ok(RunConfig {
            command,
            input,
            ingest: IngestOptions {
                rf_column: map.get("rf_column").cloned(),
                drop_above: parse(map, "drop_above")?,
            },
            r_bar,
            r_bar_given: rbar.is_some() || alpha.is_some(),
            alpha,
            rf,
            strategies,
            folds,
            seed: parse(map, "seed")?.unwrap_or(0),
            out: PathBuf::from(map.get("out").map(String::as_str).unwrap_or("out")),
            window,
            population,
            n_list,
            replications: parse(map, "replications")?.unwrap_or(DEFAULT_REPLICATIONS),
            ss_iter: parse(map, "ss_iter")?,
            ss_burn: parse(map, "ss_burn")?,
        })
    }

    /// Strategies with the spike-and-slab sampler settings applied.
    pub fn resolved_strategies(&self) -> Vec<Strategy> {
        self.strategies
            .iter()
            .map(|s| match s {
                Strategy::SpikeSlab(cfg) => {
                    let mut cfg = cfg.clone();
                    if let Some(n) = self.ss_iter {
                        cfg.n_iter = n;
                    }
                    if let Some(n) = self.ss_burn {
                        cfg.n_burn = n;
                    }
                    Strategy::SpikeSlab(cfg)
                }
                other => other.clone(),
            })
            .collect()
    }

    pub fn cv_label(&self) -> String {
        match self.folds {
            CvFolds::K(k) => k.to_string(),
            CvFolds::LeaveOneOut => "loo".into(),
        }
    }

    /// Canonical settings echo. Files enter by content hash, the output
    /// directory not at all, so moving a run does not change its hash.
    pub fn echo(&self) -> Result<Vec<(String, String)>> {
        let mut e: Vec<(String, String)> = Vec::new();
        let mut push = |k: &str, v: String| e.push((k.to_string(), v));
        push("command", self.command.to_string());
        if let Some(p) = &self.input {
            push("input_sha256", file_sha256(p)?);
        }
        if let Some(c) = &self.ingest.rf_column {
            push("rf_column", c.clone());
        }
        if let Some(x) = self.ingest.drop_above {
            push("drop_above", format!("{x:?}"));
        }
        push("r_bar", format!("{:?}", self.r_bar));
        if let (Some(a), Some(f)) = (self.alpha, self.rf) {
            push("alpha", format!("{a:?}"));
            push("rf", format!("{f:?}"));
        }
        push(
            "strategies",
            self.strategies
                .iter()
                .map(|s| s.name())
                .collect::<Vec<_>>()
                .join(","),
        );
        push("cv_k", self.cv_label());
        push("seed", self.seed.to_string());
        if let Some(cfg) = self
            .resolved_strategies()
            .into_iter()
            .find_map(|s| match s {
                Strategy::SpikeSlab(c) => Some(c),
                _ => None,
            })
        {
            push("ss_iter", cfg.n_iter.to_string());
            push("ss_burn", cfg.n_burn.to_string());
        }
        match self.command {
            Command::Backtest => push("window", self.window.unwrap_or(0).to_string()),
            Command::Simulate => {
                match self.population.as_ref() {
                    Some(PopulationSource::Decaying { assets, seed }) => {
                        push("generator", "decaying".into());
                        push("assets", assets.to_string());
                        push("population_seed", seed.to_string());
                    }
                    Some(PopulationSource::Equicorrelated { assets, seed }) => {
                        push("generator", "equicorrelated".into());
                        push("assets", assets.to_string());
                        push("population_seed", seed.to_string());
                    }
                    Some(PopulationSource::File(p)) => push("population_sha256", file_sha256(p)?),
                    None => {}
                }
                push(
                    "n_list",
                    self.n_list
                        .iter()
                        .map(|n| n.to_string())
                        .collect::<Vec<_>>()
                        .join(","),
                );
                push("replications", self.replications.to_string());
            }
            Command::Estimate => {}
        }
        Ok(e)
    }

    pub fn config_hash(&self) -> Result<String> {
        let mut h = Sha256::new();
        for (k, v) in self.echo()? {
            h.update(format!("{k}={v}\n").as_bytes());
        }
        Ok(hex::encode(h.finalize()))
    }

    /// The population a simulation draws from, with r̄ applied.
    pub fn load_population(&self) -> Result<PopulationSpec> {
        let pop = match self.population.as_ref() {
            Some(PopulationSource::Decaying { assets, seed }) => {
                SyntheticPopulation::decaying(*assets, *seed).build()?
            }
            Some(PopulationSource::Equicorrelated { assets, seed }) => {
                SyntheticPopulation::equicorrelated(*assets, *seed).build()?
            }
            Some(PopulationSource::File(p)) => read_population(p)?,
            None => return Err(CliError::Config("no population configured".into())),
        };
        // a population file keeps its own r̄ unless one is given explicitly
        let from_file = matches!(self.population, Some(PopulationSource::File(_)));
        if from_file && !self.r_bar_given {
            return Ok(pop);
        }
        Ok(pop.with_r_bar(self.r_bar)?)
    }
}

#[derive(Deserialize)]
struct PopulationFile {
    mu: Vec<f64>,
    sigma: Vec<Vec<f64>>,
    r_bar: Option<f64>,
}

/// Reads {"mu": [...], "sigma": [[...], ...], "r_bar": optional}; r̄ defaults to 1.
pub fn read_population(path: &Path) -> Result<PopulationSpec> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let raw: PopulationFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let m = raw.mu.len();
    if raw.sigma.len() != m || raw.sigma.iter().any(|r| r.len() != m) {
        return Err(CliError::Config(format!(
            "{}: sigma must be {m}x{m}",
            path.display()
        )));
    }
    let sigma = DMatrix::from_fn(m, m, |i, j| raw.sigma[i][j]);
    Ok(PopulationSpec::new(
        DVector::from_vec(raw.mu),
        sigma,
        raw.r_bar.unwrap_or(DEFAULT_R_BAR),
    )?)
}

pub fn file_sha256(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}
