use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::estimators::{
    estimate_empirical_bayes, estimate_equal_weights, estimate_min_variance, estimate_mv_noshort,
    estimate_penalized, estimate_spike_slab, PenaltyKind, PenaltySpec, SpikeSlabConfig,
    SpikeSlabPosterior,
};
use crate::model_selection::{cross_validate, default_grid, make_folds, CvCurve, DEFAULT_FOLDS};
use crate::population::PopulationSpec;
use crate::returns::ReturnsMatrix;
use crate::risk::optimal_weights;
use crate::rng::derive_seed;
use crate::weights::WeightVector;

/// How a penalty is set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Policy {
    Fixed(f64),
    Cv,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Strategy {
    /// The population optimum θ*; only available when the population is known.
    Population,
    /// Pinned weights, independent of the data.
    Fixed(DVector<f64>),
    Mv,
    Ridge(Policy),
    Lasso(Policy),
    Pcr(Policy),
    SpikeSlab(SpikeSlabConfig),
    EqualWeight {
        gross: f64,
    },
    MvNoShort,
    MinVariance,
    EmpiricalBayes,
}

impl Strategy {
    pub fn name(&self) -> String {
        self.to_string()
    }

    /// True when the penalty is picked by cross-validation.
    pub fn uses_cv(&self) -> bool {
        matches!(
            self,
            Strategy::Ridge(Policy::Cv) | Strategy::Lasso(Policy::Cv) | Strategy::Pcr(Policy::Cv)
        )
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let penalized = |f: &mut fmt::Formatter<'_>, base: &str, p: &Policy| match p {
            Policy::Cv => write!(f, "{base}"),
            Policy::Fixed(v) => write!(f, "{base}={v}"),
        };
        match self {
            Strategy::Population => write!(f, "population"),
            Strategy::Fixed(_) => write!(f, "fixed"),
            Strategy::Mv => write!(f, "mv"),
            Strategy::Ridge(p) => penalized(f, "ridge", p),
            Strategy::Lasso(p) => penalized(f, "lasso", p),
            Strategy::Pcr(p) => penalized(f, "pcr", p),
            Strategy::SpikeSlab(_) => write!(f, "spike_slab"),
            Strategy::EqualWeight { gross } if *gross == 1.0 => write!(f, "equal"),
            Strategy::EqualWeight { gross } => write!(f, "equal={gross}"),
            Strategy::MvNoShort => write!(f, "mv_noshort"),
            Strategy::MinVariance => write!(f, "min_variance"),
            Strategy::EmpiricalBayes => write!(f, "empirical_bayes"),
        }
    }
}

impl FromStr for Strategy {
    type Err = Error;

    /// `name` or `name=value`; penalized strategies without a value use CV.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (base, value) = match s.split_once('=') {
            Some((b, v)) => (b.trim(), Some(v.trim())),
            None => (s, None),
        };
        let number = |v: &str| -> Result<f64> {
            v.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::InvalidInput(format!("bad value in strategy '{s}'")))
        };
        let policy = |value: Option<&str>| -> Result<Policy> {
            match value {
                None | Some("cv") => Ok(Policy::Cv),
                Some(v) => Ok(Policy::Fixed(number(v)?)),
            }
        };
        let plain = |st: Strategy| -> Result<Strategy> {
            match value {
                None => Ok(st),
                Some(_) => Err(Error::InvalidInput(format!(
                    "strategy '{base}' takes no value"
                ))),
            }
        };
        match base {
            "population" => plain(Strategy::Population),
            "mv" | "ols" => plain(Strategy::Mv),
            "ridge" => Ok(Strategy::Ridge(policy(value)?)),
            "lasso" => Ok(Strategy::Lasso(policy(value)?)),
            "pcr" => {
                let p = policy(value)?;
                if let Policy::Fixed(k) = p {
                    if !(k >= 1.0 && k.fract() == 0.0) {
                        return Err(Error::InvalidInput(format!(
                            "pcr needs an integer k, got {k}"
                        )));
                    }
                }
                Ok(Strategy::Pcr(p))
            }
            "spike_slab" => plain(Strategy::SpikeSlab(SpikeSlabConfig::default())),
            "equal" => Ok(Strategy::EqualWeight {
                gross: value.map(number).transpose()?.unwrap_or(1.0),
            }),
            "mv_noshort" => plain(Strategy::MvNoShort),
            "min_variance" => plain(Strategy::MinVariance),
            "empirical_bayes" => plain(Strategy::EmpiricalBayes),
            _ => Err(Error::InvalidInput(format!("unknown strategy '{base}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CvFolds {
    K(usize),
    LeaveOneOut,
}

impl CvFolds {
    pub fn count(&self, n: usize) -> usize {
        match *self {
            CvFolds::K(k) => k,
            CvFolds::LeaveOneOut => n,
        }
    }
}

impl Default for CvFolds {
    fn default() -> Self {
        CvFolds::K(DEFAULT_FOLDS)
    }
}

/// Settings shared by every strategy fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitContext {
    pub r_bar: f64,
    pub folds: CvFolds,
    /// Seeds fold assignment and the Gibbs sampler.
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategyResult {
    pub name: String,
    pub weights: WeightVector,
    /// Penalty used, when the strategy has one.
    pub chosen: Option<f64>,
    pub cv: Option<CvCurve>,
    pub posterior: Option<SpikeSlabPosterior>,
}

fn penalized(
    returns: &ReturnsMatrix,
    ctx: &FitContext,
    kind: PenaltyKind,
    policy: Policy,
) -> Result<(WeightVector, f64, Option<CvCurve>)> {
    match policy {
        Policy::Fixed(v) => {
            let w = estimate_penalized(returns, ctx.r_bar, &PenaltySpec::from_grid(kind, v))?;
            Ok((w, v, None))
        }
        Policy::Cv => {
            let n = returns.n_periods();
            let plan = make_folds(n, ctx.folds.count(n), ctx.seed)?;
            let grid = default_grid(returns, ctx.r_bar, kind, &plan)?;
            let curve = cross_validate(returns, ctx.r_bar, kind, &grid, &plan)?;
            let w = estimate_penalized(
                returns,
                ctx.r_bar,
                &PenaltySpec::from_grid(kind, curve.chosen),
            )?;
            Ok((w, curve.chosen, Some(curve)))
        }
    }
}

/// Fits `strategy` on `returns`. `pop` is needed only by [`Strategy::Population`].
pub fn fit_strategy(
    strategy: &Strategy,
    returns: &ReturnsMatrix,
    ctx: &FitContext,
    pop: Option<&PopulationSpec>,
) -> Result<StrategyResult> {
    let labels = returns.asset_labels().to_vec();
    let m = returns.n_assets();
    let mut chosen = None;
    let mut cv = None;
    let mut posterior = None;
    let weights = match strategy {
        Strategy::Population => {
            let pop = pop.ok_or_else(|| {
                Error::InvalidInput("population strategy needs a population".into())
            })?;
            if pop.n_assets() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    actual: pop.n_assets(),
                });
            }
            WeightVector::new(optimal_weights(pop)?.theta, labels)?
        }
        Strategy::Fixed(theta) => {
            if theta.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    actual: theta.len(),
                });
            }
            WeightVector::new(theta.clone(), labels)?
        }
        Strategy::Mv => estimate_penalized(returns, ctx.r_bar, &PenaltySpec::None)?,
        Strategy::Ridge(p) | Strategy::Lasso(p) | Strategy::Pcr(p) => {
            let kind = match strategy {
                Strategy::Ridge(_) => PenaltyKind::Ridge,
                Strategy::Lasso(_) => PenaltyKind::Lasso,
                _ => PenaltyKind::Pcr,
            };
            let (w, value, curve) = penalized(returns, ctx, kind, *p)?;
            chosen = Some(value);
            cv = curve;
            w
        }
        Strategy::SpikeSlab(cfg) => {
            let cfg = SpikeSlabConfig {
                seed: derive_seed(ctx.seed, &[cfg.seed]),
                ..cfg.clone()
            };
            let post = estimate_spike_slab(returns, ctx.r_bar, &cfg)?;
            let w = post.point_estimate.clone();
            posterior = Some(post);
            w
        }
        Strategy::EqualWeight { gross } => {
            WeightVector::new(estimate_equal_weights(m, *gross)?.theta, labels)?
        }
        Strategy::MvNoShort => estimate_mv_noshort(returns, ctx.r_bar)?,
        Strategy::MinVariance => estimate_min_variance(returns)?,
        Strategy::EmpiricalBayes => estimate_empirical_bayes(returns, ctx.r_bar)?,
    };
    Ok(StrategyResult {
        name: strategy.name(),
        weights,
        chosen,
        cv,
        posterior,
    })
}
