use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("sum of positions is too close to zero to normalize ({0:e})")]
    DegenerateNormalization(f64),

    #[error("degenerate moment matrix (condition number {condition:e})")]
    DegenerateMoments { condition: f64 },

    #[error("only {available} positive eigenvalues, {requested} components requested")]
    RankDeficient { requested: usize, available: usize },

    #[error("solver did not converge after {iterations} sweeps (KKT residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("population covariance is not positive definite")]
    SingularPopulation,

    #[error("portfolio variance is zero")]
    ZeroRiskPortfolio,

    #[error("need at least 2 weight samples, got {0}")]
    InsufficientSamples(usize),

    #[error("invalid fold count {k} for {n} observations")]
    InvalidFoldCount { n: usize, k: usize },

    #[error("every grid point is infeasible on at least one fold")]
    AllInfeasible,

    #[error("degenerate return series: {0}")]
    DegenerateSeries(String),
}

pub type Result<T> = std::result::Result<T, Error>;
