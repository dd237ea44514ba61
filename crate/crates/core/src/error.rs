use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("coincident positions: {0}")]
    CoincidentPositions(String),

    #[error("degenerate backscatter: the backscatter channel is zero")]
    DegenerateBackscatter,

    #[error("composite channel for symbol {0} is zero")]
    ZeroCompositeChannel(&'static str),

    /// `g0` and `g1` point in the same direction: the optimum receiver cannot
    /// separate the two hypotheses.
    #[error("inseparable hypotheses: composite channels are parallel (kappa^2 = {kappa2:e})")]
    InseparableHypotheses { kappa2: f64 },

    #[error("not enough preamble samples for a covariance inverse: L = {samples} < n_r = {antennas}")]
    NotEnoughSamples { samples: usize, antennas: usize },

    #[error("top singular values are tied ({sigma1:e} vs {sigma2:e}); dominant direction is ambiguous")]
    SingularValueTie { sigma1: f64, sigma2: f64 },

    #[error("power iteration did not converge within {iterations} iterations (last step {last_step:e})")]
    NoConvergence {
        iterations: usize,
        last_step: f64,
        last_iterate: Vec<num_complex::Complex64>,
    },

    #[error("series budget exceeded: {needed} terms needed, cap is {cap}; fall back to Monte-Carlo")]
    SeriesBudgetExceeded { needed: usize, cap: usize },

    #[error("closed form disagrees with the dense eigensolver: {0}")]
    EigenMismatch(String),
}
