use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("grid size {0} rejected: need an even size of at least 16")]
    InvalidGrid(usize),

    #[error("profile has {found} values, grid expects {expected}")]
    ShapeMismatch { expected: usize, found: usize },

    #[error("profile is not finite at node {node}")]
    NonFinite { node: usize },

    #[error("integrand diverges at x = {endpoint}: extrapolated value {value:e}")]
    Divergent { endpoint: f64, value: f64 },

    #[error("complex dimension {0} is not supported (expected 1..=3)")]
    UnsupportedDimension(usize),

    #[error(
        "potential is not in the admissible space: at x = {x} (node {node}) \
         A_hat = {a_hat:e}, B_hat = {b_hat:e}"
    )]
    NotInPotentialSpace {
        node: usize,
        x: f64,
        a_hat: f64,
        b_hat: f64,
    },

    #[error("wedge multiplicities sum to {found}, expected {expected}")]
    DegreeMismatch { expected: usize, found: usize },

    #[error("coefficient list has length {found}, expected {expected}")]
    CoefficientLength { expected: usize, found: usize },

    #[error("the two J expressions disagree: {first:e} vs {second:e}")]
    ExpressionMismatch { first: f64, second: f64 },

    #[error("Ricci and metric profiles differ by {defect:e} at an endpoint")]
    NonAdmissibleReference { defect: f64 },

    #[error("flow step of size {dt:e} at t = {t} left the admissible space")]
    StepRejected { t: f64, dt: f64 },

    #[error("flow aborted at t = {t}: {reason}")]
    FlowAborted { t: f64, reason: String },

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
