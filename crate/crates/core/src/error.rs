use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("leading coefficient a^(1) vanishes at site {site}")]
    LeadingCoefficientZero { site: usize },

    #[error("period {n} and order {order} are not coprime")]
    NotCoprime { n: usize, order: usize },

    #[error("order k+1 = {order} exceeds period n = {n}")]
    OrderExceedsPeriod { n: usize, order: usize },

    #[error("invalid sampling range [{lo}, {hi}]")]
    InvalidRange { lo: f64, hi: f64 },

    #[error("malformed operator: {0}")]
    Malformed(String),

    #[error("curve term w^{i} E^{j} = {value:e} violates the Newton polygon")]
    ShapeViolation { i: usize, j: usize, value: f64 },

    #[error("Floquet multipliers {0} and {1} are not separated")]
    DegenerateRoots(usize, usize),

    #[error("point is not on the spectral curve (|R| = {residual:e})")]
    NotOnCurve { residual: f64 },

    #[error("eigenvalue is not simple (second smallest singular value {sigma:e})")]
    NonSimpleEigenvalue { sigma: f64 },

    #[error("kernel of L(w) at E = 0 is not one-dimensional for multiplier #{index}")]
    NonSimpleKernel { index: usize },

    #[error("dR/dE vanishes at the requested point")]
    DerivativeVanishes,

    #[error("a^(1) at site {site} is not positive (real mode)")]
    NonPositiveLeading { site: usize },

    #[error("series order {requested} unavailable (have {available})")]
    OrderUnavailable { requested: usize, available: usize },

    #[error("chart is only defined for k in {{1, 2}}, got k = {k}")]
    UnsupportedK { k: usize },

    #[error("chart mismatch: {0}")]
    ChartMismatch(String),

    #[error("gradient is not in the range of the symplectic matrix (residual {residual:e})")]
    InconsistentSystem { residual: f64 },

    #[error("denominator minor is singular at site {site}")]
    SingularMinor { site: isize },

    #[error("state left the valid domain at t = {time} (a^(1) at site {site} below threshold)")]
    StateInvalid { time: f64, site: usize },

    #[error("complex coefficient has imaginary part {imag:e}")]
    NotReal { imag: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
