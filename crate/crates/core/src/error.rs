use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("negative value {value} at index {index}")]
    NegativeValue { index: usize, value: f64 },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("sample too short: need at least {min} values, have {len}")]
    TooShort { len: usize, min: usize },

    #[error("index {index} outside the valid range {lo}..={hi}")]
    IndexOutOfRange { index: usize, lo: usize, hi: usize },

    #[error("top block sum is zero at m = {m}")]
    ZeroDenominator { m: usize },

    #[error("sigma must be positive, got {0}")]
    BadSigma(f64),

    #[error("degenerate truncation at u = {u}: remaining mass {mass}")]
    DegenerateTruncation { u: f64, mass: f64 },

    #[error("grid too coarse: normalization drift {drift:e} exceeds {limit:e}")]
    GridTooCoarse { drift: f64, limit: f64 },

    #[error("rates {0} and {1} coincide; hypoexponential formula is singular")]
    DuplicateRates(f64, f64),

    #[error("invalid rate {0}: rates must be finite and positive")]
    BadRate(f64),

    #[error("quadrature failed: error estimate {estimate:e} above tolerance {tolerance:e}")]
    QuadratureFailure { estimate: f64, tolerance: f64 },

    #[error("computation cancelled")]
    Cancelled,

    #[error("invalid distribution spec: {0}")]
    BadSpec(String),

    #[error("invalid configuration: {0}")]
    BadConfig(String),

    #[error("no knee found")]
    NotFound,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
