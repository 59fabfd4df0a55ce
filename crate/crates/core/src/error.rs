use thiserror::Error;

/// Errors produced by the divergence, bound, and estimation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid function of interest: {0}")]
    InvalidFoI(String),

    /// A named input field failed validation.
    #[error("invalid `{field}`: {reason}")]
    InvalidInput { field: &'static str, reason: String },

    #[error("support mismatch: {0}")]
    SupportMismatch(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(
        "quadrature did not converge: estimate {estimate:e}, error {error:e} after {subdivisions} subdivisions"
    )]
    QuadratureNonConvergence {
        estimate: f64,
        error: f64,
        subdivisions: usize,
    },

    #[error("divergent integral: {0}")]
    DivergentIntegral(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("fewer than two values (got {0})")]
    TooFewValues(usize),

    #[error("non-finite value at row {row}")]
    NonFiniteRow { row: usize },

    #[error("zero variance under `{foi}`: the bound needs a non-constant statistic")]
    ZeroVariance { foi: String },

    #[error("row {row}: cannot parse `{content}`")]
    MalformedRow { row: usize, content: String },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("i/o error: {0}")]
    Io(String),

    #[error("no function of interest was applicable")]
    NoApplicableFoI,
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidInput {
        field,
        reason: reason.into(),
    }
}
