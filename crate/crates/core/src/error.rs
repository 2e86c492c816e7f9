use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("invalid operator: {0}")]
    InvalidOperator(String),

    #[error("result dimension {dim} exceeds the configured cap {cap}")]
    SizeLimit { dim: usize, cap: usize },

    #[error("effect {index} is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    Positivity { index: usize, min_eigenvalue: f64 },

    #[error("normalization violated: {0}")]
    Normalization(String),

    #[error("unknown polytope '{0}'")]
    UnknownSolid(String),

    #[error("matrix {index} is not unitary (deviation {deviation:e})")]
    NonUnitary { index: usize, deviation: f64 },

    #[error("{name} = {value} is outside its admissible range")]
    Range { name: &'static str, value: f64 },

    #[error("no rational approximation reproduces the effect traces: {0}")]
    Approximation(String),

    #[error("measurement is not uniform: {0}")]
    NotUniform(String),

    #[error("closed-form coefficients are degenerate (D*gamma - alpha^3 = {0:e})")]
    Degenerate(f64),

    #[error("measurement is not informationally complete (eigenvalue ratio {ratio:e})")]
    NotInformationallyComplete { ratio: f64 },

    #[error("closed-form shadows disagree with the inverted frame by {deviation:e}")]
    NotRigidlySymmetric { deviation: f64 },

    #[error("Bloch frame matrix H is singular")]
    SingularH,

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("no data to aggregate")]
    EmptyData,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("observable is not in factorized form: {0}")]
    NotFactorized(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable name of the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Dimension { .. } => "DimensionError",
            Error::InvalidOperator(_) => "InvalidOperatorError",
            Error::SizeLimit { .. } => "SizeLimitError",
            Error::Positivity { .. } => "PositivityError",
            Error::Normalization(_) => "NormalizationError",
            Error::UnknownSolid(_) => "UnknownSolidError",
            Error::NonUnitary { .. } => "NonUnitaryError",
            Error::Range { .. } => "RangeError",
            Error::Approximation(_) => "ApproximationError",
            Error::NotUniform(_) => "NotUniformError",
            Error::Degenerate(_) => "DegenerateError",
            Error::NotInformationallyComplete { .. } => "NotInformationallyCompleteError",
            Error::NotRigidlySymmetric { .. } => "NotRigidlySymmetricError",
            Error::SingularH => "SingularHError",
            Error::InvalidState(_) => "InvalidStateError",
            Error::EmptyData => "EmptyDataError",
            Error::Config(_) => "ConfigError",
            Error::NotFactorized(_) => "NotFactorizedError",
            Error::Io(_) => "IoError",
            Error::Json(_) => "ParseError",
        }
    }
}
