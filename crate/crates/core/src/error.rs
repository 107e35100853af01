use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid system space: {0}")]
    InvalidSpace(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("invalid model parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix is not Hermitian (max deviation {deviation:.3e}): {what}")]
    NotHermitian { what: String, deviation: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("Fock cutoff too small: truncated trace {achieved_trace:.12} (deficit above {tolerance:.1e})")]
    CutoffTooSmall { achieved_trace: f64, tolerance: f64 },

    #[error("susceptibility undetermined: denominator {denominator:.3e} vanishes ({hint})")]
    UndeterminedSusceptibility { denominator: f64, hint: String },

    #[error("resonance singularity at element {element}: detuning and damping both vanish")]
    ResonanceSingularity { element: String },

    #[error("oracle did not converge: {0}")]
    NonConvergence(String),

    #[error("integration step too large: dt * frequency scale = {0:.3} > 0.1")]
    StepTooLarge(f64),

    #[error("ill-conditioned polynomial fit (condition number {0:.3e})")]
    IllConditionedFit(f64),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("empty series: {0}")]
    EmptySeries(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Short stable code used in CSV error columns.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidSpace(_) => "InvalidSpace",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::IndexOutOfRange(_) => "IndexOutOfRange",
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::NotHermitian { .. } => "NotHermitian",
            Error::InvalidDensityMatrix(_) => "InvalidDensityMatrix",
            Error::CutoffTooSmall { .. } => "CutoffTooSmall",
            Error::UndeterminedSusceptibility { .. } => "UndeterminedSusceptibility",
            Error::ResonanceSingularity { .. } => "ResonanceSingularity",
            Error::NonConvergence(_) => "NonConvergence",
            Error::StepTooLarge(_) => "StepTooLarge",
            Error::IllConditionedFit(_) => "IllConditionedFit",
            Error::Config(_) => "Config",
            Error::EmptySeries(_) => "EmptySeries",
            Error::Io(_) => "Io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}
