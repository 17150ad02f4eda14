use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("adiabatic index {0} outside (1, 2]")]
    InvalidGamma(f64),

    #[error("velocity is not subluminal: |v|^2 = {0}")]
    InadmissibleVelocity(f64),

    #[error("inadmissible primitive state: {0}")]
    InadmissiblePrimitive(String),

    #[error("primitive recovery failed: {0}")]
    RecoveryFailed(String),

    #[error("logarithmic mean needs positive arguments, got ({0}, {1})")]
    LogMeanDomain(f64, f64),

    #[error("polynomial degree {0} outside the supported range 1..=8")]
    InvalidDegree(usize),

    #[error("unknown problem `{0}`")]
    UnknownProblem(String),

    #[error("unknown Riemann problem `{0}`")]
    UnknownRiemann(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("inadmissible cell average in cell {cell}: {reason}")]
    InadmissibleCellAverage { cell: usize, reason: String },

    #[error("non-finite value detected at t = {time}")]
    NonFinite { time: f64 },

    #[error("boost speed {0} is not subluminal")]
    InvalidBoost(f64),

    #[error("vortex pressure integration failed: {0}")]
    VortexOde(String),

    #[error("field is empty")]
    EmptyField,

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
