use thiserror::Error;

/// Errors raised by the spectral solver.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("position {position} outside [0, {length}]")]
    PositionOutOfRange { position: f64, length: f64 },

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("unknown operator kind `{0}`")]
    UnknownOperator(String),

    #[error("unknown analytic profile `{0}`")]
    UnknownProfile(String),

    #[error("operands live on different bases")]
    BasisMismatch,

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("operator `{name}` is singular at mode {mode}")]
    SingularOperator { name: String, mode: usize },

    #[error("horizon {horizon} outside the admissible window [0, {limit})")]
    HorizonViolation { horizon: f64, limit: f64 },

    #[error("horizon {horizon} is inside the excluded window (0, {delta_min})")]
    HorizonTooShort { horizon: f64, delta_min: f64 },

    #[error("penalty weight c = {c} must exceed c_bar = {cbar}")]
    PenaltyTooSmall { c: f64, cbar: f64 },

    #[error("conjugate point: singular modes {modes:?}")]
    ConjugatePoint { modes: Vec<usize> },

    #[error("input duration {found} does not match horizon {expected}")]
    DurationMismatch { expected: f64, found: f64 },

    #[error("second difference requires a nonzero step")]
    ZeroStep,

    #[error("feedback undefined at s = {s}: must satisfy s < {limit}")]
    FeedbackUndefined { s: f64, limit: f64 },

    #[error("CFL violation: dt = {dt} exceeds {limit}")]
    CflViolation { dt: f64, limit: f64 },

    #[error("singular stationarity system for modes {modes:?}")]
    SingularTridiagonal { modes: Vec<usize> },

    #[error("no admissible segment count up to {cap}")]
    NoAdmissibleSegmentation { cap: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
