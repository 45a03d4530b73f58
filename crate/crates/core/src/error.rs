use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    #[error("loss must be a scalar, got shape {0:?}")]
    NonScalarLoss(Vec<usize>),

    #[error("infeasible world spec: {0}")]
    InfeasibleSpec(String),

    #[error("invalid pose ({x:.3}, {y:.3}): {reason}")]
    InvalidPose { x: f64, y: f64, reason: &'static str },

    #[error("endpoint is not traversable: {0}")]
    NotTraversable(String),

    #[error("goal unreachable from start")]
    Unreachable,

    #[error("path of {length:.3} m is shorter than one waypoint spacing ({spacing:.3} m)")]
    PathTooShort { length: f64, spacing: f64 },

    #[error("no valid scenario after {0} attempts")]
    ScenarioExhausted(usize),

    #[error("invalid schedule: {0}")]
    Schedule(String),

    #[error("diffusion step {t} outside 1..={n}")]
    StepOutOfRange { t: usize, n: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("bad {kind} file: {detail}")]
    Format { kind: &'static str, detail: String },

    #[error("not a {kind} file (magic {found:?})")]
    BadMagic { kind: &'static str, found: [u8; 4] },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("version mismatch in {kind} file: expected {expected}, found {found}")]
    Version {
        kind: &'static str,
        expected: u32,
        found: u32,
    },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Shape {
            op,
            detail: detail.into(),
        }
    }

    /// Stable short tag used by the CLI's machine-readable error line.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Shape { .. } => "shape",
            Error::NonScalarLoss(_) => "non-scalar-loss",
            Error::InfeasibleSpec(_) => "infeasible-spec",
            Error::InvalidPose { .. } => "invalid-pose",
            Error::NotTraversable(_) => "not-traversable",
            Error::Unreachable => "unreachable",
            Error::PathTooShort { .. } => "path-too-short",
            Error::ScenarioExhausted(_) => "scenario-exhausted",
            Error::Schedule(_) => "schedule",
            Error::StepOutOfRange { .. } => "step-out-of-range",
            Error::NonFinite(_) => "non-finite",
            Error::Empty(_) => "empty",
            Error::Format { .. } => "format",
            Error::Version { .. } | Error::BadMagic { .. } => "version-mismatch",
            Error::InvalidInput(_) => "invalid-input",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
        }
    }
}
