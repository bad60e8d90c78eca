use thiserror::Error;

/// Errors raised by the kernels in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate quadrilateral: points are collinear or coincident")]
    DegenerateQuad,
    #[error("invalid box: {0}")]
    InvalidBox(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("invalid argument: {0}")]
    InvalidArg(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("unknown interpolation variant `{0}`")]
    UnknownVariant(String),
    #[error("feature cell {0} has no candidate boxes")]
    EmptyLocation(usize),
    #[error("probability {0} outside the open interval (0, 1)")]
    DomainError(f64),
    #[error("unknown class id {0}")]
    UnknownClass(usize),
    #[error("unknown tile index {0}")]
    UnknownTile(usize),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
