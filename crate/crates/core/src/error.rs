use alloc::string::String;
use core::fmt;

/// Errors raised by the numeric core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A value violated an operation's precondition (non-finite input, bad parameter, ...).
    InvalidArgument(String),
    /// A feature vector or parameter block had the wrong width.
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    /// The SSF head or step grid was configured for `expected` annotators but the
    /// dataset has `found` (absent when the annotator count varies).
    AnnotatorMismatch { expected: u32, found: Option<u32> },
    /// An inference approach was paired with an incompatible output activation.
    ApproachMismatch {
        approach: &'static str,
        activation: &'static str,
    },
    /// A split that must hold instances is empty.
    EmptySplit(&'static str),
    /// A labelled instance failed validation.
    InvalidInstance { id: String, reason: String },
    /// The same instance id appears more than once in a dataset.
    DuplicateId(String),
    /// Training produced a NaN or infinite loss.
    NonFiniteLoss { epoch: usize, batch: usize },
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::DimensionMismatch {
                what,
                expected,
                found,
            } => write!(f, "{what}: expected dimension {expected}, found {found}"),
            Error::AnnotatorMismatch { expected, found } => match found {
                Some(n) => write!(
                    f,
                    "annotator count mismatch: activation expects a={expected}, dataset has {n}"
                ),
                None => write!(
                    f,
                    "annotator count mismatch: activation expects a={expected}, dataset annotator count is variable or unknown"
                ),
            },
            Error::ApproachMismatch {
                approach,
                activation,
            } => write!(
                f,
                "approach {approach} cannot run on a network with {activation} output"
            ),
            Error::EmptySplit(split) => write!(f, "split '{split}' is empty"),
            Error::InvalidInstance { id, reason } => write!(f, "instance {id}: {reason}"),
            Error::DuplicateId(id) => write!(f, "duplicate instance id {id}"),
            Error::NonFiniteLoss { epoch, batch } => {
                write!(f, "non-finite loss at epoch {epoch}, batch {batch}")
            }
        }
    }
}

impl core::error::Error for Error {}
