use std::path::PathBuf;

use thiserror::Error;

/// Why a checkpoint could not be read.
#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint {0} does not exist")]
    Missing(PathBuf),
    #[error("checkpoint {path} is malformed: {reason}")]
    Malformed { path: PathBuf, reason: String },
    #[error("checkpoint {path} has inconsistent shapes: {reason}")]
    ShapeMismatch { path: PathBuf, reason: String },
    #[error("checkpoint {path} has an invalid head config: {reason}")]
    ConfigMismatch { path: PathBuf, reason: String },
    #[error("checkpoint {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] softlabel_core::Error),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("dataset {path}: {reason}")]
    Dataset { path: PathBuf, reason: String },
    #[error("config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn dataset(path: impl Into<PathBuf>, reason: impl ToString) -> Self {
        Error::Dataset {
            path: path.into(),
            reason: reason.to_string(),
        }
    }

    /// Short machine-readable name.
    pub fn kind(&self) -> &'static str {
        use softlabel_core::Error as C;
        match self {
            Error::Core(C::InvalidArgument(_)) => "invalid_argument",
            Error::Core(C::DimensionMismatch { .. }) => "dimension_mismatch",
            Error::Core(C::AnnotatorMismatch { .. }) => "annotator_mismatch",
            Error::Core(C::ApproachMismatch { .. }) => "approach_mismatch",
            Error::Core(C::EmptySplit(_)) => "empty_split",
            Error::Core(C::InvalidInstance { .. }) => "invalid_instance",
            Error::Core(C::DuplicateId(_)) => "duplicate_id",
            Error::Core(C::NonFiniteLoss { .. }) => "non_finite_loss",
            Error::Checkpoint(CheckpointError::Missing(_)) => "checkpoint_missing",
            Error::Checkpoint(CheckpointError::Malformed { .. }) => "checkpoint_malformed",
            Error::Checkpoint(CheckpointError::ShapeMismatch { .. }) => "checkpoint_shape_mismatch",
            Error::Checkpoint(CheckpointError::ConfigMismatch { .. }) => "checkpoint_config_mismatch",
            Error::Checkpoint(CheckpointError::Io { .. }) => "checkpoint_io",
            Error::Io { .. } => "io",
            Error::Dataset { .. } => "dataset",
            Error::Config(_) => "config",
        }
    }

    /// 2: config or validation, 3: data, 4: numeric failure.
    pub fn exit_code(&self) -> i32 {
        use softlabel_core::Error as C;
        match self {
            Error::Core(C::NonFiniteLoss { .. }) => 4,
            Error::Core(C::EmptySplit(_) | C::InvalidInstance { .. } | C::DuplicateId(_)) => 3,
            Error::Core(_) | Error::Config(_) => 2,
            Error::Checkpoint(_) | Error::Io { .. } | Error::Dataset { .. } => 3,
        }
    }

    /// One-line JSON error record.
    pub fn record(&self) -> String {
        serde_json::json!({
            "error": self.kind(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        })
        .to_string()
    }
}
