use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("row {row}: {message}")]
    Schema { row: usize, message: String },

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },

    #[error("image {image}: requested {requested} MC samples but only {available} available")]
    InsufficientSamples {
        image: String,
        requested: usize,
        available: usize,
    },

    #[error("image {image}: {message}")]
    InvalidAggregation { image: String, message: String },

    #[error("missing labels for images: {}", .0.join(", "))]
    MissingLabels(Vec<String>),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("kappa undefined: expected weighted disagreement is zero")]
    KappaUndefined,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("bootstrap: metric undefined on {attempts} consecutive resamples of iteration {iteration}")]
    BootstrapExhausted { iteration: usize, attempts: usize },

    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Diverged { epoch: usize },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable code, printed by the CLI in front of the message.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Schema { .. } => "schema",
            Error::File { source, .. } => source.code(),
            Error::InsufficientSamples { .. } => "insufficient_samples",
            Error::InvalidAggregation { .. } => "invalid_aggregation",
            Error::MissingLabels(_) => "missing_labels",
            Error::InsufficientData(_) => "insufficient_data",
            Error::KappaUndefined => "kappa_undefined",
            Error::InvalidInput(_) => "invalid_input",
            Error::BootstrapExhausted { .. } => "bootstrap_exhausted",
            Error::Diverged { .. } => "diverged",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }

    pub(crate) fn in_file(self, path: impl Into<PathBuf>) -> Error {
        Error::File {
            path: path.into(),
            source: Box::new(self),
        }
    }
}
