use thiserror::Error;

/// Errors raised anywhere in the estimation and simulation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("singular design: column(s) {columns:?} are linearly dependent on the others")]
    SingularDesign { columns: Vec<String> },

    #[error("estimation failed in fold {fold}: {reason}")]
    Estimation { fold: usize, reason: String },

    #[error("method {0} needs the simulation truth but none was supplied")]
    MissingTruth(String),

    #[error("invalid data: {0}")]
    Data(String),

    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
