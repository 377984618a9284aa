use thiserror::Error;

/// Failures surfaced by the pipeline and the CLI.
#[derive(Debug, Error)]
pub enum ScatterError {
    #[error("config field `{field}`: {msg}")]
    Config { field: String, msg: String },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("task {task}: {source}")]
    Numerical {
        task: &'static str,
        #[source]
        source: halfline::Error,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl ScatterError {
    pub fn config(field: &str, msg: impl Into<String>) -> Self {
        ScatterError::Config { field: field.to_string(), msg: msg.into() }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        ScatterError::Io { path: path.as_ref().display().to_string(), source }
    }

    /// Process exit code for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            ScatterError::Config { .. } | ScatterError::Parse(_) => 3,
            ScatterError::Numerical { .. } => 4,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, ScatterError>;
