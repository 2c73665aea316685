//! Command errors and their exit codes.

use std::path::{Path, PathBuf};

use labelforge_core::error::{
    AnalysisError, DatasetError, DatasetIoError, IngestError, MergeError, MetricsError, RegistryError, RenderError,
    SampleError,
};
use labelforge_gateway::{AnnotateError, GatewayError, ManifestError};
use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad arguments, config or input content. Exit 1.
    #[error("{0}")]
    User(String),
    /// File system failure. Exit 2.
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    /// Provider failure after retries. Exit 3.
    #[error("{message}")]
    Provider { message: String, failed_posts: Vec<String> },
}

impl CliError {
    pub fn user(msg: impl Into<String>) -> Self {
        CliError::User(msg.into())
    }

    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::User(_) => 1,
            CliError::Io { .. } => 2,
            CliError::Provider { .. } => 3,
        }
    }

    /// The single-line machine-readable form written to stderr.
    pub fn to_json_line(&self) -> String {
        let v = match self {
            CliError::User(m) => json!({"error": "user", "exit_code": 1, "message": m}),
            CliError::Io { path, message } => json!({
                "error": "io",
                "exit_code": 2,
                "path": path.display().to_string(),
                "message": message,
            }),
            CliError::Provider { message, failed_posts } => json!({
                "error": "provider",
                "exit_code": 3,
                "message": message,
                "failed_posts": failed_posts,
            }),
        };
        v.to_string()
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::Io { path, source } => CliError::io(&path, source),
            other => CliError::User(other.to_string()),
        }
    }
}

impl From<DatasetIoError> for CliError {
    fn from(e: DatasetIoError) -> Self {
        match e {
            DatasetIoError::Io { path, source } => CliError::io(&path, source),
            other => CliError::User(other.to_string()),
        }
    }
}

impl From<RegistryError> for CliError {
    fn from(e: RegistryError) -> Self {
        match e {
            RegistryError::Io { path, source } => CliError::io(&path, source),
            other => CliError::User(other.to_string()),
        }
    }
}

impl From<GatewayError> for CliError {
    fn from(e: GatewayError) -> Self {
        match e {
            GatewayError::Config(m) => CliError::User(m),
            GatewayError::Cache { path, source } => CliError::io(&path, source),
            GatewayError::Render(r) => CliError::User(r.to_string()),
            other => CliError::Provider {
                message: other.to_string(),
                failed_posts: Vec::new(),
            },
        }
    }
}

impl From<ManifestError> for CliError {
    fn from(e: ManifestError) -> Self {
        match e {
            ManifestError::Io { path, source } => CliError::io(&path, source),
            other => CliError::User(other.to_string()),
        }
    }
}

impl From<AnnotateError> for CliError {
    fn from(e: AnnotateError) -> Self {
        match e {
            AnnotateError::Gateway(g) => g.into(),
            AnnotateError::Manifest(m) => m.into(),
            other => CliError::User(other.to_string()),
        }
    }
}

macro_rules! user_errors {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::User(e.to_string())
            }
        }
    )*};
}

user_errors!(
    MergeError,
    SampleError,
    DatasetError,
    RenderError,
    MetricsError,
    AnalysisError
);

pub type CliResult<T> = Result<T, CliError>;
