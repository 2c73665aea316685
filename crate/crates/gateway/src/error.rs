use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("provider configuration: {0}")]
    Config(String),
    #[error("provider {provider} rejected credentials (status {status})")]
    Auth { provider: String, status: u16 },
    #[error("provider {provider} failed after {attempts} attempt(s), last status {}: {message}", last_status.map(|s| s.to_string()).unwrap_or_else(|| "none".into()))]
    Transport {
        provider: String,
        attempts: u32,
        last_status: Option<u16>,
        message: String,
    },
    #[error("provider {provider} returned an unusable body: {message}")]
    BadResponse { provider: String, message: String },
    #[error("cache {path}: {source}")]
    Cache {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("prompt: {0}")]
    Render(#[from] labelforge_core::error::RenderError),
}

/// What a single backend attempt produced when it did not succeed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AttemptError {
    /// 429, 5xx, timeouts and connection drops.
    Transient {
        status: Option<u16>,
        message: String,
    },
    Auth {
        status: u16,
    },
    Fatal {
        status: Option<u16>,
        message: String,
    },
}

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("manifest {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("manifest {path} line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

#[derive(Debug, Error)]
pub enum AnnotateError {
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error(transparent)]
    Dataset(#[from] labelforge_core::error::DatasetError),
    #[error("unknown post {0}")]
    UnknownPost(String),
    #[error("no strategy registered for {0}")]
    NoStrategy(String),
}
