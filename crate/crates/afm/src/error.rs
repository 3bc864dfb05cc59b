use thiserror::Error;

use crate::gateway::GatewayError;

pub type Result<T> = std::result::Result<T, AfmError>;

/// Crate-wide error type. Backend failures propagate unchanged; the only
/// automatic fallback anywhere in the engine is fidelity downgrading during
/// packing.
#[derive(Debug, Error)]
pub enum AfmError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("invalid argument: {0}")]
    InvalidArg(String),
    #[error("failed to load asset {path}: {reason}")]
    AssetLoad { path: String, reason: String },
    #[error("embedding dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("no importance label found in reply: {0:?}")]
    LabelParse(String),
    #[error("no PASS/FAIL verdict found in judge reply: {0:?}")]
    JudgeParse(String),
    #[error("scenario schema error at {path}: {reason}")]
    Schema { path: String, reason: String },
    #[error("no results to summarize")]
    EmptyResults,
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
