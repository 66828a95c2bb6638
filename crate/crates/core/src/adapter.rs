//! Errors shared by every pluggable inference backend.

use alloc::string::String;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AdapterError {
    /// The backend could not be reached, timed out, or asked us to back off.
    #[error("adapter `{backend}` unavailable: {reason}")]
    Unavailable {
        backend: String,
        reason: String,
        retry_after_ms: Option<u64>,
    },
    /// The backend answered but the answer violates the wire contract.
    #[error("adapter `{backend}` protocol error: {reason}")]
    Protocol { backend: String, reason: String },
}

impl AdapterError {
    pub fn unavailable(backend: impl Into<String>, reason: impl Into<String>) -> Self {
        AdapterError::Unavailable {
            backend: backend.into(),
            reason: reason.into(),
            retry_after_ms: None,
        }
    }

    pub fn protocol(backend: impl Into<String>, reason: impl Into<String>) -> Self {
        AdapterError::Protocol {
            backend: backend.into(),
            reason: reason.into(),
        }
    }

    pub fn retry_after_ms(&self) -> Option<u64> {
        match self {
            AdapterError::Unavailable { retry_after_ms, .. } => *retry_after_ms,
            AdapterError::Protocol { .. } => None,
        }
    }
}
