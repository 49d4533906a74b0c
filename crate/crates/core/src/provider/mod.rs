//! The embedding-provider boundary. Every neural encoder is reached through
//! [`EmbeddingProvider`], either over the line-delimited JSON protocol
//! ([`ProviderClient`]) or in-process ([`MockProvider`]).

mod client;
mod mock;
pub mod protocol;

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::Embedding;

pub use client::{Endpoint, ProviderClient, DEFAULT_MAX_BATCH, DEFAULT_TIMEOUT};
pub use mock::{MockProvider, DEFAULT_MOCK_DIM};

/// Encoder roles a provider may expose.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    JointText,
    JointImage,
    Sentence,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::JointText => "joint-text",
            Role::JointImage => "joint-image",
            Role::Sentence => "sentence",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An image given to the provider, by path or as encoded PNG bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ImageRef {
    Path(PathBuf),
    Png(Vec<u8>),
}

#[derive(Debug, Error)]
pub enum ProviderError {
    #[error("provider error [{code}]: {message}")]
    Remote { code: String, message: String },
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("provider timed out after {0:?}")]
    Timeout(Duration),
    #[error("{role} embedding has dim {actual}, handshake reported {expected}")]
    DimDrift {
        role: Role,
        expected: usize,
        actual: usize,
    },
    #[error("role {0} is not offered by this provider")]
    RoleUnavailable(Role),
    #[error("cannot decode image: {0}")]
    Decode(String),
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("malformed provider message: {0}")]
    Protocol(String),
}

impl ProviderError {
    pub fn remote(code: &str, message: impl Into<String>) -> Self {
        ProviderError::Remote {
            code: code.to_string(),
            message: message.into(),
        }
    }

    /// Wire error code for this error.
    pub fn code(&self) -> &str {
        match self {
            ProviderError::Remote { code, .. } => code,
            ProviderError::InvalidRequest(_) => protocol::codes::INVALID_REQUEST,
            ProviderError::Timeout(_) => "timeout",
            ProviderError::DimDrift { .. } => "dim_drift",
            ProviderError::RoleUnavailable(_) => protocol::codes::UNKNOWN_ROLE,
            ProviderError::Decode(_) => protocol::codes::DECODE,
            ProviderError::Transport(_) => "transport",
            ProviderError::Protocol(_) => protocol::codes::BAD_REQUEST,
        }
    }
}

/// Source of text and image embeddings. Implementations return one unit-norm
/// vector per input, in input order, and must be deterministic.
pub trait EmbeddingProvider: Send + Sync {
    fn name(&self) -> &str;

    /// Available roles and their embedding dimensions.
    fn roles(&self) -> &BTreeMap<Role, usize>;

    fn embed_texts(&self, role: Role, texts: &[String]) -> Result<Vec<Embedding>, ProviderError>;

    fn embed_images(&self, images: &[ImageRef]) -> Result<Vec<Embedding>, ProviderError>;

    fn embed_image(&self, image: &ImageRef) -> Result<Embedding, ProviderError> {
        self.embed_images(std::slice::from_ref(image))?
            .pop()
            .ok_or_else(|| ProviderError::Protocol("empty response".into()))
    }

    fn dim(&self, role: Role) -> Option<usize> {
        self.roles().get(&role).copied()
    }
}

/// Provider selector as accepted on the command line:
/// `mock:SEED`, `tcp:HOST:PORT`, or a command line to spawn.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProviderSpec {
    Mock { seed: u64 },
    Remote(Endpoint),
}

impl FromStr for ProviderSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Some(seed) = s.strip_prefix("mock:") {
            let seed = seed
                .parse()
                .map_err(|_| format!("bad mock seed {seed:?}"))?;
            return Ok(ProviderSpec::Mock { seed });
        }
        if let Some(addr) = s.strip_prefix("tcp:") {
            if addr.is_empty() {
                return Err("tcp provider needs HOST:PORT".into());
            }
            return Ok(ProviderSpec::Remote(Endpoint::Tcp(addr.to_string())));
        }
        let argv: Vec<String> = s.split_whitespace().map(str::to_string).collect();
        if argv.is_empty() {
            return Err("empty provider command".into());
        }
        Ok(ProviderSpec::Remote(Endpoint::Command(argv)))
    }
}

impl ProviderSpec {
    pub fn open(&self) -> Result<Box<dyn EmbeddingProvider>, ProviderError> {
        match self {
            ProviderSpec::Mock { seed } => Ok(Box::new(MockProvider::new(*seed))),
            ProviderSpec::Remote(ep) => Ok(Box::new(ProviderClient::connect(ep, DEFAULT_TIMEOUT)?)),
        }
    }
}
