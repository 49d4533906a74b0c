//! Caption databases: loading VFEB/caption file pairs, building a cosine
//! top-K index over them, and persisting that index to disk.

mod index;
mod kmeans;
mod persist;
pub mod vfeb;

use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::embedding::{EmbeddingError, ZERO_NORM};

pub use index::{CaptionIndex, Hit, IndexKind, IvfParams, RetrievalResult, DEFAULT_TOP_K};
pub use persist::INDEX_FORMAT_VERSION;
pub use vfeb::EmbeddingMatrix;

/// Tolerance on row norms before a stored embedding is renormalized.
pub const UNIT_NORM_TOL: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("format error: {0}")]
    Format(String),
    #[error("embedding file has {embeddings} rows but caption file has {captions} lines")]
    CountMismatch { embeddings: usize, captions: usize },
    #[error("caption store is empty")]
    EmptyStore,
    #[error("invalid index parameters: {0}")]
    InvalidParams(String),
    #[error("index format version {found} is newer than supported version {supported}")]
    Version { found: u32, supported: u32 },
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
}

/// Caption texts with one unit-norm embedding per caption. Row `i` of the
/// matrix belongs to caption `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct CaptionStore {
    texts: Vec<String>,
    embeddings: EmbeddingMatrix,
    renormalized: usize,
}

impl CaptionStore {
    /// Validates and assembles a store. Rows whose norm is off by more than
    /// [`UNIT_NORM_TOL`] are rescaled and counted in [`Self::renormalized`].
    pub fn from_parts(
        texts: Vec<String>,
        mut embeddings: EmbeddingMatrix,
    ) -> Result<Self, StoreError> {
        if texts.len() != embeddings.count {
            return Err(StoreError::CountMismatch {
                embeddings: embeddings.count,
                captions: texts.len(),
            });
        }
        for (i, t) in texts.iter().enumerate() {
            if t.trim().is_empty() {
                return Err(StoreError::Format(format!("caption {i} is empty")));
            }
            if t.contains('\n') {
                return Err(StoreError::Format(format!(
                    "caption {i} contains a line feed"
                )));
            }
        }
        let dim = embeddings.dim;
        let mut renormalized = 0;
        for (i, row) in embeddings.data.chunks_exact_mut(dim).enumerate() {
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(StoreError::Format(format!(
                    "row {i} has a non-finite value at {j}"
                )));
            }
            let n = crate::embedding::norm(row);
            if n < ZERO_NORM {
                return Err(StoreError::Format(format!("row {i} has zero norm")));
            }
            if (n - 1.0).abs() > UNIT_NORM_TOL {
                for v in row.iter_mut() {
                    *v = (*v as f64 / n) as f32;
                }
                renormalized += 1;
            }
        }
        if renormalized > 0 {
            log::warn!("renormalized {renormalized} caption embeddings that were not unit norm");
        }
        Ok(Self {
            texts,
            embeddings,
            renormalized,
        })
    }

    pub fn len(&self) -> usize {
        self.texts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.texts.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.embeddings.dim
    }

    pub fn text(&self, id: usize) -> &str {
        &self.texts[id]
    }

    pub fn texts(&self) -> &[String] {
        &self.texts
    }

    pub fn embedding(&self, id: usize) -> &[f32] {
        self.embeddings.row(id)
    }

    pub fn embeddings(&self) -> &EmbeddingMatrix {
        &self.embeddings
    }

    /// Number of rows rescaled to unit norm while loading.
    pub fn renormalized(&self) -> usize {
        self.renormalized
    }
}

/// Reads a VFEB embedding file and its LF-separated caption file.
pub fn load_caption_file(
    embeddings_path: &Path,
    captions_path: &Path,
) -> Result<CaptionStore, StoreError> {
    let embeddings = vfeb::read_file(embeddings_path)?;
    let texts = read_captions(captions_path)?;
    CaptionStore::from_parts(texts, embeddings)
}

/// One caption per line, UTF-8.
pub fn read_captions(path: &Path) -> Result<Vec<String>, StoreError> {
    let raw = fs::read(path)?;
    let content = String::from_utf8(raw)
        .map_err(|e| StoreError::Format(format!("{} is not UTF-8: {e}", path.display())))?;
    Ok(split_lines(&content))
}

fn split_lines(content: &str) -> Vec<String> {
    if content.is_empty() {
        return Vec::new();
    }
    let body = content.strip_suffix('\n').unwrap_or(content);
    body.split('\n')
        .map(|l| l.strip_suffix('\r').unwrap_or(l).to_string())
        .collect()
}

pub(crate) fn write_captions(path: &Path, texts: &[String]) -> Result<(), StoreError> {
    let mut out = String::with_capacity(texts.iter().map(|t| t.len() + 1).sum());
    for t in texts {
        out.push_str(t);
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}
