//! Dense vector primitives shared by retrieval, scoring and segmentation.
//!
//! Vectors are stored as `f32`; every reduction (norms, dot products, means)
//! accumulates in `f64`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Norms below this are treated as zero.
pub const ZERO_NORM: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmbeddingError {
    #[error("vector has zero norm")]
    ZeroVector,
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("cannot average an empty list of embeddings")]
    EmptyList,
    #[error("embedding must have at least one dimension")]
    Empty,
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
}

/// A fixed-dimension real vector with finite components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f32>", into = "Vec<f32>")]
pub struct Embedding(Vec<f32>);

impl Embedding {
    pub fn new(values: Vec<f32>) -> Result<Self, EmbeddingError> {
        if values.is_empty() {
            return Err(EmbeddingError::Empty);
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(EmbeddingError::NonFinite(i));
        }
        Ok(Self(values))
    }

    /// Builds an embedding and scales it to unit length.
    pub fn normalized(values: Vec<f32>) -> Result<Self, EmbeddingError> {
        l2_normalize(&Self::new(values)?)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    /// True when the Euclidean norm is within `tol` of one.
    pub fn is_unit(&self, tol: f64) -> bool {
        (self.norm() - 1.0).abs() <= tol
    }
}

impl TryFrom<Vec<f32>> for Embedding {
    type Error = EmbeddingError;

    fn try_from(values: Vec<f32>) -> Result<Self, Self::Error> {
        Self::new(values)
    }
}

impl From<Embedding> for Vec<f32> {
    fn from(e: Embedding) -> Self {
        e.0
    }
}

impl AsRef<[f32]> for Embedding {
    fn as_ref(&self) -> &[f32] {
        &self.0
    }
}

/// Dot product with `f64` accumulation. Slices must have equal length.
#[inline]
pub fn dot(a: &[f32], b: &[f32]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let chunks_a = a.chunks_exact(4);
    let chunks_b = b.chunks_exact(4);
    let (rem_a, rem_b) = (chunks_a.remainder(), chunks_b.remainder());
    for (x, y) in chunks_a.zip(chunks_b) {
        acc[0] += x[0] as f64 * y[0] as f64;
        acc[1] += x[1] as f64 * y[1] as f64;
        acc[2] += x[2] as f64 * y[2] as f64;
        acc[3] += x[3] as f64 * y[3] as f64;
    }
    let mut tail = 0.0f64;
    for (x, y) in rem_a.iter().zip(rem_b) {
        tail += *x as f64 * *y as f64;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
pub fn norm(v: &[f32]) -> f64 {
    dot(v, v).sqrt()
}

/// Scales `v` to unit Euclidean norm.
pub fn l2_normalize(v: &Embedding) -> Result<Embedding, EmbeddingError> {
    let n = v.norm();
    if n < ZERO_NORM {
        return Err(EmbeddingError::ZeroVector);
    }
    Ok(Embedding(
        v.0.iter().map(|x| (*x as f64 / n) as f32).collect(),
    ))
}

/// Cosine similarity `dot(a, b) / (|a| |b|)`; zero if either input has zero norm.
pub fn cosine_similarity(a: &Embedding, b: &Embedding) -> Result<f64, EmbeddingError> {
    check_dims(a.dim(), b.dim())?;
    Ok(cosine_raw(&a.0, &b.0))
}

pub(crate) fn cosine_raw(a: &[f32], b: &[f32]) -> f64 {
    let na = norm(a);
    let nb = norm(b);
    if na < ZERO_NORM || nb < ZERO_NORM {
        return 0.0;
    }
    (dot(a, b) / (na * nb)).clamp(-1.0, 1.0)
}

/// Componentwise arithmetic mean. The result is not re-normalized.
pub fn mean_embedding<'a, I>(vs: I) -> Result<Embedding, EmbeddingError>
where
    I: IntoIterator<Item = &'a Embedding>,
{
    let mut iter = vs.into_iter();
    let first = iter.next().ok_or(EmbeddingError::EmptyList)?;
    let mut acc: Vec<f64> = first.0.iter().map(|x| *x as f64).collect();
    let mut count = 1usize;
    for v in iter {
        check_dims(acc.len(), v.dim())?;
        for (a, x) in acc.iter_mut().zip(&v.0) {
            *a += *x as f64;
        }
        count += 1;
    }
    let inv = count as f64;
    Ok(Embedding(
        acc.into_iter().map(|a| (a / inv) as f32).collect(),
    ))
}

pub(crate) fn check_dims(expected: usize, actual: usize) -> Result<(), EmbeddingError> {
    if expected != actual {
        return Err(EmbeddingError::DimensionMismatch { expected, actual });
    }
    Ok(())
}
