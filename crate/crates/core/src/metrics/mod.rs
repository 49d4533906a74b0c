//! Evaluation metrics for open-vocabulary predictions.
//!
//! Classification: semantic similarity, semantic IoU and cluster accuracy.
//! Segmentation: hard and soft Jaccard and recall, plus Jaccard after
//! remapping predictions to the nearest or most-overlapping ground-truth label.

mod io;
mod seg;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Mutex;

use serde::Serialize;
use thiserror::Error;

use crate::candidates::standardize;
use crate::embedding::{cosine_similarity, Embedding};
use crate::labelmap::LabelMapError;
use crate::provider::{EmbeddingProvider, ProviderError, Role};

pub use io::{
    evaluate_classification, evaluate_segmentation, read_classification_csv,
    read_segmentation_dirs, ClassRow,
};
pub use seg::{
    remap_nearest, remap_overlap, segmentation_jaccard, segmentation_recall, JaccardReport, Mode,
    SegPair,
};

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("batch is empty")]
    EmptyBatch,
    #[error("ground-truth label list is empty")]
    EmptyGtList,
    #[error("item {item}: prediction is {pred:?}, ground truth is {gt:?}")]
    DimensionMismatch {
        item: usize,
        pred: (usize, usize),
        gt: (usize, usize),
    },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error(transparent)]
    LabelMap(#[from] LabelMapError),
    #[error(transparent)]
    Provider(#[from] ProviderError),
}

/// Lowercase, singular form of every word, single-space joined.
pub fn standardize_label(label: &str) -> String {
    label
        .split_whitespace()
        .map(standardize)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Symmetric string similarity in `[-1, 1]`.
pub trait SimilarityKernel: Sync {
    fn similarity(&self, a: &str, b: &str) -> Result<f64, MetricError>;

    /// Called with every label before a batch of `similarity` calls.
    fn prepare(&self, _labels: &[&str]) -> Result<(), MetricError> {
        Ok(())
    }
}

/// 1 when the standardized labels are equal, else 0.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactKernel;

impl SimilarityKernel for ExactKernel {
    fn similarity(&self, a: &str, b: &str) -> Result<f64, MetricError> {
        Ok(if a == b || standardize_label(a) == standardize_label(b) {
            1.0
        } else {
            0.0
        })
    }
}

/// Cosine similarity of sentence-role embeddings, cached per label.
pub struct EmbeddingKernel<'a> {
    provider: &'a dyn EmbeddingProvider,
    role: Role,
    cache: Mutex<HashMap<String, Embedding>>,
}

impl<'a> EmbeddingKernel<'a> {
    pub fn new(provider: &'a dyn EmbeddingProvider) -> Result<Self, MetricError> {
        Self::with_role(provider, Role::Sentence)
    }

    pub fn with_role(provider: &'a dyn EmbeddingProvider, role: Role) -> Result<Self, MetricError> {
        if provider.dim(role).is_none() {
            return Err(ProviderError::RoleUnavailable(role).into());
        }
        Ok(Self {
            provider,
            role,
            cache: Mutex::new(HashMap::new()),
        })
    }

    fn embed(&self, label: &str) -> Result<Embedding, MetricError> {
        if let Some(e) = self.cache.lock().unwrap().get(label) {
            return Ok(e.clone());
        }
        let e = self
            .provider
            .embed_texts(self.role, &[label.to_string()])?
            .pop()
            .expect("one embedding per text");
        self.cache
            .lock()
            .unwrap()
            .insert(label.to_string(), e.clone());
        Ok(e)
    }
}

impl SimilarityKernel for EmbeddingKernel<'_> {
    fn similarity(&self, a: &str, b: &str) -> Result<f64, MetricError> {
        let (ea, eb) = (self.embed(a)?, self.embed(b)?);
        cosine_similarity(&ea, &eb).map_err(|e| ProviderError::Protocol(e.to_string()).into())
    }

    fn prepare(&self, labels: &[&str]) -> Result<(), MetricError> {
        let missing: Vec<String> = {
            let cache = self.cache.lock().unwrap();
            let set: BTreeSet<&str> = labels
                .iter()
                .copied()
                .filter(|l| !cache.contains_key(*l))
                .collect();
            set.into_iter().map(str::to_string).collect()
        };
        if missing.is_empty() {
            return Ok(());
        }
        let embs = self.provider.embed_texts(self.role, &missing)?;
        self.cache
            .lock()
            .unwrap()
            .extend(missing.into_iter().zip(embs));
        Ok(())
    }
}

pub fn semantic_similarity(
    pred: &str,
    gt: &str,
    kernel: &dyn SimilarityKernel,
) -> Result<f64, MetricError> {
    kernel.similarity(pred, gt)
}

fn word_set(label: &str) -> BTreeSet<String> {
    label
        .split(|c: char| c.is_whitespace() || matches!(c, '_' | '-' | '/' | ','))
        .filter(|w| !w.is_empty())
        .map(standardize)
        .collect()
}

/// Word-set intersection over union of the standardized labels.
pub fn semantic_iou(pred: &str, gt: &str) -> f64 {
    let (a, b) = (word_set(pred), word_set(gt));
    let union = a.union(&b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(&b).count() as f64 / union as f64
}

/// Many-to-one accuracy: each distinct prediction is assigned the ground
/// truth it co-occurs with most (ties to the smaller label). Labels are
/// standardized first.
pub fn cluster_accuracy<P, G>(pairs: &[(P, G)]) -> Result<f64, MetricError>
where
    P: AsRef<str>,
    G: AsRef<str>,
{
    if pairs.is_empty() {
        return Err(MetricError::EmptyBatch);
    }
    let mut groups: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
    for (p, g) in pairs {
        *groups
            .entry(standardize_label(p.as_ref()))
            .or_default()
            .entry(standardize_label(g.as_ref()))
            .or_default() += 1;
    }
    // the max count is what matters; which gt wins a tie does not change it
    let matched: usize = groups
        .values()
        .map(|gts| gts.values().copied().max().unwrap_or(0))
        .sum();
    Ok(matched as f64 / pairs.len() as f64)
}

/// Named scalar metrics with per-class breakdowns.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MetricReport {
    pub task: String,
    pub metrics: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub per_class: BTreeMap<String, BTreeMap<String, f64>>,
    pub counts: BTreeMap<String, usize>,
}
