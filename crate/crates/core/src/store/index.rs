use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{kmeans, CaptionStore, StoreError};
use crate::embedding::{check_dims, dot, Embedding, EmbeddingError, ZERO_NORM};

/// Number of captions retrieved per query unless configured otherwise.
pub const DEFAULT_TOP_K: usize = 10;

/// Seed for IVF coarse-centroid training.
pub(crate) const IVF_SEED: u64 = 0x5eed_cafe;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IvfParams {
    pub n_lists: usize,
    pub n_probe: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IndexKind {
    ExactFlat,
    QuantizedIvf,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct IvfLists {
    pub params: IvfParams,
    pub centroids: Vec<f32>,
    pub lists: Vec<Vec<u32>>,
}

impl IvfLists {
    pub(crate) fn from_centroids(
        store: &CaptionStore,
        params: IvfParams,
        centroids: Vec<f32>,
    ) -> Self {
        let dim = store.dim();
        let mut lists = vec![Vec::new(); params.n_lists];
        for (i, row) in store.embeddings().rows().enumerate() {
            lists[kmeans::nearest(&centroids, dim, row)].push(i as u32);
        }
        Self {
            params,
            centroids,
            lists,
        }
    }
}

/// A retrieved caption.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hit {
    pub id: usize,
    pub text: String,
    pub score: f64,
}

/// Top-K captions for a query, best first, plus the mean of their embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalResult {
    pub hits: Vec<Hit>,
    pub centroid: Embedding,
}

impl RetrievalResult {
    pub fn ids(&self) -> Vec<usize> {
        self.hits.iter().map(|h| h.id).collect()
    }

    pub fn texts(&self) -> impl Iterator<Item = &str> {
        self.hits.iter().map(|h| h.text.as_str())
    }
}

/// Immutable cosine index over a [`CaptionStore`].
#[derive(Debug, Clone, PartialEq)]
pub struct CaptionIndex {
    store: CaptionStore,
    ivf: Option<IvfLists>,
}

impl CaptionIndex {
    /// Builds an index. `ivf` is required for [`IndexKind::QuantizedIvf`] and
    /// ignored for the flat kind.
    pub fn build(
        store: CaptionStore,
        kind: IndexKind,
        ivf: Option<IvfParams>,
    ) -> Result<Self, StoreError> {
        if store.is_empty() {
            return Err(StoreError::EmptyStore);
        }
        let ivf = match kind {
            IndexKind::ExactFlat => None,
            IndexKind::QuantizedIvf => {
                let params = ivf.ok_or_else(|| {
                    StoreError::InvalidParams("IVF index needs n_lists and n_probe".into())
                })?;
                validate_ivf(&params, store.len())?;
                let centroids = kmeans::train(
                    &store.embeddings().data,
                    store.dim(),
                    params.n_lists,
                    IVF_SEED,
                );
                Some(IvfLists::from_centroids(&store, params, centroids))
            }
        };
        Ok(Self { store, ivf })
    }

    pub fn exact(store: CaptionStore) -> Result<Self, StoreError> {
        Self::build(store, IndexKind::ExactFlat, None)
    }

    pub(crate) fn from_loaded(store: CaptionStore, ivf: Option<IvfLists>) -> Self {
        Self { store, ivf }
    }

    pub fn kind(&self) -> IndexKind {
        if self.ivf.is_some() {
            IndexKind::QuantizedIvf
        } else {
            IndexKind::ExactFlat
        }
    }

    pub fn ivf_params(&self) -> Option<IvfParams> {
        self.ivf.as_ref().map(|l| l.params)
    }

    pub(crate) fn ivf(&self) -> Option<&IvfLists> {
        self.ivf.as_ref()
    }

    pub fn store(&self) -> &CaptionStore {
        &self.store
    }

    pub fn dim(&self) -> usize {
        self.store.dim()
    }

    pub fn len(&self) -> usize {
        self.store.len()
    }

    pub fn is_empty(&self) -> bool {
        self.store.is_empty()
    }

    /// Returns the `k` captions with the highest cosine similarity to `query`.
    /// Equal scores are ordered by ascending caption id.
    pub fn retrieve_topk(
        &self,
        query: &Embedding,
        k: usize,
    ) -> Result<RetrievalResult, StoreError> {
        if k == 0 {
            return Err(StoreError::InvalidParams("k must be at least 1".into()));
        }
        check_dims(self.dim(), query.dim())?;
        let qn = query.norm();
        if qn < ZERO_NORM {
            return Err(EmbeddingError::ZeroVector.into());
        }
        let q = query.as_slice();
        let mut top = TopK::new(k);
        match &self.ivf {
            None => {
                for (i, row) in self.store.embeddings().rows().enumerate() {
                    top.push(dot(row, q), i as u32);
                }
            }
            Some(ivf) => {
                let mut probe = TopK::new(ivf.params.n_probe);
                for (c, row) in ivf.centroids.chunks_exact(self.dim()).enumerate() {
                    probe.push(dot(row, q), c as u32);
                }
                for (_, list) in probe.into_sorted() {
                    for &i in &ivf.lists[list as usize] {
                        top.push(dot(self.store.embedding(i as usize), q), i);
                    }
                }
            }
        }
        let hits: Vec<Hit> = top
            .into_sorted()
            .into_iter()
            .map(|(score, id)| Hit {
                id: id as usize,
                text: self.store.text(id as usize).to_string(),
                score: (score / qn).clamp(-1.0, 1.0),
            })
            .collect();
        let centroid = self.centroid_of(hits.iter().map(|h| h.id));
        Ok(RetrievalResult { hits, centroid })
    }

    /// Runs [`Self::retrieve_topk`] over many queries in parallel. Output order
    /// matches input order.
    pub fn retrieve_batch(
        &self,
        queries: &[Embedding],
        k: usize,
    ) -> Result<Vec<RetrievalResult>, StoreError> {
        queries
            .par_iter()
            .map(|q| self.retrieve_topk(q, k))
            .collect()
    }

    fn centroid_of(&self, ids: impl Iterator<Item = usize>) -> Embedding {
        let mut acc = vec![0.0f64; self.dim()];
        let mut n = 0usize;
        for id in ids {
            for (a, x) in acc.iter_mut().zip(self.store.embedding(id)) {
                *a += *x as f64;
            }
            n += 1;
        }
        let n = n.max(1) as f64;
        Embedding::new(acc.into_iter().map(|a| (a / n) as f32).collect())
            .expect("mean of finite rows is finite")
    }
}

pub(crate) fn validate_ivf(params: &IvfParams, count: usize) -> Result<(), StoreError> {
    if params.n_lists == 0 || params.n_probe == 0 {
        return Err(StoreError::InvalidParams(
            "n_lists and n_probe must be positive".into(),
        ));
    }
    if params.n_probe > params.n_lists {
        return Err(StoreError::InvalidParams(format!(
            "n_probe ({}) exceeds n_lists ({})",
            params.n_probe, params.n_lists
        )));
    }
    if params.n_lists > count {
        return Err(StoreError::InvalidParams(format!(
            "n_lists ({}) exceeds record count ({count})",
            params.n_lists
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    score: f64,
    id: u32,
}

// Greater means worse: lower score, then higher id. The heap top is the
// current worst kept entry.
impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .score
            .total_cmp(&self.score)
            .then(self.id.cmp(&other.id))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

struct TopK {
    k: usize,
    heap: BinaryHeap<Entry>,
}

impl TopK {
    fn new(k: usize) -> Self {
        Self {
            k,
            heap: BinaryHeap::with_capacity(k + 1),
        }
    }

    #[inline]
    fn push(&mut self, score: f64, id: u32) {
        let e = Entry { score, id };
        if self.heap.len() < self.k {
            self.heap.push(e);
        } else if let Some(mut worst) = self.heap.peek_mut() {
            if e < *worst {
                *worst = e;
            }
        }
    }

    /// Best first.
    fn into_sorted(self) -> Vec<(f64, u32)> {
        self.heap
            .into_sorted_vec()
            .into_iter()
            .map(|e| (e.score, e.id))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::EmbeddingMatrix;

    fn store(rows: &[&[f32]]) -> CaptionStore {
        let dim = rows[0].len();
        let data = rows.iter().flat_map(|r| r.iter().copied()).collect();
        let texts = (0..rows.len()).map(|i| format!("caption {i}")).collect();
        CaptionStore::from_parts(texts, EmbeddingMatrix::new(dim, data).unwrap()).unwrap()
    }

    #[test]
    fn topk_keeps_best_with_id_tiebreak() {
        let mut t = TopK::new(3);
        for (s, id) in [(0.5, 4), (0.9, 2), (0.5, 1), (0.1, 0), (0.5, 3)] {
            t.push(s, id);
        }
        assert_eq!(t.into_sorted(), vec![(0.9, 2), (0.5, 1), (0.5, 3)]);
    }

    #[test]
    fn ties_break_by_ascending_id() {
        let idx = CaptionIndex::exact(store(&[&[1.0, 0.0], &[0.0, 1.0], &[1.0, 0.0], &[1.0, 0.0]]))
            .unwrap();
        let r = idx
            .retrieve_topk(&Embedding::new(vec![1.0, 0.0]).unwrap(), 2)
            .unwrap();
        assert_eq!(r.ids(), vec![0, 2]);
    }

    #[test]
    fn k_larger_than_store_returns_everything_sorted() {
        let idx = CaptionIndex::exact(store(&[&[0.0, 1.0], &[1.0, 0.0], &[0.6, 0.8]])).unwrap();
        let r = idx
            .retrieve_topk(&Embedding::new(vec![1.0, 0.0]).unwrap(), 10)
            .unwrap();
        assert_eq!(r.ids(), vec![1, 2, 0]);
        assert!(r.hits.windows(2).all(|w| w[0].score >= w[1].score));
    }

    #[test]
    fn centroid_is_mean_of_hits() {
        let idx = CaptionIndex::exact(store(&[&[1.0, 0.0], &[0.0, 1.0], &[-1.0, 0.0]])).unwrap();
        let r = idx
            .retrieve_topk(&Embedding::new(vec![1.0, 1.0]).unwrap(), 2)
            .unwrap();
        assert_eq!(r.centroid.as_slice(), &[0.5, 0.5]);
    }

    #[test]
    fn errors() {
        let idx = CaptionIndex::exact(store(&[&[1.0, 0.0]])).unwrap();
        assert!(matches!(
            idx.retrieve_topk(&Embedding::new(vec![1.0]).unwrap(), 1),
            Err(StoreError::Embedding(
                EmbeddingError::DimensionMismatch { .. }
            ))
        ));
        assert!(matches!(
            idx.retrieve_topk(&Embedding::new(vec![1.0, 0.0]).unwrap(), 0),
            Err(StoreError::InvalidParams(_))
        ));
        let four = store(&[&[1.0, 0.0], &[0.0, 1.0], &[1.0, 0.0], &[0.0, 1.0]]);
        assert!(matches!(
            CaptionIndex::build(
                four,
                IndexKind::QuantizedIvf,
                Some(IvfParams {
                    n_lists: 4,
                    n_probe: 8
                })
            ),
            Err(StoreError::InvalidParams(_))
        ));
        let empty =
            CaptionStore::from_parts(vec![], EmbeddingMatrix::new(2, vec![]).unwrap()).unwrap();
        assert!(matches!(
            CaptionIndex::exact(empty),
            Err(StoreError::EmptyStore)
        ));
    }
}
