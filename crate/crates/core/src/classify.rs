//! Vocabulary-free classification: retrieve captions, extract candidates,
//! score them against the image and the caption centroid.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::candidates::{CandidatePipeline, FilterConfig, PipelineError};
use crate::embedding::{
    cosine_similarity, l2_normalize, mean_embedding, Embedding, EmbeddingError,
};
use crate::provider::{EmbeddingProvider, ProviderError, Role};
use crate::store::{CaptionIndex, RetrievalResult, StoreError, DEFAULT_TOP_K};

pub const DEFAULT_ALPHA: f64 = 0.7;
pub const DEFAULT_TEMPLATE: &str = "a photo of a {}";
const PLACEHOLDER: &str = "{}";

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("no candidates to score")]
    EmptyCandidates,
    #[error("retrieved captions yield no candidate names")]
    NoCandidates,
    #[error("invalid classifier config: {0}")]
    InvalidConfig(String),
    #[error("template {0:?} must contain {{}} exactly once")]
    BadTemplate(String),
    #[error("fixed vocabulary: {0}")]
    Vocabulary(String),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("cannot read {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Prompt templates, each with exactly one `{}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct TemplateSet(Vec<String>);

impl TemplateSet {
    pub fn new<I, S>(templates: I) -> Result<Self, ClassifyError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let templates: Vec<String> = templates.into_iter().map(Into::into).collect();
        if templates.is_empty() {
            return Err(ClassifyError::InvalidConfig("template set is empty".into()));
        }
        if let Some(bad) = templates
            .iter()
            .find(|t| t.matches(PLACEHOLDER).count() != 1)
        {
            return Err(ClassifyError::BadTemplate(bad.clone()));
        }
        Ok(Self(templates))
    }

    /// One template per non-blank line.
    pub fn from_file(path: &Path) -> Result<Self, ClassifyError> {
        let text = std::fs::read_to_string(path).map_err(|source| ClassifyError::Io {
            path: path.into(),
            source,
        })?;
        Self::new(text.lines().map(str::trim).filter(|l| !l.is_empty()))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn templates(&self) -> &[String] {
        &self.0
    }

    pub fn fill(&self, name: &str) -> Vec<String> {
        self.0
            .iter()
            .map(|t| t.replacen(PLACEHOLDER, name, 1))
            .collect()
    }
}

impl Default for TemplateSet {
    fn default() -> Self {
        Self(vec![DEFAULT_TEMPLATE.to_string()])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassifierConfig {
    pub alpha: f64,
    pub k: usize,
    pub templates: TemplateSet,
    pub filter: FilterConfig,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            k: DEFAULT_TOP_K,
            templates: TemplateSet::default(),
            filter: FilterConfig::default(),
        }
    }
}

impl ClassifierConfig {
    pub fn validate(&self) -> Result<(), ClassifyError> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(ClassifyError::InvalidConfig(format!(
                "alpha {} outside [0, 1]",
                self.alpha
            )));
        }
        if self.k == 0 {
            return Err(ClassifyError::InvalidConfig("k must be at least 1".into()));
        }
        self.filter.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub s_v: f64,
    pub s_t: f64,
    pub s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredCandidate {
    pub name: String,
    #[serde(flatten)]
    pub score: Score,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    /// Sorted by `s` descending, ties by name.
    pub ranked: Vec<ScoredCandidate>,
    pub retrieved_caption_ids: Vec<usize>,
}

impl Prediction {
    pub fn top1(&self) -> &str {
        &self.ranked[0].name
    }
}

/// Mean of the provider's embeddings of every filled template, normalized.
/// A single template returns the provider's embedding unchanged.
pub fn ensemble_text_embedding(
    candidate: &str,
    templates: &TemplateSet,
    provider: &dyn EmbeddingProvider,
) -> Result<Embedding, ClassifyError> {
    let mut embs = provider.embed_texts(Role::JointText, &templates.fill(candidate))?;
    ensemble(&mut embs)
}

fn ensemble(embs: &mut Vec<Embedding>) -> Result<Embedding, ClassifyError> {
    if embs.len() == 1 {
        return Ok(embs.pop().unwrap());
    }
    Ok(l2_normalize(&mean_embedding(embs.iter())?)?)
}

/// Softmax with max subtraction.
pub fn softmax(xs: &[f64]) -> Vec<f64> {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = xs.iter().map(|x| (x - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

/// Fused scores: `s = alpha * softmax(s_v) + (1 - alpha) * softmax(s_t)`, where
/// `s_v` is image-to-candidate and `s_t` centroid-to-candidate cosine.
pub fn score_candidates(
    image: &Embedding,
    candidates: &[Embedding],
    centroid: &Embedding,
    alpha: f64,
) -> Result<Vec<Score>, ClassifyError> {
    if candidates.is_empty() {
        return Err(ClassifyError::EmptyCandidates);
    }
    let s_v = candidates
        .iter()
        .map(|c| cosine_similarity(image, c))
        .collect::<Result<Vec<_>, _>>()?;
    let s_t = candidates
        .iter()
        .map(|c| cosine_similarity(centroid, c))
        .collect::<Result<Vec<_>, _>>()?;
    let (p_v, p_t) = (softmax(&s_v), softmax(&s_t));
    Ok((0..candidates.len())
        .map(|i| Score {
            s_v: s_v[i],
            s_t: s_t[i],
            s: alpha * p_v[i] + (1.0 - alpha) * p_t[i],
        })
        .collect())
}

/// Sorts by score descending, then name ascending.
pub fn rank(names: Vec<String>, scores: Vec<Score>) -> Vec<ScoredCandidate> {
    let mut ranked: Vec<ScoredCandidate> = names
        .into_iter()
        .zip(scores)
        .map(|(name, score)| ScoredCandidate { name, score })
        .collect();
    ranked.sort_by(|a, b| {
        b.score
            .s
            .partial_cmp(&a.score.s)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.name.cmp(&b.name))
    });
    ranked
}

/// Classifier bound to an index and a provider. Candidate text embeddings are
/// cached for the lifetime of the value.
pub struct Classifier<'a> {
    index: &'a CaptionIndex,
    provider: &'a dyn EmbeddingProvider,
    cfg: ClassifierConfig,
    pipeline: CandidatePipeline,
    cache: Mutex<HashMap<String, Embedding>>,
}

impl<'a> Classifier<'a> {
    pub fn new(
        index: &'a CaptionIndex,
        provider: &'a dyn EmbeddingProvider,
        cfg: ClassifierConfig,
    ) -> Result<Self, ClassifyError> {
        cfg.validate()?;
        if let Some(d) = provider.dim(Role::JointText) {
            if d != index.dim() {
                return Err(EmbeddingError::DimensionMismatch {
                    expected: index.dim(),
                    actual: d,
                }
                .into());
            }
        }
        let pipeline = CandidatePipeline::new(cfg.filter.clone())?;
        Ok(Self {
            index,
            provider,
            cfg,
            pipeline,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn config(&self) -> &ClassifierConfig {
        &self.cfg
    }

    pub fn index(&self) -> &CaptionIndex {
        self.index
    }

    pub fn provider(&self) -> &dyn EmbeddingProvider {
        self.provider
    }

    pub fn pipeline(&self) -> &CandidatePipeline {
        &self.pipeline
    }

    /// Ensembled text embeddings for `names`, using and filling the cache.
    /// Missing names go to the provider in one batch.
    pub fn candidate_embeddings(&self, names: &[String]) -> Result<Vec<Embedding>, ClassifyError> {
        let missing: Vec<&String> = {
            let cache = self.cache.lock().unwrap();
            let mut seen = std::collections::BTreeSet::new();
            names
                .iter()
                .filter(|n| !cache.contains_key(*n) && seen.insert(*n))
                .collect()
        };
        if !missing.is_empty() {
            let t = self.cfg.templates.len();
            let prompts: Vec<String> = missing
                .iter()
                .flat_map(|n| self.cfg.templates.fill(n))
                .collect();
            let embs = self.provider.embed_texts(Role::JointText, &prompts)?;
            let mut fresh = Vec::with_capacity(missing.len());
            for (name, chunk) in missing.iter().zip(embs.chunks(t)) {
                fresh.push(((*name).clone(), ensemble(&mut chunk.to_vec())?));
            }
            self.cache.lock().unwrap().extend(fresh);
        }
        let cache = self.cache.lock().unwrap();
        Ok(names.iter().map(|n| cache[n].clone()).collect())
    }

    /// Candidate names for a retrieval result, in lexicographic order.
    pub fn candidates(&self, retrieved: &RetrievalResult) -> Result<Vec<String>, ClassifyError> {
        let names = self.pipeline.extract(retrieved.texts()).names();
        if !names.is_empty() {
            return Ok(names);
        }
        // Fallback: the words of the closest caption, without the filter stage.
        let closest = retrieved.hits.first().ok_or(ClassifyError::NoCandidates)?;
        let words: std::collections::BTreeSet<String> =
            self.pipeline.words(&closest.text).into_iter().collect();
        if words.is_empty() {
            return Err(ClassifyError::NoCandidates);
        }
        log::debug!(
            "no filtered candidates; falling back to words of caption {}",
            closest.id
        );
        Ok(words.into_iter().collect())
    }

    pub fn classify(&self, image: &Embedding) -> Result<Prediction, ClassifyError> {
        let retrieved = self.index.retrieve_topk(image, self.cfg.k)?;
        self.classify_retrieved(image, &retrieved)
    }

    /// Scores candidates from an existing retrieval result.
    pub fn classify_retrieved(
        &self,
        image: &Embedding,
        retrieved: &RetrievalResult,
    ) -> Result<Prediction, ClassifyError> {
        let names = self.candidates(retrieved)?;
        let embs = self.candidate_embeddings(&names)?;
        let scores = score_candidates(image, &embs, &retrieved.centroid, self.cfg.alpha)?;
        Ok(Prediction {
            ranked: rank(names, scores),
            retrieved_caption_ids: retrieved.ids(),
        })
    }

    /// Classifies many images. Candidate embeddings for the whole batch are
    /// requested before scoring.
    pub fn classify_batch(&self, images: &[Embedding]) -> Result<Vec<Prediction>, ClassifyError> {
        let retrieved = self.index.retrieve_batch(images, self.cfg.k)?;
        let names: Vec<Vec<String>> = retrieved
            .iter()
            .map(|r| self.candidates(r))
            .collect::<Result<_, _>>()?;
        let mut all: Vec<String> = names.iter().flatten().cloned().collect();
        all.sort();
        all.dedup();
        self.candidate_embeddings(&all)?;
        images
            .par_iter()
            .zip(retrieved.par_iter())
            .map(|(img, r)| self.classify_retrieved(img, r))
            .collect()
    }
}

/// One-shot classification. Prefer [`Classifier`] for more than one image.
pub fn classify(
    image: &Embedding,
    index: &CaptionIndex,
    cfg: &ClassifierConfig,
    provider: &dyn EmbeddingProvider,
) -> Result<Prediction, ClassifyError> {
    Classifier::new(index, provider, cfg.clone())?.classify(image)
}

/// Closed-set zero-shot baseline over a fixed list of class names.
#[derive(Debug, Clone)]
pub struct FixedVocabulary {
    names: Vec<String>,
    embeddings: Vec<Embedding>,
}

impl FixedVocabulary {
    pub fn new(names: Vec<String>, embeddings: Vec<Embedding>) -> Result<Self, ClassifyError> {
        if names.is_empty() {
            return Err(ClassifyError::Vocabulary("no class names".into()));
        }
        if names.len() != embeddings.len() {
            return Err(ClassifyError::Vocabulary(format!(
                "{} names but {} embeddings",
                names.len(),
                embeddings.len()
            )));
        }
        let mut counts = BTreeMap::new();
        for n in &names {
            *counts.entry(n).or_insert(0) += 1;
        }
        if let Some((dup, _)) = counts.iter().find(|(_, c)| **c > 1) {
            return Err(ClassifyError::Vocabulary(format!("duplicate name {dup:?}")));
        }
        Ok(Self { names, embeddings })
    }

    /// Embeds every name through the template set.
    pub fn from_names(
        names: Vec<String>,
        templates: &TemplateSet,
        provider: &dyn EmbeddingProvider,
    ) -> Result<Self, ClassifyError> {
        let embeddings = names
            .iter()
            .map(|n| ensemble_text_embedding(n, templates, provider))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(names, embeddings)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn embeddings(&self) -> &[Embedding] {
        &self.embeddings
    }
}

/// Name whose embedding is most similar to the image; ties go to the
/// lexicographically smaller name.
pub fn classify_fixed_vocabulary(
    image: &Embedding,
    vocab: &FixedVocabulary,
) -> Result<String, ClassifyError> {
    let mut best: Option<(f64, &String)> = None;
    for (name, emb) in vocab.names.iter().zip(&vocab.embeddings) {
        let s = cosine_similarity(image, emb)?;
        best = match best {
            Some((bs, bn)) if bs > s || (bs == s && bn < name) => Some((bs, bn)),
            _ => Some((s, name)),
        };
    }
    Ok(best.expect("vocabulary is non-empty").1.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::provider::MockProvider;
    use crate::store::{CaptionStore, EmbeddingMatrix};
    use proptest::prelude::*;

    fn e(v: &[f32]) -> Embedding {
        Embedding::new(v.to_vec()).unwrap()
    }

    #[test]
    fn templates_validated() {
        assert!(TemplateSet::new(["a {} here"]).is_ok());
        assert!(matches!(
            TemplateSet::new(["none"]),
            Err(ClassifyError::BadTemplate(_))
        ));
        assert!(matches!(
            TemplateSet::new(["{} and {}"]),
            Err(ClassifyError::BadTemplate(_))
        ));
        assert!(TemplateSet::new(Vec::<String>::new()).is_err());
        assert_eq!(TemplateSet::default().fill("cat"), vec!["a photo of a cat"]);
    }

    #[test]
    fn ensemble_examples() {
        let p = MockProvider::new(1);
        let one = ensemble_text_embedding("cat", &TemplateSet::default(), &p).unwrap();
        let direct = p
            .embed_texts(Role::JointText, &["a photo of a cat".into()])
            .unwrap()
            .pop()
            .unwrap();
        assert_eq!(one, direct);

        let same = TemplateSet::new(["a photo of a {}", "a photo of a {}"]).unwrap();
        let twice = ensemble_text_embedding("cat", &same, &p).unwrap();
        assert!(cosine_similarity(&twice, &direct).unwrap() > 1.0 - 1e-6);

        let mut orth = vec![e(&[1.0, 0.0, 0.0]), e(&[0.0, 1.0, 0.0])];
        let m = ensemble(&mut orth).unwrap();
        let h = std::f32::consts::FRAC_1_SQRT_2;
        for (a, b) in m.as_slice().iter().zip([h, h, 0.0]) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn score_examples() {
        let single =
            score_candidates(&e(&[1.0, 0.0]), &[e(&[0.0, 1.0])], &e(&[1.0, 1.0]), 0.3).unwrap();
        assert!((single[0].s - 1.0).abs() < 1e-12);

        assert!(matches!(
            score_candidates(&e(&[1.0, 0.0]), &[], &e(&[1.0, 0.0]), 0.7),
            Err(ClassifyError::EmptyCandidates)
        ));
        assert!(matches!(
            score_candidates(
                &e(&[1.0, 0.0]),
                &[e(&[1.0, 0.0, 0.0])],
                &e(&[1.0, 0.0]),
                0.7
            ),
            Err(ClassifyError::Embedding(
                EmbeddingError::DimensionMismatch { .. }
            ))
        ));
    }

    /// Builds unit vectors with chosen cosines to fixed axes, so that s_v and
    /// s_t can be set directly.
    fn with_scores(sv: &[f64], st: &[f64]) -> (Embedding, Vec<Embedding>, Embedding) {
        let image = e(&[1.0, 0.0, 0.0]);
        let centroid = e(&[0.0, 1.0, 0.0]);
        let cands = sv
            .iter()
            .zip(st)
            .map(|(&a, &b)| {
                let z = (1.0 - a * a - b * b).sqrt();
                e(&[a as f32, b as f32, z as f32])
            })
            .collect();
        (image, cands, centroid)
    }

    #[test]
    fn two_candidate_hand_values() {
        let (img, cands, cen) = with_scores(&[0.2, 0.1], &[0.1, 0.3]);
        let s = score_candidates(&img, &cands, &cen, 0.7).unwrap();
        // softmax((0.2, 0.1)) = (0.524979, 0.475021); softmax((0.1, 0.3)) = (0.450166, 0.549834)
        let sv0 = 1.0 / (1.0 + (-0.1f64).exp());
        let st0 = 1.0 / (1.0 + (0.2f64).exp());
        let want0 = 0.7 * sv0 + 0.3 * st0;
        assert!((s[0].s - want0).abs() < 1e-6);
        assert!((s[0].s - 0.5025).abs() < 1e-3);
        assert!((s[1].s - 0.4975).abs() < 1e-3);
    }

    fn argmax(xs: impl Iterator<Item = f64>) -> usize {
        let v: Vec<f64> = xs.collect();
        (0..v.len()).fold(0, |b, i| if v[i] > v[b] { i } else { b })
    }

    proptest! {
        #[test]
        fn scores_bounded_and_endpoints(pairs in prop::collection::vec((-0.7f64..0.7, -0.7f64..0.7), 1..8), alpha in 0.0f64..=1.0) {
            let (sv, st): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let (img, cands, cen) = with_scores(&sv, &st);
            let s = score_candidates(&img, &cands, &cen, alpha).unwrap();
            let total: f64 = s.iter().map(|x| x.s).sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
            prop_assert!(s.iter().all(|x| (0.0..=1.0).contains(&x.s)));
            let s1 = score_candidates(&img, &cands, &cen, 1.0).unwrap();
            prop_assert_eq!(argmax(s1.iter().map(|x| x.s)), argmax(s1.iter().map(|x| x.s_v)));
            let s0 = score_candidates(&img, &cands, &cen, 0.0).unwrap();
            prop_assert_eq!(argmax(s0.iter().map(|x| x.s)), argmax(s0.iter().map(|x| x.s_t)));
        }

        #[test]
        fn softmax_shift_invariant(xs in prop::collection::vec(-1.0f64..1.0, 1..10), c in -5.0f64..5.0) {
            let a = softmax(&xs);
            let shifted: Vec<f64> = xs.iter().map(|x| x + c).collect();
            let b = softmax(&shifted);
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }

    fn store_of(p: &MockProvider, captions: &[&str]) -> CaptionIndex {
        let texts: Vec<String> = captions.iter().map(|s| s.to_string()).collect();
        let embs = p.embed_texts(Role::JointText, &texts).unwrap();
        let dim = embs[0].dim();
        let data = embs.into_iter().flat_map(Embedding::into_vec).collect();
        CaptionIndex::exact(
            CaptionStore::from_parts(texts, EmbeddingMatrix::new(dim, data).unwrap()).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn classify_single_candidate() {
        let p = MockProvider::new(2);
        let index = store_of(&p, &["a photo of a cat"; 12]);
        let img = p
            .embed_texts(Role::JointText, &["zebra".into()])
            .unwrap()
            .pop()
            .unwrap();
        let pred = classify(&img, &index, &ClassifierConfig::default(), &p).unwrap();
        assert_eq!(pred.top1(), "cat");
        assert_eq!(pred.ranked.len(), 1);
        assert_eq!(pred.retrieved_caption_ids.len(), 10);
    }

    #[test]
    fn classify_two_clusters() {
        let p = MockProvider::new(2);
        let mut caps = vec!["a cat on the sofa"; 10];
        caps.extend(vec!["a dog in the park"; 10]);
        let caps: Vec<String> = caps
            .iter()
            .enumerate()
            .map(|(i, c)| format!("{c} {}", ["one", "two"][i % 2]))
            .collect();
        let refs: Vec<&str> = caps.iter().map(String::as_str).collect();
        let index = store_of(&p, &refs);
        let img = p.anchor(Role::JointImage, "cat").unwrap();
        let cfg = ClassifierConfig {
            k: 5,
            ..ClassifierConfig::default()
        };
        let pred = classify(&img, &index, &cfg, &p).unwrap();
        assert_eq!(pred.top1(), "cat");
        assert!(pred.retrieved_caption_ids.iter().all(|&id| id < 10));
    }

    #[test]
    fn fallback_uses_closest_caption() {
        let p = MockProvider::new(2);
        let index = store_of(&p, &["zebra crossing"]);
        let img = p
            .embed_texts(Role::JointText, &["zebra crossing".into()])
            .unwrap()
            .pop()
            .unwrap();
        let pred = classify(&img, &index, &ClassifierConfig::default(), &p).unwrap();
        let names: Vec<&str> = pred.ranked.iter().map(|c| c.name.as_str()).collect();
        let mut sorted = names.clone();
        sorted.sort();
        assert_eq!(sorted, vec!["crossing", "zebra"]);

        let index = store_of(&p, &["a ⟨PERSON⟩ at 12:30"]);
        assert!(matches!(
            classify(&img, &index, &ClassifierConfig::default(), &p),
            Err(ClassifyError::NoCandidates)
        ));
    }

    #[test]
    fn invalid_config() {
        for cfg in [
            ClassifierConfig {
                alpha: 1.5,
                ..ClassifierConfig::default()
            },
            ClassifierConfig {
                k: 0,
                ..ClassifierConfig::default()
            },
        ] {
            assert!(matches!(
                cfg.validate(),
                Err(ClassifyError::InvalidConfig(_))
            ));
        }
    }

    #[test]
    fn fixed_vocabulary() {
        let v = FixedVocabulary::new(vec!["only".into()], vec![e(&[1.0, 0.0])]).unwrap();
        assert_eq!(
            classify_fixed_vocabulary(&e(&[0.0, 1.0]), &v).unwrap(),
            "only"
        );

        let v = FixedVocabulary::new(
            vec!["b".into(), "a".into(), "c".into()],
            vec![e(&[1.0, 0.0]), e(&[1.0, 0.0]), e(&[0.0, 1.0])],
        )
        .unwrap();
        assert_eq!(classify_fixed_vocabulary(&e(&[1.0, 0.0]), &v).unwrap(), "a");
        assert_eq!(classify_fixed_vocabulary(&e(&[0.0, 1.0]), &v).unwrap(), "c");

        assert!(FixedVocabulary::new(vec![], vec![]).is_err());
        assert!(
            FixedVocabulary::new(vec!["a".into(), "a".into()], vec![e(&[1.0]), e(&[1.0])]).is_err()
        );

        let p = MockProvider::new(0);
        let v = FixedVocabulary::from_names(
            vec!["cat".into(), "dog".into()],
            &TemplateSet::default(),
            &p,
        )
        .unwrap();
        let img = p.anchor(Role::JointImage, "dog").unwrap();
        assert_eq!(classify_fixed_vocabulary(&img, &v).unwrap(), "dog");
    }
}
