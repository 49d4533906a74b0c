//! Deterministic in-process provider.
//!
//! Unknown text maps to a unit vector seeded from `sha256(seed, role, text)`.
//! Planted concepts carry an anchor vector: a text mentioning a concept (or
//! one of its aliases) embeds near that anchor, and an image whose pixels are
//! close to a concept's color embeds near it in proportion to pixel coverage.
//! The joint roles share anchors; the sentence role has its own.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sha2::{Digest, Sha256};

use super::protocol::codes;
use super::{EmbeddingProvider, ImageRef, ProviderError, Role};
use crate::candidates::standardize;
use crate::embedding::Embedding;

pub const DEFAULT_MOCK_DIM: usize = 64;

const NOISE_WEIGHT: f64 = 0.35;
const COLOR_RADIUS: f64 = 60.0;

#[derive(Debug, Clone)]
struct Concept {
    name: String,
    aliases: Vec<String>,
    color: Option<[u8; 3]>,
}

#[derive(Debug, Clone)]
pub struct MockProvider {
    seed: u64,
    dim: usize,
    roles: BTreeMap<Role, usize>,
    concepts: Vec<Concept>,
    /// word -> concept index
    words: BTreeMap<String, usize>,
    image_bias: Vec<(usize, f64)>,
}

/// (name, aliases, color) planted by [`MockProvider::new`].
pub const BUILTIN_CONCEPTS: &[(&str, &[&str], Option<[u8; 3]>)] = &[
    ("cat", &["kitten", "kitty"], Some([230, 140, 40])),
    ("dog", &["puppy"], Some([90, 60, 40])),
    ("bird", &[], Some([40, 90, 220])),
    ("car", &["automobile"], Some([200, 30, 30])),
    ("tree", &[], Some([30, 160, 50])),
    ("couch", &["sofa"], Some([130, 50, 160])),
    ("tv", &["television"], Some([20, 20, 20])),
    ("sky", &[], Some([150, 210, 250])),
    ("photo", &["photograph", "picture"], None),
];

impl MockProvider {
    /// Mock with the builtin planted concepts.
    pub fn new(seed: u64) -> Self {
        let mut p = Self::bare(seed, DEFAULT_MOCK_DIM);
        for (name, aliases, color) in BUILTIN_CONCEPTS {
            p = p.with_concept(name, aliases, *color);
        }
        p
    }

    /// Mock with no planted concepts.
    pub fn bare(seed: u64, dim: usize) -> Self {
        assert!(dim > 0, "mock dimension must be positive");
        let roles = [
            (Role::JointText, dim),
            (Role::JointImage, dim),
            (Role::Sentence, dim),
        ]
        .into();
        Self {
            seed,
            dim,
            roles,
            concepts: Vec::new(),
            words: BTreeMap::new(),
            image_bias: Vec::new(),
        }
    }

    /// Plants a concept. Names and aliases are matched after lowercasing and
    /// singularization.
    pub fn with_concept(mut self, name: &str, aliases: &[&str], color: Option<[u8; 3]>) -> Self {
        let idx = self.concepts.len();
        let name = standardize(name);
        self.words.insert(name.clone(), idx);
        for a in aliases {
            self.words.insert(standardize(a), idx);
        }
        self.concepts.push(Concept {
            name,
            aliases: aliases.iter().map(|s| s.to_string()).collect(),
            color,
        });
        self
    }

    /// Adds `weight` times the concept's anchor to every image embedding.
    pub fn with_image_bias(mut self, concept: &str, weight: f64) -> Self {
        let idx = *self
            .words
            .get(&standardize(concept))
            .unwrap_or_else(|| panic!("unknown concept {concept}"));
        self.image_bias.push((idx, weight));
        self
    }

    /// Drops a role from the handshake, for testing callers that need it.
    pub fn without_role(mut self, role: Role) -> Self {
        self.roles.remove(&role);
        self
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn concept_names(&self) -> Vec<&str> {
        self.concepts.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn aliases(&self, concept: &str) -> Option<&[String]> {
        self.concepts
            .iter()
            .find(|c| c.name == concept)
            .map(|c| c.aliases.as_slice())
    }

    pub fn color_of(&self, concept: &str) -> Option<[u8; 3]> {
        self.concepts
            .iter()
            .find(|c| c.name == concept)
            .and_then(|c| c.color)
    }

    /// Anchor of a planted concept in the given role's space.
    pub fn anchor(&self, role: Role, concept: &str) -> Option<Embedding> {
        let idx = *self.words.get(&standardize(concept))?;
        Some(to_embedding(self.anchor_vec(role, idx)))
    }

    fn space(role: Role) -> &'static str {
        match role {
            Role::JointText | Role::JointImage => "joint",
            Role::Sentence => "sentence",
        }
    }

    fn anchor_vec(&self, role: Role, idx: usize) -> Vec<f64> {
        let key = format!("anchor/{}/{}", Self::space(role), self.concepts[idx].name);
        hash_vector(self.seed, key.as_bytes(), self.dim)
    }

    fn text_vec(&self, role: Role, text: &str) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        let mut hit = false;
        for word in text
            .split(|c: char| !c.is_alphabetic())
            .filter(|w| !w.is_empty())
        {
            if let Some(&idx) = self.words.get(&standardize(word)) {
                add(&mut v, &self.anchor_vec(role, idx), 1.0);
                hit = true;
            }
        }
        let key = format!("text/{}/{}", role.as_str(), text);
        let noise = hash_vector(self.seed, key.as_bytes(), self.dim);
        if hit {
            normalize(&mut v);
            add(&mut v, &noise, NOISE_WEIGHT);
            normalize(&mut v);
            v
        } else {
            noise
        }
    }

    fn image_vec(&self, png: &[u8]) -> Result<Vec<f64>, ProviderError> {
        let img = image::load_from_memory_with_format(png, image::ImageFormat::Png)
            .map_err(|e| ProviderError::Decode(e.to_string()))?
            .to_rgb8();
        let total = (img.width() as usize * img.height() as usize).max(1) as f64;
        let mut coverage = vec![0usize; self.concepts.len()];
        for px in img.pixels() {
            if let Some(idx) = self.nearest_color(px.0) {
                coverage[idx] += 1;
            }
        }
        let mut v = vec![0.0; self.dim];
        let mut hit = false;
        for (idx, n) in coverage.iter().enumerate().filter(|(_, n)| **n > 0) {
            add(
                &mut v,
                &self.anchor_vec(Role::JointImage, idx),
                *n as f64 / total,
            );
            hit = true;
        }
        for &(idx, w) in &self.image_bias {
            add(&mut v, &self.anchor_vec(Role::JointImage, idx), w);
            hit = true;
        }
        let mut key = b"image/".to_vec();
        key.extend_from_slice(img.as_raw());
        let noise = hash_vector(self.seed, &key, self.dim);
        if !hit {
            return Ok(noise);
        }
        normalize(&mut v);
        add(&mut v, &noise, NOISE_WEIGHT);
        normalize(&mut v);
        Ok(v)
    }

    fn nearest_color(&self, px: [u8; 3]) -> Option<usize> {
        let mut best = None;
        let mut best_d = COLOR_RADIUS * COLOR_RADIUS;
        for (idx, c) in self.concepts.iter().enumerate() {
            let Some(col) = c.color else { continue };
            let d: f64 = (0..3).map(|i| (px[i] as f64 - col[i] as f64).powi(2)).sum();
            if d <= best_d {
                best_d = d;
                best = Some(idx);
            }
        }
        best
    }
}

impl EmbeddingProvider for MockProvider {
    fn name(&self) -> &str {
        "mock"
    }

    fn roles(&self) -> &BTreeMap<Role, usize> {
        &self.roles
    }

    fn embed_texts(&self, role: Role, texts: &[String]) -> Result<Vec<Embedding>, ProviderError> {
        if texts.is_empty() {
            return Err(ProviderError::InvalidRequest(
                "texts must not be empty".into(),
            ));
        }
        if !self.roles.contains_key(&role) || role == Role::JointImage {
            return Err(ProviderError::RoleUnavailable(role));
        }
        Ok(texts
            .iter()
            .map(|t| to_embedding(self.text_vec(role, t)))
            .collect())
    }

    fn embed_images(&self, images: &[ImageRef]) -> Result<Vec<Embedding>, ProviderError> {
        if images.is_empty() {
            return Err(ProviderError::InvalidRequest("no images given".into()));
        }
        if !self.roles.contains_key(&Role::JointImage) {
            return Err(ProviderError::RoleUnavailable(Role::JointImage));
        }
        images
            .iter()
            .map(|img| {
                let v = match img {
                    ImageRef::Png(bytes) => self.image_vec(bytes)?,
                    ImageRef::Path(path) => {
                        let bytes = std::fs::read(path).map_err(|e| {
                            ProviderError::remote(codes::IO, format!("{}: {e}", path.display()))
                        })?;
                        self.image_vec(&bytes)?
                    }
                };
                Ok(to_embedding(v))
            })
            .collect()
    }
}

fn hash_vector(seed: u64, key: &[u8], dim: usize) -> Vec<f64> {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(key);
    let mut rng = ChaCha8Rng::from_seed(h.finalize().into());
    let mut v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
    normalize(&mut v);
    v
}

fn add(acc: &mut [f64], v: &[f64], w: f64) {
    for (a, b) in acc.iter_mut().zip(v) {
        *a += w * b;
    }
}

fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

fn to_embedding(v: Vec<f64>) -> Embedding {
    Embedding::new(v.into_iter().map(|x| x as f32).collect())
        .expect("mock vectors are finite and non-zero")
}
