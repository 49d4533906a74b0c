//! Synthetic data for tests, examples and demos: planted caption databases
//! that pair with [`MockProvider`], colored query images, and clustered
//! random embedding stores.

use image::{Rgb, RgbImage};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::embedding::Embedding;
use crate::provider::{EmbeddingProvider, MockProvider, ProviderError, Role};
use crate::store::{CaptionIndex, CaptionStore, EmbeddingMatrix, StoreError};

const ADJECTIVES: &[&str] = &[
    "small", "big", "cute", "young", "old", "happy", "little", "fluffy",
];
const VERBS: &[&str] = &[
    "sitting", "playing", "sleeping", "lying", "standing", "running",
];
const PLACES: &[&str] = &[
    "on the grass",
    "in the house",
    "at the beach",
    "near the window",
    "in the garden",
    "on the street",
    "on the floor",
    "under a table",
];
const NOISE: &[&str] = &[
    "stock photo of a {}",
    "{} image 2019",
    "<PERSON> with the {}",
    "IMG_0042.jpg {} www.pets.com",
    "my {}'s photo",
];

/// Caption mentioning `concept`. About one in five carries meta words,
/// markup or file names.
pub fn caption_for<R: Rng>(concept: &str, rng: &mut R) -> String {
    if rng.gen_bool(0.2) {
        return NOISE.choose(rng).unwrap().replace("{}", concept);
    }
    let plural = rng.gen_bool(0.3);
    let noun = if plural {
        format!("{concept}s")
    } else {
        concept.to_string()
    };
    let det = if plural { "two" } else { "a" };
    format!(
        "{det} {} {noun} {} {}",
        ADJECTIVES.choose(rng).unwrap(),
        VERBS.choose(rng).unwrap(),
        PLACES.choose(rng).unwrap()
    )
}

/// `per_concept` captions for every concept, shuffled.
pub fn planted_captions<R: Rng>(concepts: &[&str], per_concept: usize, rng: &mut R) -> Vec<String> {
    let mut out: Vec<String> = concepts
        .iter()
        .flat_map(|c| {
            (0..per_concept)
                .map(|_| caption_for(c, rng))
                .collect::<Vec<_>>()
        })
        .collect();
    out.shuffle(rng);
    out
}

#[derive(Debug, thiserror::Error)]
pub enum FixtureError {
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// Embeds `captions` with the provider's joint text role.
pub fn caption_store(
    provider: &dyn EmbeddingProvider,
    captions: Vec<String>,
) -> Result<CaptionStore, FixtureError> {
    let embs = provider.embed_texts(Role::JointText, &captions)?;
    let dim = embs[0].dim();
    let data = embs.into_iter().flat_map(Embedding::into_vec).collect();
    Ok(CaptionStore::from_parts(
        captions,
        EmbeddingMatrix::new(dim, data)?,
    )?)
}

/// Exact index over planted captions for `concepts`.
pub fn planted_index<R: Rng>(
    provider: &dyn EmbeddingProvider,
    concepts: &[&str],
    per_concept: usize,
    rng: &mut R,
) -> Result<CaptionIndex, FixtureError> {
    let store = caption_store(provider, planted_captions(concepts, per_concept, rng))?;
    Ok(CaptionIndex::exact(store)?)
}

fn jitter<R: Rng>(c: [u8; 3], amount: i16, rng: &mut R) -> Rgb<u8> {
    Rgb(c.map(|v| (v as i16 + rng.gen_range(-amount..=amount)).clamp(0, 255) as u8))
}

/// Image filled with `color`, each pixel jittered by up to `amount`.
pub fn solid_image<R: Rng>(
    color: [u8; 3],
    width: u32,
    height: u32,
    amount: i16,
    rng: &mut R,
) -> RgbImage {
    RgbImage::from_fn(width, height, |_, _| jitter(color, amount, rng))
}

/// Left half `left`, right half `right`.
pub fn split_image<R: Rng>(
    left: [u8; 3],
    right: [u8; 3],
    width: u32,
    height: u32,
    amount: i16,
    rng: &mut R,
) -> RgbImage {
    RgbImage::from_fn(width, height, |x, _| {
        jitter(if x < width / 2 { left } else { right }, amount, rng)
    })
}

/// Color of a planted concept. Panics if the mock has none for it.
pub fn concept_color(provider: &MockProvider, concept: &str) -> [u8; 3] {
    provider
        .color_of(concept)
        .unwrap_or_else(|| panic!("concept {concept} has no color"))
}

pub fn random_unit<R: Rng>(dim: usize, rng: &mut R) -> Embedding {
    let v: Vec<f32> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
    Embedding::normalized(v).expect("gaussian vector is non-zero")
}

/// Unit vector near `center`: `center + spread * g / sqrt(dim)`, normalized.
pub fn perturb<R: Rng>(center: &Embedding, spread: f64, rng: &mut R) -> Embedding {
    let scale = spread / (center.dim() as f64).sqrt();
    let v: Vec<f32> = center
        .as_slice()
        .iter()
        .map(|c| {
            let g: f64 = StandardNormal.sample(rng);
            (*c as f64 + scale * g) as f32
        })
        .collect();
    Embedding::normalized(v).expect("perturbed vector is non-zero")
}

/// `count` unit vectors drawn around `topics` random centers, with captions
/// `"record {i} topic {t}"`. Returns the store and the centers.
pub fn clustered_store<R: Rng>(
    count: usize,
    dim: usize,
    topics: usize,
    spread: f64,
    rng: &mut R,
) -> (CaptionStore, Vec<Embedding>) {
    let centers: Vec<Embedding> = (0..topics).map(|_| random_unit(dim, rng)).collect();
    let mut texts = Vec::with_capacity(count);
    let mut data = Vec::with_capacity(count * dim);
    for i in 0..count {
        let t = rng.gen_range(0..topics);
        texts.push(format!("record {i} topic {t}"));
        data.extend_from_slice(perturb(&centers[t], spread, rng).as_slice());
    }
    let store = CaptionStore::from_parts(texts, EmbeddingMatrix::new(dim, data).unwrap()).unwrap();
    (store, centers)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn planted_captions_mention_concepts() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let caps = planted_captions(&["cat", "dog"], 50, &mut rng);
        assert_eq!(caps.len(), 100);
        assert!(caps.iter().all(|c| c.contains("cat") || c.contains("dog")));
    }

    #[test]
    fn clustered_store_shape() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let (store, centers) = clustered_store(200, 16, 5, 0.5, &mut rng);
        assert_eq!(store.len(), 200);
        assert_eq!(centers.len(), 5);
        assert_eq!(store.renormalized(), 0);
    }
}
