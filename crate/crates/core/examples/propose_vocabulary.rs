//! Image-conditioned vocabulary for a downstream open-vocabulary segmenter.
use rand::SeedableRng;
use vocab_free::candidates::FilterConfig;
use vocab_free::dense::{encode_png, propose_vocabulary};
use vocab_free::fixtures::{concept_color, planted_index, split_image};
use vocab_free::provider::{EmbeddingProvider, ImageRef, MockProvider};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
    let provider = MockProvider::new(0);
    let index = planted_index(&provider, &["cat", "dog", "bird", "tree"], 60, &mut rng)?;
    let img = split_image(
        concept_color(&provider, "bird"),
        concept_color(&provider, "tree"),
        64,
        64,
        20,
        &mut rng,
    );
    let emb = provider.embed_image(&ImageRef::Png(encode_png(&img)?))?;
    for k in [5, 10, 30] {
        println!(
            "k={k:<3} {:?}",
            propose_vocabulary(&emb, &index, k, &FilterConfig::default())?
        );
    }
    Ok(())
}
