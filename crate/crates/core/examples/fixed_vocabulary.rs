//! Closed-set zero-shot baseline: argmax over a given list of class names.
use rand::SeedableRng;
use vocab_free::classify::{classify_fixed_vocabulary, FixedVocabulary, TemplateSet};
use vocab_free::dense::encode_png;
use vocab_free::fixtures::{concept_color, solid_image};
use vocab_free::provider::{EmbeddingProvider, ImageRef, MockProvider};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
    let provider = MockProvider::new(0);
    let names: Vec<String> = ["cat", "dog", "car", "sofa"].map(String::from).into();
    let vocab = FixedVocabulary::from_names(names, &TemplateSet::default(), &provider)?;
    for c in ["cat", "car", "couch"] {
        let img = solid_image(concept_color(&provider, c), 32, 32, 20, &mut rng);
        let emb = provider.embed_image(&ImageRef::Png(encode_png(&img)?))?;
        println!(
            "{c:>6} image -> {}",
            classify_fixed_vocabulary(&emb, &vocab)?
        );
    }
    Ok(())
}
