//! Vocabulary-free classification of synthetic images, with one prompt
//! template and with a template ensemble.
use rand::SeedableRng;
use vocab_free::classify::{Classifier, ClassifierConfig, TemplateSet};
use vocab_free::dense::encode_png;
use vocab_free::fixtures::{concept_color, planted_index, solid_image};
use vocab_free::provider::{EmbeddingProvider, ImageRef, MockProvider};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let provider = MockProvider::new(0);
    let concepts = ["cat", "dog", "bird", "car", "tree"];
    let index = planted_index(&provider, &concepts, 80, &mut rng)?;

    let ensemble = TemplateSet::new([
        "a photo of a {}",
        "a picture of a {}",
        "a {} in the wild",
        "art of the {}",
    ])?;
    for (label, templates) in [
        ("single template", TemplateSet::default()),
        ("ensemble", ensemble),
    ] {
        let cfg = ClassifierConfig {
            templates,
            ..ClassifierConfig::default()
        };
        let clf = Classifier::new(&index, &provider, cfg)?;
        println!("-- {label}");
        for c in ["bird", "tree"] {
            let img = solid_image(concept_color(&provider, c), 48, 48, 20, &mut rng);
            let emb = provider.embed_image(&ImageRef::Png(encode_png(&img)?))?;
            let pred = clf.classify(&emb)?;
            let top: Vec<String> = pred
                .ranked
                .iter()
                .take(3)
                .map(|c| format!("{} {:.3}", c.name, c.score.s))
                .collect();
            println!("{c:>5} image -> {}", top.join(", "));
        }
    }
    Ok(())
}
