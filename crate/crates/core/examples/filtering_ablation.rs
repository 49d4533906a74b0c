//! Classification with and without the candidate filtering pipeline on a
//! fixture whose images also match the word "photo".
use rand::SeedableRng;
use vocab_free::candidates::FilterConfig;
use vocab_free::classify::{Classifier, ClassifierConfig};
use vocab_free::dense::encode_png;
use vocab_free::fixtures::{concept_color, planted_index, solid_image};
use vocab_free::metrics::{cluster_accuracy, semantic_iou};
use vocab_free::provider::{EmbeddingProvider, ImageRef, MockProvider};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let provider = MockProvider::new(11).with_image_bias("photo", 2.5);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
    let concepts = ["cat", "dog", "bird", "car", "tree", "couch"];
    let index = planted_index(&provider, &concepts, 100, &mut rng)?;
    let mut images = Vec::new();
    let mut truth = Vec::new();
    for i in 0..120 {
        let c = concepts[i % concepts.len()];
        let img = solid_image(concept_color(&provider, c), 32, 32, 20, &mut rng);
        images.push(provider.embed_image(&ImageRef::Png(encode_png(&img)?))?);
        truth.push(c);
    }
    for (name, filter) in [
        ("full pipeline", FilterConfig::default()),
        ("no filtering", FilterConfig::unfiltered()),
    ] {
        let clf = Classifier::new(
            &index,
            &provider,
            ClassifierConfig {
                filter,
                ..ClassifierConfig::default()
            },
        )?;
        let preds = clf.classify_batch(&images)?;
        let pairs: Vec<(&str, &str)> = preds
            .iter()
            .zip(&truth)
            .map(|(p, g)| (p.top1(), *g))
            .collect();
        let iou = pairs.iter().map(|(p, g)| semantic_iou(p, g)).sum::<f64>() / pairs.len() as f64;
        let exact = pairs.iter().filter(|(p, g)| p == g).count() as f64 / pairs.len() as f64;
        println!(
            "{name:<14} cluster acc {:.3}  semantic IoU {iou:.3}  exact {exact:.3}  e.g. {:?}",
            cluster_accuracy(&pairs)?,
            &pairs[..3]
        );
    }
    Ok(())
}
