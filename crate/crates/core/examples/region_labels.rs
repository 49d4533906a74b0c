//! Labels externally proposed regions (boxes and masks) and paints them.
use image::{GrayImage, Luma};
use rand::SeedableRng;
use vocab_free::classify::{Classifier, ClassifierConfig};
use vocab_free::dense::{embed_regions, label_regions, paint_regions, Region};
use vocab_free::fixtures::{concept_color, planted_index, split_image};
use vocab_free::provider::MockProvider;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
    let provider = MockProvider::new(0);
    let index = planted_index(&provider, &["dog", "couch"], 80, &mut rng)?;
    let img = split_image(
        concept_color(&provider, "dog"),
        concept_color(&provider, "couch"),
        128,
        96,
        20,
        &mut rng,
    );

    // right half as a mask file
    let mask = GrayImage::from_fn(128, 96, |x, _| Luma([if x >= 64 { 255 } else { 0 }]));
    mask.save(dir.path().join("right.png"))?;
    let jsonl =
        "{\"id\": 1, \"bbox\": [4, 4, 60, 90]}\n{\"id\": 2, \"mask_path\": \"right.png\"}\n";
    let mut regions = Region::parse_jsonl(jsonl, Some(dir.path()))?;

    embed_regions(&mut regions, Some(&img), &provider)?;
    let clf = Classifier::new(&index, &provider, ClassifierConfig::default())?;
    let labels = label_regions(&regions, &clf)?;
    for (id, pred) in &labels {
        println!("region {id}: {}", pred.top1());
    }
    let map = paint_regions(&regions, &labels, 128, 96)?;
    println!("painted map labels: {:?}", map.labels());
    Ok(())
}
