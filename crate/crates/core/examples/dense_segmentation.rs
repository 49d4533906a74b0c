//! Multi-scale patch plan and dense segmentation of a two-object image.
use rand::SeedableRng;
use vocab_free::classify::{Classifier, ClassifierConfig};
use vocab_free::dense::{plan_patches, segment_dense, GridSpec};
use vocab_free::fixtures::{concept_color, planted_index, split_image};
use vocab_free::provider::MockProvider;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = GridSpec::default();
    let plan = plan_patches(256, 256, &grid)?;
    println!(
        "{} patches over a {}x{} cell map",
        plan.patches.len(),
        grid.map_cells(),
        grid.map_cells()
    );
    let cov = plan.coverage();
    let n = grid.map_cells() as usize;
    println!(
        "coverage: corner {} edge {} center {}",
        cov[0],
        cov[n / 2],
        cov[(n / 2) * n + n / 2]
    );

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
    let provider = MockProvider::new(0);
    let index = planted_index(&provider, &["car", "tree", "sky"], 80, &mut rng)?;
    let clf = Classifier::new(&index, &provider, ClassifierConfig::default())?;
    let img = split_image(
        concept_color(&provider, "car"),
        concept_color(&provider, "tree"),
        256,
        256,
        20,
        &mut rng,
    );
    let seg = segment_dense(&img, &clf, &grid)?;
    for row in &seg.cells {
        println!("{}", row.iter().map(|l| &l[..1]).collect::<String>());
    }
    let full = seg.upsample(256, 256);
    println!("labels at full resolution: {:?}", full.labels());
    Ok(())
}
