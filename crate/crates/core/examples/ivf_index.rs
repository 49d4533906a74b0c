//! Approximate retrieval with an inverted-file index, compared against exact search.
use std::time::Instant;

use rand::SeedableRng;
use vocab_free::fixtures::{clustered_store, perturb};
use vocab_free::store::{CaptionIndex, IndexKind, IvfParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let (store, centers) = clustered_store(5_000, 128, 64, 0.6, &mut rng);
    let queries: Vec<_> = (0..200)
        .map(|i| perturb(&centers[i % centers.len()], 0.6, &mut rng))
        .collect();

    let exact = CaptionIndex::exact(store.clone())?;
    let t = Instant::now();
    let ivf = CaptionIndex::build(
        store,
        IndexKind::QuantizedIvf,
        Some(IvfParams {
            n_lists: 64,
            n_probe: 8,
        }),
    )?;
    println!("ivf build: {:?}", t.elapsed());

    let (mut hit, mut total) = (0, 0);
    let t = Instant::now();
    for q in &queries {
        let truth = exact.retrieve_topk(q, 10)?.ids();
        let approx = ivf.retrieve_topk(q, 10)?.ids();
        hit += approx.iter().filter(|id| truth.contains(id)).count();
        total += truth.len();
    }
    println!(
        "recall@10 = {:.3} over {} queries ({:?})",
        hit as f64 / total as f64,
        queries.len(),
        t.elapsed()
    );
    Ok(())
}
