//! Hard, soft and remapped Jaccard indices on small label maps.
use vocab_free::labelmap::LabelMap;
use vocab_free::metrics::{evaluate_segmentation, EmbeddingKernel, ExactKernel, SegPair};
use vocab_free::provider::MockProvider;

fn map(rows: &[&str]) -> LabelMap {
    let rows: Vec<Vec<&str>> = rows
        .iter()
        .map(|r| r.split_whitespace().collect())
        .collect();
    LabelMap::from_rows(&rows)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let gt = map(&[
        "cat cat dog dog",
        "cat cat dog dog",
        "couch couch couch couch",
    ]);
    let pred = map(&[
        "kitten kitten dog dog",
        "kitten cat puppy dog",
        "sofa sofa tv tv",
    ]);
    let batch = [SegPair::new(pred, gt)];

    let provider = MockProvider::new(0);
    for (name, report) in [
        ("exact", evaluate_segmentation(&batch, &ExactKernel)?),
        (
            "embedding",
            evaluate_segmentation(&batch, &EmbeddingKernel::new(&provider)?)?,
        ),
    ] {
        let line: Vec<String> = report
            .metrics
            .iter()
            .map(|(k, v)| format!("{k}={v:.3}"))
            .collect();
        println!("{name:<10} {}", line.join(" "));
    }
    Ok(())
}
