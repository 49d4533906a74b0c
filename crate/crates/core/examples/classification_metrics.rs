//! Scoring open-vocabulary predictions against ground-truth class names.
use vocab_free::metrics::{
    cluster_accuracy, evaluate_classification, semantic_iou, ClassRow, EmbeddingKernel, ExactKernel,
};
use vocab_free::provider::MockProvider;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let pairs = [
        ("kitten", "cat"),
        ("kitten", "cat"),
        ("sofa", "couch"),
        ("granny smith apple", "apple"),
        ("puppy", "dog"),
        ("kitten", "dog"),
    ];
    println!(
        "semantic IoU('granny smith apple', 'apple') = {:.4}",
        semantic_iou("granny smith apple", "apple")
    );
    println!("cluster accuracy = {:.4}", cluster_accuracy(&pairs)?);

    let rows: Vec<ClassRow> = pairs
        .iter()
        .enumerate()
        .map(|(i, (p, g))| ClassRow {
            id: i.to_string(),
            prediction: p.to_string(),
            ground_truth: g.to_string(),
        })
        .collect();
    let exact = evaluate_classification(&rows, &ExactKernel)?;
    let provider = MockProvider::new(0);
    let embedded = evaluate_classification(&rows, &EmbeddingKernel::new(&provider)?)?;
    println!("exact kernel:     {:?}", exact.metrics);
    println!("embedding kernel: {:?}", embedded.metrics);
    Ok(())
}
