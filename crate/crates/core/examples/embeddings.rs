//! Unit vectors, cosine similarity and centroids.
use vocab_free::embedding::{cosine_similarity, l2_normalize, mean_embedding, Embedding};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let a = Embedding::normalized(vec![3.0, 4.0, 0.0])?;
    let b = Embedding::normalized(vec![0.0, 4.0, 3.0])?;
    println!("a = {:?}, |a| = {}", a.as_slice(), a.norm());
    println!("cos(a, b) = {:.4}", cosine_similarity(&a, &b)?);

    let centroid = l2_normalize(&mean_embedding([&a, &b])?)?;
    println!("normalized centroid = {:?}", centroid.as_slice());
    println!(
        "cos(a, centroid) = {:.4}",
        cosine_similarity(&a, &centroid)?
    );

    // zero vectors are rejected rather than producing NaNs
    println!(
        "normalize(0) -> {:?}",
        Embedding::normalized(vec![0.0; 3]).unwrap_err()
    );
    Ok(())
}
