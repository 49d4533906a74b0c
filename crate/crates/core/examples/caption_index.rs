//! Builds a caption store from a VFEB file, indexes it, persists the index
//! and queries the reloaded copy.
use rand::SeedableRng;
use vocab_free::embedding::Embedding;
use vocab_free::fixtures::random_unit;
use vocab_free::store::{self, vfeb, CaptionIndex, EmbeddingMatrix};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    let dim = 32;
    let captions: Vec<String> = (0..500).map(|i| format!("caption number {i}")).collect();
    let data: Vec<f32> = (0..captions.len())
        .flat_map(|_| random_unit(dim, &mut rng).into_vec())
        .collect();

    let emb_path = dir.path().join("captions.vfeb");
    let txt_path = dir.path().join("captions.txt");
    vfeb::write_file(&emb_path, &EmbeddingMatrix::new(dim, data)?)?;
    std::fs::write(&txt_path, captions.join("\n") + "\n")?;
    println!(
        "wrote {} bytes of VFEB",
        std::fs::metadata(&emb_path)?.len()
    );

    let caption_store = store::load_caption_file(&emb_path, &txt_path)?;
    let index = CaptionIndex::exact(caption_store)?;
    let index_dir = dir.path().join("index");
    index.save(&index_dir)?;
    let reloaded = CaptionIndex::load(&index_dir)?;

    let query: Embedding = random_unit(dim, &mut rng);
    let before = index.retrieve_topk(&query, 5)?;
    let after = reloaded.retrieve_topk(&query, 5)?;
    assert_eq!(before.ids(), after.ids());
    for hit in &after.hits {
        println!("{:>4}  {:.4}  {}", hit.id, hit.score, hit.text);
    }
    Ok(())
}
