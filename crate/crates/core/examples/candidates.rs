//! Turning retrieved captions into candidate class names.
use vocab_free::candidates::{extract_candidates, FilterConfig, Pos, Stages};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let captions = [
        "A Cassowary walking in the zoo",
        "stock photo of a cassowary, image 42",
        "<PERSON> feeding the cassowaries",
        "red_panda climbing a tree-house",
        "a red panda in a tree",
    ];
    let full = extract_candidates(captions, &FilterConfig::default())?;
    println!("full pipeline: {:?}", full.iter().collect::<Vec<_>>());

    let unfiltered = extract_candidates(captions, &FilterConfig::unfiltered())?;
    println!("no pipeline:   {:?}", unfiltered.names());

    let cfg = FilterConfig {
        keep_pos_tags: [Pos::Noun, Pos::Adjective].into(),
        min_occurrences: 1,
        ..FilterConfig::default()
    };
    println!(
        "nouns+adjectives, min 1: {:?}",
        extract_candidates(captions, &cfg)?.names()
    );

    let cfg = FilterConfig {
        stages: Stages {
            filter: false,
            ..Stages::ALL
        },
        ..FilterConfig::default()
    };
    println!(
        "remove+standardize only: {:?}",
        extract_candidates(captions, &cfg)?.names()
    );
    Ok(())
}
