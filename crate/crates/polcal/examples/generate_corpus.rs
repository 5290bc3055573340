//! Generate a small synthetic opinion corpus and write it as JSON-Lines.
//!
//! ```bash
//! cargo run --example generate_corpus
//! ```

use polcal::corpus::{generate_corpus, save_jsonl, CorpusConfig, MixtureSpec};

fn main() -> polcal::Result<()> {
    let config = CorpusConfig {
        train_clusters: 8,
        dev_clusters: 2,
        test_clusters: 4,
        mixture: MixtureSpec::Uniform { lo: 0.55, hi: 0.95 },
        ..CorpusConfig::default()
    };
    let bundle = generate_corpus(&config, 7)?;

    let first = &bundle.clusters.train[0];
    println!("cluster {} (mixture {:.3}):", first.id, first.mixture.unwrap());
    for doc in first.inputs.iter().take(3) {
        println!("  [{:?}] {}", doc.source_label.unwrap(), doc.text());
    }
    println!("  reference: {}", first.reference.text());

    let mean_mixture: f64 = bundle
        .clusters
        .train
        .iter()
        .map(|c| c.mixture.unwrap())
        .sum::<f64>()
        / bundle.clusters.train.len() as f64;
    println!("\nmean realized mixture over train: {mean_mixture:.3}");
    println!(
        "reward sets: {} polarity, {} similarity, {} acceptability",
        bundle.polarity_sentences.len(),
        bundle.similarity_pairs.len(),
        bundle.acceptability_pairs.len()
    );

    let dir = std::env::temp_dir().join("polcal_example_corpus");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("train.jsonl");
    save_jsonl(&bundle.clusters.train, &path)?;
    println!("\nwrote {}", path.display());
    Ok(())
}
