//! Supervised training of a small base summarizer, then a look at its greedy
//! decodes next to the references.
//!
//! ```bash
//! cargo run --release --example train_base_summarizer
//! ```

use polcal::corpus::{generate_corpus, CorpusConfig};
use polcal::summarizer::{train_supervised, SummarizerConfig, SummarizerModel, SupervisedConfig};
use polcal::textproc::build_vocab;

fn main() -> polcal::Result<()> {
    let bundle = generate_corpus(
        &CorpusConfig {
            train_clusters: 24,
            dev_clusters: 6,
            test_clusters: 6,
            documents_per_cluster: 4,
            ..CorpusConfig::default()
        },
        7,
    )?;
    let vocab = build_vocab(&bundle.all_cluster_texts(), 1)?;
    let mut model = SummarizerModel::new(
        vocab,
        SummarizerConfig {
            embed_dim: 24,
            hidden_dim: 48,
            attention_dim: 24,
            max_input_len: 128,
            max_summary_len: 32,
        },
        7,
    )?;
    let log = train_supervised(
        &mut model,
        &bundle.clusters.train,
        &bundle.clusters.dev,
        &SupervisedConfig {
            epochs: 12,
            batch_size: 8,
            learning_rate: 3e-3,
            ..SupervisedConfig::default()
        },
    )?;

    println!("epoch  train    dev      lr");
    for e in &log.epochs {
        println!(
            "{:5}  {:.4}  {:.4}  {:.2e}",
            e.epoch, e.train_loss, e.dev_loss, e.learning_rate
        );
    }
    println!("best epoch: {}\n", log.best_epoch);

    for cluster in bundle.clusters.test.iter().take(3) {
        let ids = model.cluster_input_ids(cluster);
        let decoded = model.greedy_decode(&ids)?;
        let summary = model.ids_to_summary(&decoded)?;
        println!("reference: {}", cluster.reference.text());
        println!("decoded  : {}\n", summary.text());
    }
    Ok(())
}
