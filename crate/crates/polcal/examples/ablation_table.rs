//! Small-scale reward ablation: calibrate once per weight configuration and
//! tabulate polarity distance and Rouge per row.
//!
//! ```bash
//! cargo run --release --example ablation_table
//! ```

use polcal::calibrate::RLConfig;
use polcal::corpus::{generate_corpus, CorpusConfig};
use polcal::evalreport::{ablation_run, standard_ablation_configurations};
use polcal::rewards::{
    train_fluency_model, train_polarity_model, train_similarity_model, RewardModels,
    RewardTrainConfig,
};
use polcal::summarizer::{train_supervised, SummarizerConfig, SummarizerModel, SupervisedConfig};
use polcal::textproc::build_vocab;

fn main() -> polcal::Result<()> {
    let bundle = generate_corpus(
        &CorpusConfig {
            train_clusters: 24,
            dev_clusters: 8,
            test_clusters: 12,
            documents_per_cluster: 4,
            ..CorpusConfig::default()
        },
        7,
    )?;
    let cfg = RewardTrainConfig {
        epochs: 40,
        ..RewardTrainConfig::default()
    };
    let (polarity, _) = train_polarity_model(&bundle.polarity_sentences, &cfg, 7)?;
    let (similarity, _) = train_similarity_model(&bundle.similarity_pairs, &cfg, 7)?;
    let (fluency, _) = train_fluency_model(&bundle.acceptability_pairs, &cfg, 7)?;
    let models = RewardModels {
        polarity,
        similarity,
        fluency,
    };

    let vocab = build_vocab(&bundle.all_cluster_texts(), 1)?;
    let mut base = SummarizerModel::new(
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
    train_supervised(
        &mut base,
        &bundle.clusters.train,
        &bundle.clusters.dev,
        &SupervisedConfig {
            epochs: 10,
            batch_size: 8,
            learning_rate: 3e-3,
            ..SupervisedConfig::default()
        },
    )?;

    let rl = RLConfig {
        learning_rate: 5e-4,
        batch_size: 4,
        max_steps: 30,
        probe_interval: 5,
        seed: 7,
        ..RLConfig::default()
    };
    let table = ablation_run(
        &base,
        &bundle.clusters.train,
        &bundle.clusters.dev,
        &bundle.clusters.test,
        &models,
        &standard_ablation_configurations(),
        &rl,
    )?;

    println!("{:28} {:>8} {:>8} {:>8} {:>8}", "configuration", "rmse", "mae", "rouge1", "rougeL");
    for row in &table.rows {
        println!(
            "{:28} {:>8.4} {:>8.4} {:>8.4} {:>8.4}",
            row.model, row.rmse, row.mae, row.rouge1, row.rouge_l
        );
    }
    Ok(())
}
