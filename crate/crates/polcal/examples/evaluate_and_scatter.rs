//! Evaluate a model on a test split and emit the polarity bias scatter.
//!
//! ```bash
//! cargo run --release --example evaluate_and_scatter
//! ```

use polcal::corpus::{generate_corpus, CorpusConfig};
use polcal::evalreport::{evaluate_model, polarity_points, write_report_csv};
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
            dev_clusters: 6,
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
    train_supervised(
        &mut model,
        &bundle.clusters.train,
        &bundle.clusters.dev,
        &SupervisedConfig {
            epochs: 10,
            batch_size: 8,
            learning_rate: 3e-3,
            ..SupervisedConfig::default()
        },
    )?;

    let (report, scatter) = evaluate_model("demo", &model, &models, &bundle.clusters.test)?;
    println!(
        "demo model: rmse {:.4} mae {:.4} rouge1 {:.4} rouge2 {:.4} rougeL {:.4} rougeLsum {:.4}",
        report.rmse, report.mae, report.rouge1, report.rouge2, report.rouge_l, report.rouge_lsum
    );

    // Human references are polarity-preserving by construction: their points
    // hug the y = x line.
    let references: Vec<_> = bundle.clusters.test.iter().map(|c| c.reference.clone()).collect();
    let human = polarity_points(&models, &bundle.clusters.test, &references, "human")?;
    let human_bias: f64 = human
        .points
        .iter()
        .map(|p| (p.output_polarity - p.input_polarity).abs())
        .sum::<f64>()
        / human.points.len() as f64;
    println!("human reference mean |output - input| polarity gap: {human_bias:.4}");

    let dir = std::env::temp_dir().join("polcal_example_eval");
    std::fs::create_dir_all(&dir)?;
    write_report_csv(&[report], &dir.join("report.csv"))?;
    scatter.write_svg(&dir.join("scatter.svg"))?;
    scatter.write_csv(&dir.join("scatter_points.csv"))?;
    println!("wrote report.csv, scatter.svg, scatter_points.csv under {}", dir.display());
    Ok(())
}
