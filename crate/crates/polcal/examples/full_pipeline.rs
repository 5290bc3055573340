//! The whole experiment end to end through the pipeline layer, writing every
//! artifact into a temp directory. Uses desk-scale-but-small settings so it
//! finishes in a couple of minutes; the defaults in `RunConfig` are the full
//! experiment.
//!
//! ```bash
//! cargo run --release --example full_pipeline
//! ```

use polcal::calibrate::RLConfig;
use polcal::corpus::CorpusConfig;
use polcal::pipeline::{self, files, RunConfig};
use polcal::summarizer::{SummarizerConfig, SupervisedConfig};

fn main() -> polcal::Result<()> {
    let out = std::env::temp_dir().join("polcal_example_pipeline");
    let _ = std::fs::remove_dir_all(&out);

    let config = RunConfig {
        seed: 7,
        corpus: CorpusConfig {
            train_clusters: 24,
            dev_clusters: 8,
            test_clusters: 12,
            documents_per_cluster: 4,
            ..CorpusConfig::default()
        },
        summarizer: SummarizerConfig {
            embed_dim: 24,
            hidden_dim: 48,
            attention_dim: 24,
            max_input_len: 128,
            max_summary_len: 32,
        },
        supervised: SupervisedConfig {
            epochs: 10,
            batch_size: 8,
            learning_rate: 3e-3,
            ..SupervisedConfig::default()
        },
        rl: RLConfig {
            learning_rate: 5e-4,
            batch_size: 4,
            max_steps: 30,
            probe_interval: 5,
            ..RLConfig::default()
        },
        ..RunConfig::default()
    };

    pipeline::gen_data(&config, &out)?;
    pipeline::train_rewards(&config, &out)?;
    pipeline::train_base(&config, &out)?;
    pipeline::calibrate_cmd(&config, &out)?;
    let reports = pipeline::evaluate_cmd(
        &config,
        &out,
        &[
            out.join(files::BASE_PARAMS),
            out.join(files::CALIBRATED_PARAMS),
        ],
    )?;
    pipeline::scatter_cmd(&config, &out, &out.join(files::CALIBRATED_PARAMS))?;

    println!("\nmodel        rmse     mae      rouge1");
    for r in &reports {
        println!("{:12} {:.4}  {:.4}  {:.4}", r.model, r.rmse, r.mae, r.rouge1);
    }
    println!("\nartifacts under {}", out.display());
    for entry in std::fs::read_dir(&out)? {
        println!("  {}", entry?.file_name().to_string_lossy());
    }
    Ok(())
}
