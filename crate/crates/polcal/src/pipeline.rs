//! End-to-end experiment pipeline behind the CLI subcommands.
//!
//! Every subcommand reads and writes fixed file names under one output
//! directory, holds a lock file while running, and finishes by writing a
//! manifest recording the effective config hash, the seed and the produced
//! files. Outputs are byte-identical across reruns with the same config and
//! seed.

use crate::calibrate::{self, write_rl_log_csv, RLConfig};
use crate::corpus::{self, CorpusBundle, CorpusConfig, Mode, OpinionCluster};
use crate::error::{Error, Result};
use crate::evalreport::{
    ablation_run, evaluate_model, standard_ablation_configurations, write_report_csv, EvalReport,
};
use crate::rewards::{
    composite_reward, train_fluency_model, train_polarity_model, train_similarity_model,
    FluencyModel, PolarityModel, RewardModels, RewardTrainConfig, RewardWeights, SimilarityModel,
};
use crate::summarizer::{train_supervised, SummarizerConfig, SummarizerModel, SupervisedConfig};
use crate::textproc::build_vocab;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::{Path, PathBuf};

/// Effective configuration for one experiment run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub corpus: CorpusConfig,
    pub summarizer: SummarizerConfig,
    pub supervised: SupervisedConfig,
    pub reward_training: RewardTrainConfig,
    pub rl: RLConfig,
    pub weights: RewardWeights,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 17,
            corpus: CorpusConfig {
                train_clusters: 96,
                dev_clusters: 24,
                test_clusters: 48,
                ..CorpusConfig::default()
            },
            summarizer: SummarizerConfig {
                embed_dim: 32,
                hidden_dim: 64,
                attention_dim: 32,
                max_input_len: 220,
                max_summary_len: 32,
            },
            supervised: SupervisedConfig {
                epochs: 20,
                batch_size: 8,
                learning_rate: 3e-3,
                ..SupervisedConfig::default()
            },
            reward_training: RewardTrainConfig::default(),
            rl: RLConfig {
                learning_rate: 2e-4,
                batch_size: 8,
                max_steps: 120,
                probe_interval: 10,
                ..RLConfig::default()
            },
            weights: RewardWeights::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read config {}: {e}", path.display())))?;
        let config: RunConfig = serde_json::from_str(&text)
            .map_err(|e| Error::config(format!("bad config {}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.corpus.validate()?;
        self.rl.validate()?;
        self.weights.validate()?;
        Ok(())
    }

    /// Stable hash of the effective configuration (FNV-1a over the canonical
    /// JSON form). Changes iff any effective value changes.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let mut h: u64 = 0xcbf29ce484222325;
        for byte in json.as_bytes() {
            h ^= *byte as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        format!("{h:016x}")
    }
}

/// Fixed artifact names inside the output directory.
pub mod files {
    pub const CORPUS_TRAIN: &str = "corpus_train.jsonl";
    pub const CORPUS_DEV: &str = "corpus_dev.jsonl";
    pub const CORPUS_TEST: &str = "corpus_test.jsonl";
    pub const POLARITY_SET: &str = "polarity.jsonl";
    pub const SIMILARITY_SET: &str = "similarity.jsonl";
    pub const ACCEPTABILITY_SET: &str = "acceptability.jsonl";
    pub const REWARD_METRICS: &str = "reward_metrics.json";
    pub const BASE_PARAMS: &str = "base.params.json";
    pub const BASE_CONFIG: &str = "base.config.json";
    pub const BASE_LOG: &str = "base_train_log.csv";
    pub const CALIBRATED_PARAMS: &str = "calibrated.params.json";
    pub const CALIBRATED_CONFIG: &str = "calibrated.config.json";
    pub const RL_LOG: &str = "rl_log.csv";
    pub const REPORT: &str = "report.csv";
    pub const ABLATION: &str = "ablation.csv";
    pub const SCATTER_SVG: &str = "scatter.svg";
    pub const SCATTER_POINTS: &str = "scatter_points.csv";
    pub const LOCK: &str = ".polcal.lock";

    pub fn model_params(stem: &str) -> String {
        format!("{stem}.params.json")
    }

    pub fn model_config(stem: &str) -> String {
        format!("{stem}.config.json")
    }
}

/// Exclusive per-output-directory lock, released on drop.
pub struct DirLock {
    path: PathBuf,
}

impl DirLock {
    pub fn acquire(out_dir: &Path) -> Result<DirLock> {
        std::fs::create_dir_all(out_dir)?;
        let path = out_dir.join(files::LOCK);
        match std::fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(DirLock { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(Error::config(format!(
                "output dir is locked by another run ({}); remove {} if stale",
                out_dir.display(),
                path.display()
            ))),
            Err(e) => Err(e.into()),
        }
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.path);
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub subcommand: String,
    pub config_hash: String,
    pub seed: u64,
    pub files: Vec<String>,
}

fn write_manifest(out_dir: &Path, subcommand: &str, config: &RunConfig, mut produced: Vec<String>) -> Result<()> {
    produced.sort();
    let manifest = Manifest {
        subcommand: subcommand.to_string(),
        config_hash: config.hash(),
        seed: config.seed,
        files: produced,
    };
    let path = out_dir.join(format!("manifest-{subcommand}.json"));
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}

/// Log-verbosity switch: POLCAL_LOG=quiet silences progress lines.
pub fn log_line(message: &str) {
    let quiet = std::env::var("POLCAL_LOG")
        .map(|v| v.eq_ignore_ascii_case("quiet"))
        .unwrap_or(false);
    if !quiet {
        eprintln!("[polcal] {message}");
    }
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

/// `gen-data`: write the corpus bundle as JSON-Lines files.
pub fn gen_data(config: &RunConfig, out_dir: &Path) -> Result<()> {
    let _lock = DirLock::acquire(out_dir)?;
    config.validate()?;
    let bundle = corpus::generate_corpus(&config.corpus, config.seed)?;
    corpus::save_jsonl(&bundle.clusters.train, &out_dir.join(files::CORPUS_TRAIN))?;
    corpus::save_jsonl(&bundle.clusters.dev, &out_dir.join(files::CORPUS_DEV))?;
    corpus::save_jsonl(&bundle.clusters.test, &out_dir.join(files::CORPUS_TEST))?;
    corpus::save_labeled_jsonl(&bundle.polarity_sentences, &out_dir.join(files::POLARITY_SET))?;
    corpus::save_pairs_jsonl(&bundle.similarity_pairs, &out_dir.join(files::SIMILARITY_SET))?;
    corpus::save_labeled_jsonl(
        &bundle.acceptability_pairs,
        &out_dir.join(files::ACCEPTABILITY_SET),
    )?;
    log_line(&format!(
        "gen-data: {} train / {} dev / {} test clusters",
        bundle.clusters.train.len(),
        bundle.clusters.dev.len(),
        bundle.clusters.test.len()
    ));
    write_manifest(
        out_dir,
        "gen-data",
        config,
        vec![
            files::CORPUS_TRAIN.into(),
            files::CORPUS_DEV.into(),
            files::CORPUS_TEST.into(),
            files::POLARITY_SET.into(),
            files::SIMILARITY_SET.into(),
            files::ACCEPTABILITY_SET.into(),
        ],
    )
}

/// Reload the generated bundle from disk.
pub fn load_bundle(out_dir: &Path) -> Result<CorpusBundle> {
    Ok(CorpusBundle {
        clusters: corpus::ClusterSplits {
            train: corpus::load_jsonl(&out_dir.join(files::CORPUS_TRAIN))?,
            dev: corpus::load_jsonl(&out_dir.join(files::CORPUS_DEV))?,
            test: corpus::load_jsonl(&out_dir.join(files::CORPUS_TEST))?,
        },
        polarity_sentences: corpus::load_labeled_jsonl(&out_dir.join(files::POLARITY_SET))?,
        similarity_pairs: corpus::load_pairs_jsonl(&out_dir.join(files::SIMILARITY_SET))?,
        acceptability_pairs: corpus::load_labeled_jsonl(&out_dir.join(files::ACCEPTABILITY_SET))?,
    })
}

/// `train-rewards`: fit the three reward models and report held-out quality.
pub fn train_rewards(config: &RunConfig, out_dir: &Path) -> Result<()> {
    let _lock = DirLock::acquire(out_dir)?;
    let bundle = load_bundle(out_dir)?;
    let cfg = &config.reward_training;

    let (polarity, polarity_report) =
        train_polarity_model(&bundle.polarity_sentences, cfg, config.seed)?;
    let (similarity, similarity_report) =
        train_similarity_model(&bundle.similarity_pairs, cfg, config.seed)?;
    let (fluency, fluency_report) =
        train_fluency_model(&bundle.acceptability_pairs, cfg, config.seed)?;

    polarity.save(
        &out_dir.join(files::model_params("polarity_model")),
        &out_dir.join(files::model_config("polarity_model")),
    )?;
    similarity.save(
        &out_dir.join(files::model_params("similarity_model")),
        &out_dir.join(files::model_config("similarity_model")),
    )?;
    fluency.save(
        &out_dir.join(files::model_params("fluency_model")),
        &out_dir.join(files::model_config("fluency_model")),
    )?;

    let metrics = serde_json::json!({
        "polarity": {"accuracy": polarity_report.accuracy, "f1": polarity_report.f1, "holdout": polarity_report.holdout_size},
        "similarity": {"pearson_r": similarity_report.pearson_r, "holdout": similarity_report.holdout_size},
        "fluency": {"accuracy": fluency_report.accuracy, "f1": fluency_report.f1, "holdout": fluency_report.holdout_size},
    });
    std::fs::write(
        out_dir.join(files::REWARD_METRICS),
        serde_json::to_string_pretty(&metrics)?,
    )?;
    log_line(&format!(
        "train-rewards: polarity f1 {:.3}, similarity r {:.3}, fluency acc {:.3}",
        polarity_report.f1, similarity_report.pearson_r, fluency_report.accuracy
    ));
    write_manifest(
        out_dir,
        "train-rewards",
        config,
        vec![
            files::model_params("polarity_model"),
            files::model_config("polarity_model"),
            files::model_params("similarity_model"),
            files::model_config("similarity_model"),
            files::model_params("fluency_model"),
            files::model_config("fluency_model"),
            files::REWARD_METRICS.into(),
        ],
    )
}

pub fn load_reward_models(out_dir: &Path) -> Result<RewardModels> {
    Ok(RewardModels {
        polarity: PolarityModel::load(
            &out_dir.join(files::model_params("polarity_model")),
            &out_dir.join(files::model_config("polarity_model")),
        )?,
        similarity: SimilarityModel::load(
            &out_dir.join(files::model_params("similarity_model")),
            &out_dir.join(files::model_config("similarity_model")),
        )?,
        fluency: FluencyModel::load(
            &out_dir.join(files::model_params("fluency_model")),
            &out_dir.join(files::model_config("fluency_model")),
        )?,
    })
}

/// `train-base`: supervised training of the base summarizer.
pub fn train_base(config: &RunConfig, out_dir: &Path) -> Result<()> {
    let _lock = DirLock::acquire(out_dir)?;
    let bundle = load_bundle(out_dir)?;
    let vocab = build_vocab(&bundle.all_cluster_texts(), 1)?;
    let mut model = SummarizerModel::new(vocab, config.summarizer, config.seed)?;
    let sup = SupervisedConfig {
        seed: config.seed,
        ..config.supervised
    };
    let log = train_supervised(&mut model, &bundle.clusters.train, &bundle.clusters.dev, &sup)?;

    model.save(
        &out_dir.join(files::BASE_PARAMS),
        &out_dir.join(files::BASE_CONFIG),
    )?;
    let mut csv = String::from("epoch,train_loss,dev_loss,learning_rate\n");
    for e in &log.epochs {
        csv.push_str(&format!(
            "{},{:.6},{:.6},{:.6e}\n",
            e.epoch, e.train_loss, e.dev_loss, e.learning_rate
        ));
    }
    std::fs::write(out_dir.join(files::BASE_LOG), csv)?;
    let last = log.epochs.last().expect("at least one epoch");
    log_line(&format!(
        "train-base: {} epochs, final train {:.4} dev {:.4}, best epoch {}",
        log.epochs.len(),
        last.train_loss,
        last.dev_loss,
        log.best_epoch
    ));
    write_manifest(
        out_dir,
        "train-base",
        config,
        vec![files::BASE_PARAMS.into(), files::BASE_CONFIG.into(), files::BASE_LOG.into()],
    )
}

pub fn load_summarizer(params: &Path, sidecar: &Path) -> Result<SummarizerModel> {
    SummarizerModel::load(params, sidecar)
}

/// `calibrate`: reinforcement training from the base checkpoint.
pub fn calibrate_cmd(config: &RunConfig, out_dir: &Path) -> Result<()> {
    let _lock = DirLock::acquire(out_dir)?;
    let bundle = load_bundle(out_dir)?;
    let base = SummarizerModel::load(
        &out_dir.join(files::BASE_PARAMS),
        &out_dir.join(files::BASE_CONFIG),
    )?;
    let reward_models = load_reward_models(out_dir)?;
    let rl = RLConfig {
        seed: config.seed,
        ..config.rl
    };
    let (model, logs) = calibrate::calibrate(
        &base,
        &bundle.clusters.train,
        &bundle.clusters.dev,
        &reward_models,
        config.weights,
        &rl,
    )?;
    model.save(
        &out_dir.join(files::CALIBRATED_PARAMS),
        &out_dir.join(files::CALIBRATED_CONFIG),
    )?;
    let log_path = out_dir.join(files::RL_LOG);
    let _ = std::fs::remove_file(&log_path);
    write_rl_log_csv(&logs, &log_path)?;
    let best = logs
        .iter()
        .filter_map(|l| l.probe_rmse)
        .fold(f64::INFINITY, f64::min);
    log_line(&format!(
        "calibrate: {} steps, best probe rmse {:.4}",
        logs.len(),
        best
    ));
    write_manifest(
        out_dir,
        "calibrate",
        config,
        vec![
            files::CALIBRATED_PARAMS.into(),
            files::CALIBRATED_CONFIG.into(),
            files::RL_LOG.into(),
        ],
    )
}

/// `evaluate`: score checkpoints on the test split, one report row each.
pub fn evaluate_cmd(config: &RunConfig, out_dir: &Path, checkpoints: &[PathBuf]) -> Result<Vec<EvalReport>> {
    let _lock = DirLock::acquire(out_dir)?;
    if checkpoints.is_empty() {
        return Err(Error::config(
            "evaluate needs at least one --checkpoint <params file>",
        ));
    }
    let bundle = load_bundle(out_dir)?;
    let reward_models = load_reward_models(out_dir)?;
    let mut reports = Vec::with_capacity(checkpoints.len());
    for params_path in checkpoints {
        let (name, model) = open_checkpoint(params_path)?;
        let (report, _) = evaluate_model(&name, &model, &reward_models, &bundle.clusters.test)?;
        log_line(&format!(
            "evaluate {}: rmse {:.4} mae {:.4} rouge1 {:.4}",
            name, report.rmse, report.mae, report.rouge1
        ));
        reports.push(report);
    }
    write_report_csv(&reports, &out_dir.join(files::REPORT))?;
    write_manifest(out_dir, "evaluate", config, vec![files::REPORT.into()])?;
    Ok(reports)
}

/// Resolve a `<stem>.params.json` checkpoint and its sidecar.
fn open_checkpoint(params_path: &Path) -> Result<(String, SummarizerModel)> {
    let file_name = params_path
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| Error::config(format!("bad checkpoint path {}", params_path.display())))?;
    let stem = file_name.strip_suffix(".params.json").ok_or_else(|| {
        Error::config(format!(
            "checkpoint {} must be named <stem>.params.json",
            params_path.display()
        ))
    })?;
    let sidecar = params_path.with_file_name(format!("{stem}.config.json"));
    let model = SummarizerModel::load(params_path, &sidecar)?;
    Ok((stem.to_string(), model))
}

/// `scatter`: bias scatter of one checkpoint over the test split.
pub fn scatter_cmd(config: &RunConfig, out_dir: &Path, checkpoint: &Path) -> Result<()> {
    let _lock = DirLock::acquire(out_dir)?;
    let bundle = load_bundle(out_dir)?;
    let reward_models = load_reward_models(out_dir)?;
    let (name, model) = open_checkpoint(checkpoint)?;
    let (_, scatter) = evaluate_model(&name, &model, &reward_models, &bundle.clusters.test)?;
    scatter.write_svg(&out_dir.join(files::SCATTER_SVG))?;
    scatter.write_csv(&out_dir.join(files::SCATTER_POINTS))?;
    log_line(&format!("scatter: {} points for {}", scatter.points.len(), name));
    write_manifest(
        out_dir,
        "scatter",
        config,
        vec![files::SCATTER_SVG.into(), files::SCATTER_POINTS.into()],
    )
}

/// `ablate`: one calibration per reward configuration, shared seed.
pub fn ablate_cmd(config: &RunConfig, out_dir: &Path) -> Result<()> {
    let _lock = DirLock::acquire(out_dir)?;
    let bundle = load_bundle(out_dir)?;
    let base = SummarizerModel::load(
        &out_dir.join(files::BASE_PARAMS),
        &out_dir.join(files::BASE_CONFIG),
    )?;
    let reward_models = load_reward_models(out_dir)?;
    let rl = RLConfig {
        seed: config.seed,
        ..config.rl
    };
    let table = ablation_run(
        &base,
        &bundle.clusters.train,
        &bundle.clusters.dev,
        &bundle.clusters.test,
        &reward_models,
        &standard_ablation_configurations(),
        &rl,
    )?;
    write_report_csv(&table.rows, &out_dir.join(files::ABLATION))?;
    for row in &table.rows {
        log_line(&format!(
            "ablate {}: rmse {:.4} rouge1 {:.4}",
            row.model, row.rmse, row.rouge1
        ));
    }
    write_manifest(out_dir, "ablate", config, vec![files::ABLATION.into()])
}

/// `score`: print the composite reward breakdown for one (cluster, summary).
pub fn score_cmd(
    config: &RunConfig,
    out_dir: &Path,
    cluster_id: &str,
    summary_text: &str,
) -> Result<String> {
    let _lock = DirLock::acquire(out_dir)?;
    let bundle = load_bundle(out_dir)?;
    let reward_models = load_reward_models(out_dir)?;
    let cluster = find_cluster(&bundle, cluster_id)?;
    let summary = crate::corpus::Summary::from_text(summary_text);
    if summary.sentences.is_empty() {
        return Err(Error::data("score: summary text has no sentences"));
    }
    let breakdown = composite_reward(config.weights, cluster, &summary, &reward_models)?;
    Ok(serde_json::to_string_pretty(&breakdown)?)
}

fn find_cluster<'a>(bundle: &'a CorpusBundle, id: &str) -> Result<&'a OpinionCluster> {
    bundle
        .clusters
        .train
        .iter()
        .chain(&bundle.clusters.dev)
        .chain(&bundle.clusters.test)
        .find(|c| c.id == id)
        .ok_or_else(|| Error::data(format!("cluster `{id}` not found in corpus files")))
}

/// Apply command-line overrides on top of a loaded config. Flags win.
pub fn apply_overrides(
    config: &mut RunConfig,
    seed: Option<u64>,
    weights: Option<(f64, f64, f64)>,
    mode: Option<Mode>,
) -> Result<()> {
    if let Some(seed) = seed {
        config.seed = seed;
    }
    if let Some((alpha, beta, gamma)) = weights {
        config.weights = RewardWeights::new(alpha, beta, gamma)?;
    }
    if let Some(mode) = mode {
        config.corpus.mode = mode;
        if mode == Mode::Articles {
            config.corpus.documents_per_cluster = 3;
        }
    }
    config.validate()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_hash_changes_iff_values_change() {
        let a = RunConfig::default();
        let b = RunConfig::default();
        assert_eq!(a.hash(), b.hash());
        let c = RunConfig {
            seed: a.seed + 1,
            ..RunConfig::default()
        };
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn unknown_config_keys_rejected() {
        let dir = std::env::temp_dir().join("polcal_pipeline_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad_config.json");
        std::fs::write(&path, r#"{"seed": 3, "not_a_real_key": true}"#).unwrap();
        assert!(matches!(RunConfig::load(&path), Err(Error::Config(_))));
    }

    #[test]
    fn lock_excludes_second_acquirer() {
        let dir = std::env::temp_dir().join("polcal_pipeline_lock_test");
        let _ = std::fs::remove_dir_all(&dir);
        let lock = DirLock::acquire(&dir).unwrap();
        assert!(matches!(DirLock::acquire(&dir), Err(Error::Config(_))));
        drop(lock);
        let again = DirLock::acquire(&dir).unwrap();
        drop(again);
    }

    #[test]
    fn overrides_apply_and_validate() {
        let mut config = RunConfig::default();
        apply_overrides(&mut config, Some(99), Some((1.0, 0.0, 0.0)), Some(Mode::Articles)).unwrap();
        assert_eq!(config.seed, 99);
        assert_eq!(config.weights.beta, 0.0);
        assert_eq!(config.corpus.documents_per_cluster, 3);
        assert!(apply_overrides(&mut config, None, Some((0.0, 0.0, 0.0)), None).is_err());
    }
}
