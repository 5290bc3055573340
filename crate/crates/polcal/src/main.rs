//! Thin command-line front end over [`polcal::pipeline`].

use clap::{Parser, Subcommand};
use polcal::corpus::Mode;
use polcal::pipeline::{self, RunConfig};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "polcal",
    about = "Polarity-calibrated opinion summarization experiments",
    version
)]
struct Cli {
    /// JSON run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory for all artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Reward weights override: alpha,beta,gamma.
    #[arg(long, global = true, value_name = "A,B,C")]
    weights: Option<String>,

    /// Corpus mode override.
    #[arg(long, global = true, value_name = "reviews|articles")]
    mode: Option<String>,

    /// Summarizer checkpoint(s) (<stem>.params.json), for evaluate/scatter.
    #[arg(long = "checkpoint", global = true)]
    checkpoints: Vec<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic corpus and reward-model training sets.
    GenData,
    /// Train the polarity, similarity and fluency reward models.
    TrainRewards,
    /// Train the base summarizer with supervised learning.
    TrainBase,
    /// Reinforcement-train the calibrated summarizer from the base checkpoint.
    Calibrate,
    /// Evaluate checkpoints on the test split into report.csv.
    Evaluate,
    /// Emit the input/output polarity scatter for one checkpoint.
    Scatter,
    /// Run the reward-configuration ablation table.
    Ablate,
    /// Print the reward breakdown for a (cluster, summary) pair as JSON.
    Score {
        /// Cluster id from the corpus files, e.g. test-0003.
        #[arg(long)]
        cluster_id: String,
        /// Summary text to score.
        #[arg(long)]
        summary: String,
    },
}

fn parse_weights(raw: &str) -> Result<(f64, f64, f64), polcal::Error> {
    let parts: Vec<&str> = raw.split(',').collect();
    if parts.len() != 3 {
        return Err(polcal::Error::config(format!(
            "--weights expects a,b,c; got `{raw}`"
        )));
    }
    let parse = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|e| polcal::Error::config(format!("bad weight `{s}`: {e}")))
    };
    Ok((parse(parts[0])?, parse(parts[1])?, parse(parts[2])?))
}

fn parse_mode(raw: &str) -> Result<Mode, polcal::Error> {
    match raw {
        "reviews" => Ok(Mode::Reviews),
        "articles" => Ok(Mode::Articles),
        other => Err(polcal::Error::config(format!(
            "--mode must be reviews or articles, got `{other}`"
        ))),
    }
}

fn run(cli: Cli) -> Result<(), polcal::Error> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let weights = cli.weights.as_deref().map(parse_weights).transpose()?;
    let mode = cli.mode.as_deref().map(parse_mode).transpose()?;
    pipeline::apply_overrides(&mut config, cli.seed, weights, mode)?;

    let out = &cli.out;
    match cli.command {
        Command::GenData => pipeline::gen_data(&config, out),
        Command::TrainRewards => pipeline::train_rewards(&config, out),
        Command::TrainBase => pipeline::train_base(&config, out),
        Command::Calibrate => pipeline::calibrate_cmd(&config, out),
        Command::Evaluate => pipeline::evaluate_cmd(&config, out, &cli.checkpoints).map(|_| ()),
        Command::Scatter => {
            let checkpoint = cli
                .checkpoints
                .first()
                .cloned()
                .unwrap_or_else(|| out.join(pipeline::files::CALIBRATED_PARAMS));
            pipeline::scatter_cmd(&config, out, &checkpoint)
        }
        Command::Ablate => pipeline::ablate_cmd(&config, out),
        Command::Score {
            cluster_id,
            summary,
        } => {
            let json = pipeline::score_cmd(&config, out, &cluster_id, &summary)?;
            println!("{json}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error kind={} reason={:?}", e.kind(), e.to_string());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
