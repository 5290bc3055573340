//! Polarity-calibrated opinion summarization at desk scale.
//!
//! Opinion summarizers trained with plain cross-entropy tend to amplify the
//! polarity bias of their inputs: the majority opinion dominates the summary
//! and the minority opinion disappears. This crate builds the whole pipeline
//! that demonstrates and then mitigates that effect on a controllable
//! synthetic corpus:
//!
//! 1. [`corpus`] generates seeded opinion clusters whose reference summaries
//!    preserve the input polarity mixture, plus training sets for the reward
//!    models.
//! 2. [`summarizer`] trains a GRU encoder-decoder with additive attention by
//!    teacher forcing.
//! 3. [`rewards`] fits three small reward models: polarity, content
//!    similarity and language fluency, combined into a weighted composite.
//! 4. [`calibrate`] refines the base summarizer with REINFORCE policy
//!    gradients against the composite reward, with selectable baselines.
//! 5. [`evalreport`] measures polarity RMSE/MAE and Rouge-1/2/L/Lsum, draws
//!    the input/output polarity scatter, and runs the reward ablation.
//!
//! Everything numeric sits on [`diffcore`], a minimal f64 tensor library with
//! reverse-mode differentiation, AdamW, and a finite-difference gradient
//! checker.
//!
//! ## Examples
//!
//! Each major capability has a runnable example:
//!
//! ```bash
//! cargo run --release --example generate_corpus       # synthetic data + JSONL
//! cargo run --release --example train_reward_models   # three reward models
//! cargo run --release --example gradient_check        # finite-difference checks
//! cargo run --release --example reinforce_toy         # estimator vs exact gradient
//! cargo run --release --example train_base_summarizer # supervised stage
//! cargo run --release --example calibrate_summarizer  # reinforcement stage
//! cargo run --release --example evaluate_and_scatter  # metrics + scatter SVG
//! cargo run --release --example ablation_table        # reward ablation rows
//! cargo run --release --example score_summary         # composite reward breakdown
//! cargo run --release --example full_pipeline         # everything, end to end
//! ```
//!
//! ## Command line
//!
//! The same pipeline ships as a single `polcal` binary with one subcommand
//! per stage (`gen-data`, `train-rewards`, `train-base`, `calibrate`,
//! `evaluate`, `ablate`, `scatter`, `score`); see [`pipeline`]. All artifacts
//! land in one output directory and are byte-identical given the same config
//! and seed.

pub mod calibrate;
pub mod corpus;
pub mod diffcore;
pub mod error;
pub mod evalreport;
pub mod pipeline;
pub mod rewards;
pub mod summarizer;
pub mod textproc;

pub use error::{Error, Result};
