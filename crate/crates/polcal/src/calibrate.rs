//! Reinforcement training: policy-gradient updates that push the summarizer
//! toward higher composite reward.
//!
//! The estimator is sequence-level: one scalar advantage multiplies the
//! whole-sequence log-probability. Baselines are selectable; `batch_mean`
//! uses the leave-one-out mean so the estimator expectation is exactly
//! unchanged, and `greedy_self_critical` subtracts the reward of the greedy
//! decode for the same input.

use crate::corpus::OpinionCluster;
use crate::diffcore::{AdamW, NodeId, ParamStore, Tape, Tensor};
use crate::error::{Error, Result};
use crate::rewards::{
    composite_reward, polarity_of_input, polarity_of_summary, RewardModels, RewardWeights,
};
use crate::summarizer::SummarizerModel;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineMode {
    None,
    BatchMean,
    GreedySelfCritical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RLConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub weight_decay: f64,
    pub samples_per_input: usize,
    pub baseline: BaselineMode,
    pub temperature: f64,
    pub max_steps: usize,
    /// Mix-in coefficient for the supervised NLL term; 0 is pure RL.
    pub ce_mix: f64,
    pub probe_interval: usize,
    pub seed: u64,
}

impl Default for RLConfig {
    fn default() -> Self {
        RLConfig {
            learning_rate: 1e-6,
            batch_size: 32,
            weight_decay: 1e-2,
            samples_per_input: 4,
            baseline: BaselineMode::GreedySelfCritical,
            temperature: 1.0,
            max_steps: 200,
            ce_mix: 0.0,
            probe_interval: 10,
            seed: 0,
        }
    }
}

impl RLConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples_per_input == 0 {
            return Err(Error::config("samples_per_input must be >= 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size must be >= 1"));
        }
        if self.temperature <= 0.0 {
            return Err(Error::config("temperature must be > 0"));
        }
        if !(0.0..=1.0).contains(&self.ce_mix) {
            return Err(Error::config("ce_mix must lie in [0, 1]"));
        }
        if self.probe_interval == 0 {
            return Err(Error::config("probe_interval must be >= 1"));
        }
        Ok(())
    }
}

/// One reinforcement step's record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RLStepLog {
    pub step: usize,
    pub mean_reward: f64,
    pub mean_polarity_reward: f64,
    pub mean_content_reward: f64,
    pub mean_language_reward: f64,
    pub mean_baseline: f64,
    pub grad_norm: f64,
    pub samples: usize,
    pub skipped_samples: usize,
    /// Polarity RMSE on the probe set, present on probe steps.
    pub probe_rmse: Option<f64>,
}

/// Leave-one-out advantages for a slice of rewards.
///
/// `greedy_rewards[i]` is the self-critical baseline paired with sample `i`.
fn advantages(rewards: &[f64], mode: BaselineMode, greedy_rewards: &[f64]) -> Vec<f64> {
    match mode {
        BaselineMode::None => rewards.to_vec(),
        BaselineMode::BatchMean => {
            // Bitwise-equal rewards must yield exactly zero advantages; the
            // arithmetic below only gets there up to rounding.
            if rewards.windows(2).all(|w| w[0] == w[1]) {
                return vec![0.0; rewards.len()];
            }
            let total: f64 = rewards.iter().sum();
            let n = rewards.len();
            rewards
                .iter()
                .map(|&r| {
                    if n > 1 {
                        r - (total - r) / (n - 1) as f64
                    } else {
                        r
                    }
                })
                .collect()
        }
        BaselineMode::GreedySelfCritical => rewards
            .iter()
            .zip(greedy_rewards)
            .map(|(&r, &b)| r - b)
            .collect(),
    }
}

fn mean_or_zero(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

/// One REINFORCE update over a batch of clusters.
///
/// Draws `samples_per_input` sequences per cluster, scores each with the
/// composite reward, and applies one AdamW step on
/// `mean(-(R - b) * log pi(sample))` plus the optional supervised term.
/// Empty samples are skipped; a batch with no usable samples performs no
/// update.
pub fn reinforce_step(
    model: &mut SummarizerModel,
    batch: &[&OpinionCluster],
    models: &RewardModels,
    weights: RewardWeights,
    config: &RLConfig,
    step: usize,
    rng: &mut StdRng,
) -> Result<RLStepLog> {
    config.validate()?;
    weights.validate()?;

    struct Record {
        cluster_idx: usize,
        ids: Vec<u32>,
        reward: f64,
        r_polarity: f64,
        r_content: f64,
        r_language: f64,
    }

    let inputs: Vec<Vec<u32>> = batch.iter().map(|c| model.cluster_input_ids(c)).collect();
    let mut records: Vec<Record> = Vec::new();
    let mut skipped = 0usize;
    for (cluster_idx, cluster) in batch.iter().enumerate() {
        for _ in 0..config.samples_per_input {
            let sample = model.sample(&inputs[cluster_idx], config.temperature, rng)?;
            let content = sample.content_ids();
            if content.is_empty() {
                skipped += 1;
                continue;
            }
            let summary = model.ids_to_summary(content)?;
            if summary.sentences.is_empty() {
                skipped += 1;
                continue;
            }
            let breakdown = composite_reward(weights, cluster, &summary, models)?;
            records.push(Record {
                cluster_idx,
                ids: sample.ids,
                reward: breakdown.total,
                r_polarity: breakdown.r_polarity,
                r_content: breakdown.r_content,
                r_language: breakdown.r_language,
            });
        }
    }

    if records.is_empty() {
        return Ok(RLStepLog {
            step,
            mean_reward: 0.0,
            mean_polarity_reward: 0.0,
            mean_content_reward: 0.0,
            mean_language_reward: 0.0,
            mean_baseline: 0.0,
            grad_norm: 0.0,
            samples: 0,
            skipped_samples: skipped,
            probe_rmse: None,
        });
    }

    // Baselines. For the self-critical mode, decode each input greedily once.
    let greedy_rewards: Vec<f64> = if config.baseline == BaselineMode::GreedySelfCritical {
        let mut by_cluster = Vec::with_capacity(batch.len());
        for (cluster_idx, cluster) in batch.iter().enumerate() {
            let decoded = model.greedy_decode(&inputs[cluster_idx])?;
            let reward = if decoded.is_empty() {
                0.0
            } else {
                let summary = model.ids_to_summary(&decoded)?;
                if summary.sentences.is_empty() {
                    0.0
                } else {
                    composite_reward(weights, cluster, &summary, models)?.total
                }
            };
            by_cluster.push(reward);
        }
        records.iter().map(|r| by_cluster[r.cluster_idx]).collect()
    } else {
        vec![0.0; records.len()]
    };

    let rewards: Vec<f64> = records.iter().map(|r| r.reward).collect();
    let advs = advantages(&rewards, config.baseline, &greedy_rewards);
    let baselines: Vec<f64> = rewards.iter().zip(&advs).map(|(r, a)| r - a).collect();

    let n = records.len() as f64;
    for (record, &adv) in records.iter().zip(&advs) {
        if adv == 0.0 {
            continue;
        }
        let mut tape = Tape::new();
        let log_prob = model.sequence_log_prob(&mut tape, &inputs[record.cluster_idx], &record.ids)?;
        let loss = tape.scale(log_prob, -adv / n)?;
        let grads = tape.backward(loss)?;
        model.params.accumulate(&grads)?;
    }

    if config.ce_mix > 0.0 {
        let scale = config.ce_mix / batch.len() as f64;
        for (cluster_idx, cluster) in batch.iter().enumerate() {
            let y = crate::textproc::tokenize(&cluster.reference.text(), &model.vocab);
            let mut tape = Tape::new();
            let nll = model.nll_loss(&mut tape, &inputs[cluster_idx], &y)?;
            let loss = tape.scale(nll, scale)?;
            let grads = tape.backward(loss)?;
            model.params.accumulate(&grads)?;
        }
    }

    let grad_norm = model.params.grad_norm();
    if !grad_norm.is_finite() {
        return Err(Error::training(format!(
            "non-finite gradient norm at step {step}"
        )));
    }
    model.params.adamw_step(&AdamW {
        lr: config.learning_rate,
        weight_decay: config.weight_decay,
        ..AdamW::default()
    });

    Ok(RLStepLog {
        step,
        mean_reward: mean_or_zero(&rewards),
        mean_polarity_reward: mean_or_zero(&records.iter().map(|r| r.r_polarity).collect::<Vec<_>>()),
        mean_content_reward: mean_or_zero(&records.iter().map(|r| r.r_content).collect::<Vec<_>>()),
        mean_language_reward: mean_or_zero(&records.iter().map(|r| r.r_language).collect::<Vec<_>>()),
        mean_baseline: mean_or_zero(&baselines),
        grad_norm,
        samples: records.len(),
        skipped_samples: skipped,
        probe_rmse: None,
    })
}

/// Polarity RMSE of greedy decodes over a probe set. Returns infinity when
/// more than half of the decodes are empty.
pub fn probe_polarity_rmse(
    model: &SummarizerModel,
    reward_models: &RewardModels,
    probe: &[OpinionCluster],
) -> Result<f64> {
    if probe.is_empty() {
        return Err(Error::data("probe set is empty"));
    }
    let mut residuals = Vec::with_capacity(probe.len());
    let mut empties = 0usize;
    for cluster in probe {
        let ids = model.cluster_input_ids(cluster);
        let decoded = model.greedy_decode(&ids)?;
        let summary = model.ids_to_summary(&decoded)?;
        if summary.sentences.is_empty() {
            empties += 1;
            continue;
        }
        let input = polarity_of_input(&reward_models.polarity, cluster)?;
        let output = polarity_of_summary(&reward_models.polarity, &summary, cluster.mode)?;
        residuals.push(output - input);
    }
    if empties * 2 > probe.len() {
        return Ok(f64::INFINITY);
    }
    let mse = residuals.iter().map(|r| r * r).sum::<f64>() / residuals.len() as f64;
    Ok(mse.sqrt())
}

/// Run `max_steps` reinforcement updates over shuffled training clusters and
/// return the checkpoint with the lowest periodic probe polarity RMSE.
pub fn calibrate(
    base: &SummarizerModel,
    train: &[OpinionCluster],
    probe: &[OpinionCluster],
    models: &RewardModels,
    weights: RewardWeights,
    config: &RLConfig,
) -> Result<(SummarizerModel, Vec<RLStepLog>)> {
    config.validate()?;
    if train.is_empty() {
        return Err(Error::data("calibrate: empty train split"));
    }
    let mut model = base.clone();
    model.params.reset_optimizer();

    let mut rng = StdRng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut cursor = order.len();

    let mut logs = Vec::with_capacity(config.max_steps);
    let mut best: Option<(f64, ParamStore)> = None;
    for step in 0..config.max_steps {
        let mut batch: Vec<&OpinionCluster> = Vec::with_capacity(config.batch_size);
        while batch.len() < config.batch_size.min(train.len()) {
            if cursor >= order.len() {
                order.shuffle(&mut rng);
                cursor = 0;
            }
            batch.push(&train[order[cursor]]);
            cursor += 1;
        }
        let mut log = reinforce_step(&mut model, &batch, models, weights, config, step, &mut rng)?;
        let last = step + 1 == config.max_steps;
        if (step + 1) % config.probe_interval == 0 || last {
            let rmse = probe_polarity_rmse(&model, models, probe)?;
            log.probe_rmse = Some(rmse);
            if best.as_ref().map(|(b, _)| rmse < *b).unwrap_or(true) {
                best = Some((rmse, model.params.clone()));
            }
        }
        logs.push(log);
    }
    if let Some((_, params)) = best {
        model.params = params;
    }
    Ok((model, logs))
}

/// Append step logs to a CSV file, writing the header only when the file is
/// new or empty.
pub fn write_rl_log_csv(logs: &[RLStepLog], path: &std::path::Path) -> Result<()> {
    use std::io::Write;
    let exists = path.exists() && std::fs::metadata(path)?.len() > 0;
    let mut file = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
    if !exists {
        writeln!(
            file,
            "step,mean_reward,mean_polarity_reward,mean_content_reward,mean_language_reward,mean_baseline,grad_norm,samples,skipped_samples,probe_rmse"
        )?;
    }
    for log in logs {
        writeln!(
            file,
            "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{},{},{}",
            log.step,
            log.mean_reward,
            log.mean_polarity_reward,
            log.mean_content_reward,
            log.mean_language_reward,
            log.mean_baseline,
            log.grad_norm,
            log.samples,
            log.skipped_samples,
            log.probe_rmse.map(|r| format!("{r:.6}")).unwrap_or_default()
        )?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Toy policy and exact expected reward
// ---------------------------------------------------------------------------

/// Enumerable unconditional policy: independent softmax over the vocabulary
/// at each step, parameterized by a (steps, vocab) logit table.
#[derive(Debug, Clone)]
pub struct ToyPolicy {
    pub steps: usize,
    pub vocab: usize,
    pub params: ParamStore,
}

impl ToyPolicy {
    pub fn new(steps: usize, vocab: usize, seed: u64) -> Result<Self> {
        if steps == 0 || vocab < 2 {
            return Err(Error::config("toy policy needs steps >= 1 and vocab >= 2"));
        }
        let mut rng = StdRng::seed_from_u64(seed);
        let mut params = ParamStore::new();
        let data: Vec<f64> = (0..steps * vocab).map(|_| rng.gen_range(-0.5..0.5)).collect();
        params.insert("logits", Tensor::from_vec(steps, vocab, data))?;
        Ok(ToyPolicy {
            steps,
            vocab,
            params,
        })
    }

    pub fn with_logits(logits: Tensor) -> Result<Self> {
        let (steps, vocab) = logits.shape();
        let mut params = ParamStore::new();
        params.insert("logits", logits)?;
        Ok(ToyPolicy {
            steps,
            vocab,
            params,
        })
    }

    fn step_distributions(&self) -> Vec<Vec<f64>> {
        let logits = self.params.get("logits").expect("logits");
        (0..self.steps)
            .map(|t| {
                let row: Vec<f64> = (0..self.vocab).map(|v| logits.get(t, v)).collect();
                let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let exps: Vec<f64> = row.iter().map(|x| (x - max).exp()).collect();
                let z: f64 = exps.iter().sum();
                exps.iter().map(|e| e / z).collect()
            })
            .collect()
    }

    pub fn sample(&self, rng: &mut StdRng) -> Vec<usize> {
        self.step_distributions()
            .iter()
            .map(|dist| {
                let draw: f64 = rng.gen();
                let mut acc = 0.0;
                for (i, &p) in dist.iter().enumerate() {
                    acc += p;
                    if draw < acc {
                        return i;
                    }
                }
                dist.len() - 1
            })
            .collect()
    }

    pub fn greedy(&self) -> Vec<usize> {
        self.step_distributions()
            .iter()
            .map(|dist| {
                let mut best = 0;
                for (i, &p) in dist.iter().enumerate() {
                    if p > dist[best] {
                        best = i;
                    }
                }
                best
            })
            .collect()
    }

    /// Graph node for log pi(sequence).
    pub fn sequence_log_prob(&self, tape: &mut Tape, sequence: &[usize]) -> Result<NodeId> {
        if sequence.len() != self.steps {
            return Err(Error::data(format!(
                "sequence length {} does not match policy steps {}",
                sequence.len(),
                self.steps
            )));
        }
        let logits = tape.param("logits", self.params.get("logits").expect("logits").clone());
        let log_probs = tape.log_softmax(logits)?;
        let mut total: Option<NodeId> = None;
        for (t, &token) in sequence.iter().enumerate() {
            if token >= self.vocab {
                return Err(Error::data(format!("token {token} outside vocab {}", self.vocab)));
            }
            let lp = tape.pick(log_probs, t, token)?;
            total = Some(match total {
                Some(acc) => tape.add(acc, lp)?,
                None => lp,
            });
        }
        Ok(total.expect("non-empty sequence"))
    }

    pub fn enumerate_sequences(&self) -> Result<Vec<Vec<usize>>> {
        let count = (self.vocab as f64).powi(self.steps as i32);
        if count > 1e5 {
            return Err(Error::config(format!(
                "outcome space {count} too large to enumerate (limit 1e5)"
            )));
        }
        let mut out = Vec::with_capacity(count as usize);
        let mut seq = vec![0usize; self.steps];
        loop {
            out.push(seq.clone());
            let mut t = self.steps;
            loop {
                if t == 0 {
                    return Ok(out);
                }
                t -= 1;
                seq[t] += 1;
                if seq[t] < self.vocab {
                    break;
                }
                seq[t] = 0;
            }
        }
    }
}

/// Exact J(theta) = sum_y pi(y) R(y) and its gradient, by full enumeration
/// plus one backward pass over the enumeration graph.
pub fn expected_reward_exact(
    policy: &ToyPolicy,
    reward_fn: &dyn Fn(&[usize]) -> f64,
) -> Result<(f64, Tensor)> {
    let sequences = policy.enumerate_sequences()?;
    let mut tape = Tape::new();
    let logits = tape.param("logits", policy.params.get("logits").expect("logits").clone());
    let log_probs = tape.log_softmax(logits)?;
    let mut total: Option<NodeId> = None;
    for seq in &sequences {
        let mut lp: Option<NodeId> = None;
        for (t, &token) in seq.iter().enumerate() {
            let pick = tape.pick(log_probs, t, token)?;
            lp = Some(match lp {
                Some(acc) => tape.add(acc, pick)?,
                None => pick,
            });
        }
        let prob = tape.exp(lp.expect("non-empty"))?;
        let contrib = tape.scale(prob, reward_fn(seq))?;
        total = Some(match total {
            Some(acc) => tape.add(acc, contrib)?,
            None => contrib,
        });
    }
    let j = total.expect("at least one sequence");
    let value = tape.value(j).item();
    let grads = tape.backward(j)?;
    let grad = grads
        .get("logits")
        .cloned()
        .unwrap_or_else(|| Tensor::zeros(policy.steps, policy.vocab));
    Ok((value, grad))
}

/// Empirical mean and per-coordinate standard error of the policy-gradient
/// estimator over `n_samples` draws grouped into batches of `batch_size`.
pub fn reinforce_gradient_estimate(
    policy: &ToyPolicy,
    reward_fn: &dyn Fn(&[usize]) -> f64,
    n_samples: usize,
    batch_size: usize,
    baseline: BaselineMode,
    seed: u64,
) -> Result<(Tensor, Tensor)> {
    if n_samples == 0 || batch_size == 0 {
        return Err(Error::config("need n_samples >= 1 and batch_size >= 1"));
    }
    let mut rng = StdRng::seed_from_u64(seed);
    let greedy_reward = reward_fn(&policy.greedy());
    let coords = policy.steps * policy.vocab;
    let mut sum = vec![0.0; coords];
    let mut sum_sq = vec![0.0; coords];
    let n_batches = n_samples / batch_size;

    for _ in 0..n_batches {
        let draws: Vec<Vec<usize>> = (0..batch_size).map(|_| policy.sample(&mut rng)).collect();
        let rewards: Vec<f64> = draws.iter().map(|s| reward_fn(s)).collect();
        let greedy: Vec<f64> = vec![greedy_reward; batch_size];
        let advs = advantages(&rewards, baseline, &greedy);

        let mut batch_grad = vec![0.0; coords];
        for (seq, &adv) in draws.iter().zip(&advs) {
            if adv == 0.0 {
                continue;
            }
            let mut tape = Tape::new();
            let lp = policy.sequence_log_prob(&mut tape, seq)?;
            let scaled = tape.scale(lp, adv / batch_size as f64)?;
            let grads = tape.backward(scaled)?;
            if let Some(g) = grads.get("logits") {
                for (acc, v) in batch_grad.iter_mut().zip(&g.data) {
                    *acc += v;
                }
            }
        }
        for ((s, sq), g) in sum.iter_mut().zip(sum_sq.iter_mut()).zip(&batch_grad) {
            *s += g;
            *sq += g * g;
        }
    }

    let nb = n_batches as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / nb).collect();
    let se: Vec<f64> = sum_sq
        .iter()
        .zip(&mean)
        .map(|(&sq, &m)| {
            let var = (sq / nb - m * m).max(0.0);
            (var / nb).sqrt()
        })
        .collect();
    Ok((
        Tensor::from_vec(policy.steps, policy.vocab, mean),
        Tensor::from_vec(policy.steps, policy.vocab, se),
    ))
}
