//! The three reward models and the composite reward.
//!
//! Polarity and fluency are small binary classifiers; similarity is a pair
//! scorer trained on overlap-fraction targets in [0, 1]. All three sit on top
//! of embedding features: the polarity and similarity models average unigram
//! embeddings, the fluency model averages adjacent-token-pair features so
//! that word-order corruptions are visible to it.

use crate::corpus::{LabeledSentence, Mode, OpinionCluster, SimilarityPair, Summary};
use crate::diffcore::{AdamW, NodeId, ParamStore, Tape, Tensor};
use crate::error::{Error, Result};
use crate::textproc::{self, Vocab, BOS, EOS};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierConfig {
    pub embed_dim: usize,
    pub hidden_dim: usize,
    /// Longest text (in tokens) scored as one unit; longer inputs truncate.
    pub max_text_tokens: usize,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            embed_dim: 24,
            hidden_dim: 32,
            max_text_tokens: 256,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardTrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    /// Fraction of examples held out for the quality report.
    pub holdout_fraction: f64,
    pub model: ClassifierConfig,
}

impl Default for RewardTrainConfig {
    fn default() -> Self {
        RewardTrainConfig {
            epochs: 120,
            batch_size: 16,
            learning_rate: 6e-3,
            weight_decay: 1e-2,
            holdout_fraction: 0.2,
            model: ClassifierConfig::default(),
        }
    }
}

/// Held-out quality of a trained reward model.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RewardReport {
    pub accuracy: f64,
    pub f1: f64,
    pub pearson_r: f64,
    pub holdout_size: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
enum HeadKind {
    /// Two-class softmax head.
    TwoClass,
    /// Scalar sigmoid head over [u, v, u*v] pair features.
    Pair,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
enum FeatureKind {
    /// Mean of token embeddings.
    UnigramMean,
    /// Mean of concatenated adjacent-token embeddings over [BOS .. EOS].
    /// A pure bag of unigrams is order-blind and cannot separate shuffled
    /// corruptions from fluent text, so the fluency model uses this.
    BigramMean,
}

/// Shared model core: embedding features -> tanh hidden -> head.
#[derive(Debug, Clone)]
struct TextClassifier {
    vocab: Vocab,
    config: ClassifierConfig,
    features: FeatureKind,
    head: HeadKind,
    params: ParamStore,
}

impl TextClassifier {
    fn new(
        vocab: Vocab,
        config: ClassifierConfig,
        features: FeatureKind,
        head: HeadKind,
        seed: u64,
    ) -> Result<Self> {
        let mut rng = StdRng::seed_from_u64(seed);
        let e = config.embed_dim;
        let h = config.hidden_dim;
        let feat_dim = match features {
            FeatureKind::UnigramMean => e,
            FeatureKind::BigramMean => 2 * e,
        };
        let mut params = ParamStore::new();
        params.insert("emb", Tensor::xavier(vocab.len(), e, &mut rng))?;
        params.insert("w1", Tensor::xavier(feat_dim, h, &mut rng))?;
        params.insert("b1", Tensor::zeros(1, h))?;
        match head {
            HeadKind::TwoClass => {
                params.insert("w2", Tensor::xavier(h, 2, &mut rng))?;
                params.insert("b2", Tensor::zeros(1, 2))?;
            }
            HeadKind::Pair => {
                params.insert("wp", Tensor::xavier(4 * h, 1, &mut rng))?;
                params.insert("bp", Tensor::zeros(1, 1))?;
            }
        }
        Ok(TextClassifier {
            vocab,
            config,
            features,
            head,
            params,
        })
    }

    /// Pooled hidden representation of a token sequence.
    ///
    /// Unigram features pool before the hidden layer (bag semantics). Bigram
    /// features must apply the hidden nonlinearity per adjacent pair and pool
    /// afterwards: mean-then-transform is linear in the two unigram bags and
    /// cannot see word order at all.
    fn hidden_node(&self, tape: &mut Tape, params: &ParamStore, ids: &[u32]) -> Result<NodeId> {
        if ids.is_empty() {
            return Err(Error::data("cannot score an empty token sequence"));
        }
        let ids = &ids[..ids.len().min(self.config.max_text_tokens)];
        let emb = tape.param("emb", params.get("emb").expect("emb").clone());
        let w1 = tape.param("w1", params.get("w1").expect("w1").clone());
        let b1 = tape.param("b1", params.get("b1").expect("b1").clone());
        match self.features {
            FeatureKind::UnigramMean => {
                let e = tape.embed(emb, ids)?;
                let feat = tape.mean_rows(e)?;
                let h = tape.matmul(feat, w1)?;
                let h = tape.add(h, b1)?;
                tape.tanh(h)
            }
            FeatureKind::BigramMean => {
                let mut left = Vec::with_capacity(ids.len() + 1);
                left.push(BOS);
                left.extend_from_slice(ids);
                let mut right = Vec::with_capacity(ids.len() + 1);
                right.extend_from_slice(ids);
                right.push(EOS);
                let el = tape.embed(emb, &left)?;
                let er = tape.embed(emb, &right)?;
                let pairs = tape.concat_cols(&[el, er])?;
                let h = tape.matmul(pairs, w1)?;
                let h = tape.add_row_broadcast(h, b1)?;
                let h = tape.tanh(h)?;
                tape.mean_rows(h)
            }
        }
    }

    fn logits_node(&self, tape: &mut Tape, params: &ParamStore, ids: &[u32]) -> Result<NodeId> {
        let h = self.hidden_node(tape, params, ids)?;
        let w2 = tape.param("w2", params.get("w2").expect("w2").clone());
        let b2 = tape.param("b2", params.get("b2").expect("b2").clone());
        let logits = tape.matmul(h, w2)?;
        tape.add(logits, b2)
    }

    /// Finite-difference check of the cross-entropy gradient on one example.
    fn classification_fd_check(
        &self,
        text: &str,
        label: u8,
        eps: f64,
        samples_per_param: usize,
        seed: u64,
    ) -> Result<f64> {
        let ids = textproc::tokenize(text, &self.vocab);
        let mut params = self.params.clone();
        crate::diffcore::finite_diff_check(&mut params, eps, samples_per_param, seed, |store, tape| {
            let logits = self.logits_node(tape, store, &ids)?;
            tape.cross_entropy(logits, label as usize)
        })
    }

    /// P(class 1 | text) from the 2-way softmax; always in (0, 1).
    fn positive_probability(&self, text: &str) -> Result<f64> {
        let ids = textproc::tokenize(text, &self.vocab);
        let mut tape = Tape::new();
        let logits = self.logits_node(&mut tape, &self.params, &ids)?;
        let probs = tape.softmax(logits)?;
        Ok(tape.value(probs).data[1])
    }

    fn train(
        &mut self,
        examples: &[(Vec<u32>, u8)],
        cfg: &RewardTrainConfig,
        seed: u64,
    ) -> Result<()> {
        let mut rng = StdRng::seed_from_u64(seed);
        let mut order: Vec<usize> = (0..examples.len()).collect();
        for _ in 0..cfg.epochs {
            order.shuffle(&mut rng);
            for chunk in order.chunks(cfg.batch_size) {
                for &i in chunk {
                    let (ids, label) = &examples[i];
                    let mut tape = Tape::new();
                    let logits = self.logits_node(&mut tape, &self.params, ids)?;
                    let loss = tape.cross_entropy(logits, *label as usize)?;
                    let grads = tape.backward(loss)?;
                    self.params.accumulate(&grads)?;
                }
                self.params.scale_grads(1.0 / chunk.len() as f64);
                self.params.adamw_step(&AdamW {
                    lr: cfg.learning_rate,
                    weight_decay: cfg.weight_decay,
                    ..AdamW::default()
                });
            }
        }
        Ok(())
    }
}

/// Deterministic train/holdout split of example indices.
fn split_holdout(n: usize, fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = StdRng::seed_from_u64(seed ^ 0x5eed_0ff5);
    order.shuffle(&mut rng);
    let holdout = ((n as f64 * fraction).round() as usize).min(n.saturating_sub(1));
    let (eval, train) = order.split_at(holdout);
    (train.to_vec(), eval.to_vec())
}

fn binary_report(truths: &[u8], predictions: &[f64]) -> RewardReport {
    let mut tp = 0.0;
    let mut fp = 0.0;
    let mut fne = 0.0;
    let mut correct = 0usize;
    for (&t, &p) in truths.iter().zip(predictions) {
        let pred = if p >= 0.5 { 1u8 } else { 0u8 };
        if pred == t {
            correct += 1;
        }
        match (pred, t) {
            (1, 1) => tp += 1.0,
            (1, 0) => fp += 1.0,
            (0, 1) => fne += 1.0,
            _ => {}
        }
    }
    let precision = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
    let recall = if tp + fne > 0.0 { tp / (tp + fne) } else { 0.0 };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    RewardReport {
        accuracy: correct as f64 / truths.len().max(1) as f64,
        f1,
        pearson_r: f64::NAN,
        holdout_size: truths.len(),
    }
}

pub fn pearson_r(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        cov += (x - mx) * (y - my);
        vx += (x - mx) * (x - mx);
        vy += (y - my) * (y - my);
    }
    if vx == 0.0 || vy == 0.0 {
        return 0.0;
    }
    cov / (vx * vy).sqrt()
}

fn require_both_classes(examples: &[LabeledSentence]) -> Result<()> {
    let pos = examples.iter().any(|e| e.label == 1);
    let neg = examples.iter().any(|e| e.label == 0);
    if pos && neg {
        Ok(())
    } else {
        Err(Error::data("training data must contain both classes"))
    }
}

// ---------------------------------------------------------------------------
// Polarity
// ---------------------------------------------------------------------------

/// Text polarity scorer: P(positive | unit) in reviews mode, P(conservative |
/// document) in articles mode.
#[derive(Debug, Clone)]
pub struct PolarityModel(TextClassifier);

pub fn train_polarity_model(
    sentences: &[LabeledSentence],
    config: &RewardTrainConfig,
    seed: u64,
) -> Result<(PolarityModel, RewardReport)> {
    require_both_classes(sentences)?;
    let texts: Vec<&str> = sentences.iter().map(|s| s.text.as_str()).collect();
    let vocab = textproc::build_vocab(&texts, 1)?;
    let examples: Vec<(Vec<u32>, u8)> = sentences
        .iter()
        .map(|s| (textproc::tokenize(&s.text, &vocab), s.label))
        .collect();
    let (train_idx, eval_idx) = split_holdout(examples.len(), config.holdout_fraction, seed);
    let train: Vec<(Vec<u32>, u8)> = train_idx.iter().map(|&i| examples[i].clone()).collect();
    require_both_classes(
        &train_idx
            .iter()
            .map(|&i| sentences[i].clone())
            .collect::<Vec<_>>(),
    )?;

    let mut clf = TextClassifier::new(
        vocab,
        config.model,
        FeatureKind::UnigramMean,
        HeadKind::TwoClass,
        seed,
    )?;
    clf.train(&train, config, seed)?;
    let model = PolarityModel(clf);

    let truths: Vec<u8> = eval_idx.iter().map(|&i| sentences[i].label).collect();
    let preds: Vec<f64> = eval_idx
        .iter()
        .map(|&i| model.score_text(&sentences[i].text))
        .collect::<Result<_>>()?;
    Ok((model, binary_report(&truths, &preds)))
}

impl PolarityModel {
    /// Polarity of one text unit, strictly inside (0, 1).
    pub fn score_text(&self, text: &str) -> Result<f64> {
        self.0.positive_probability(text)
    }

    /// Finite-difference check of the training-loss gradient on one example.
    pub fn finite_diff_check(
        &self,
        text: &str,
        label: u8,
        eps: f64,
        samples_per_param: usize,
        seed: u64,
    ) -> Result<f64> {
        self.0.classification_fd_check(text, label, eps, samples_per_param, seed)
    }

    pub fn save(&self, params_path: &Path, sidecar_path: &Path) -> Result<()> {
        save_classifier(&self.0, "polarity", params_path, sidecar_path)
    }

    pub fn load(params_path: &Path, sidecar_path: &Path) -> Result<Self> {
        load_classifier("polarity", params_path, sidecar_path).map(PolarityModel)
    }
}

/// Mode-specific aggregation of input polarity:
/// reviews averages over every sentence of every document, articles averages
/// one score per document.
pub fn polarity_of_input(model: &PolarityModel, cluster: &OpinionCluster) -> Result<f64> {
    if cluster.inputs.is_empty() {
        return Err(Error::data("polarity_of_input: cluster has no documents"));
    }
    let scores = match cluster.mode {
        Mode::Reviews => cluster
            .input_sentences()
            .map(|s| model.score_text(s))
            .collect::<Result<Vec<f64>>>()?,
        Mode::Articles => cluster
            .inputs
            .iter()
            .map(|d| model.score_text(&d.text()))
            .collect::<Result<Vec<f64>>>()?,
    };
    Ok(mean(&scores))
}

/// Mode-specific summary polarity: per-sentence average in reviews mode, one
/// whole-text score in articles mode.
pub fn polarity_of_summary(model: &PolarityModel, summary: &Summary, mode: Mode) -> Result<f64> {
    if summary.sentences.is_empty() {
        return Err(Error::data("polarity_of_summary: empty summary"));
    }
    match mode {
        Mode::Reviews => {
            let scores = summary
                .sentences
                .iter()
                .map(|s| model.score_text(s))
                .collect::<Result<Vec<f64>>>()?;
            Ok(mean(&scores))
        }
        Mode::Articles => model.score_text(&summary.text()),
    }
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

// ---------------------------------------------------------------------------
// Similarity
// ---------------------------------------------------------------------------

/// Pair scorer emitting a similarity in [0, 1]. Symmetric input handling is
/// not assumed.
#[derive(Debug, Clone)]
pub struct SimilarityModel(TextClassifier);

pub fn train_similarity_model(
    pairs: &[SimilarityPair],
    config: &RewardTrainConfig,
    seed: u64,
) -> Result<(SimilarityModel, RewardReport)> {
    if pairs.len() < 2 {
        return Err(Error::data("similarity training needs at least 2 pairs"));
    }
    let mut texts: Vec<&str> = Vec::with_capacity(pairs.len() * 2);
    for p in pairs {
        texts.push(&p.a);
        texts.push(&p.b);
    }
    let vocab = textproc::build_vocab(&texts, 1)?;
    let examples: Vec<(Vec<u32>, Vec<u32>, f64)> = pairs
        .iter()
        .map(|p| {
            (
                textproc::tokenize(&p.a, &vocab),
                textproc::tokenize(&p.b, &vocab),
                p.score,
            )
        })
        .collect();

    let (train_idx, eval_idx) = split_holdout(examples.len(), config.holdout_fraction, seed);
    let mut clf = TextClassifier::new(
        vocab,
        config.model,
        FeatureKind::UnigramMean,
        HeadKind::Pair,
        seed,
    )?;

    let mut order = train_idx.clone();
    let mut shuffle_rng = StdRng::seed_from_u64(seed);
    for _ in 0..config.epochs {
        order.shuffle(&mut shuffle_rng);
        for chunk in order.chunks(config.batch_size) {
            let mut batch_grads = Vec::with_capacity(chunk.len());
            for &i in chunk {
                let (a, b, target) = &examples[i];
                let mut tape = Tape::new();
                let pred = similarity_node(&clf, &mut tape, &clf.params, a, b)?;
                let t = tape.leaf(Tensor::scalar(*target));
                let diff = tape.sub(pred, t)?;
                let loss = tape.mul(diff, diff)?;
                batch_grads.push(tape.backward(loss)?);
            }
            for grads in &batch_grads {
                clf.params.accumulate(grads)?;
            }
            clf.params.scale_grads(1.0 / chunk.len() as f64);
            clf.params.adamw_step(&AdamW {
                lr: config.learning_rate,
                weight_decay: config.weight_decay,
                ..AdamW::default()
            });
        }
    }

    let model = SimilarityModel(clf);
    let mut truths = Vec::with_capacity(eval_idx.len());
    let mut preds = Vec::with_capacity(eval_idx.len());
    for &i in &eval_idx {
        truths.push(pairs[i].score);
        preds.push(model.score_pair(&pairs[i].a, &pairs[i].b)?);
    }
    let report = RewardReport {
        accuracy: f64::NAN,
        f1: f64::NAN,
        pearson_r: pearson_r(&preds, &truths),
        holdout_size: eval_idx.len(),
    };
    Ok((model, report))
}

/// Shared-encoder pair score: sigmoid of a head over [u, v, u*v, (u-v)^2].
fn similarity_node(
    clf: &TextClassifier,
    tape: &mut Tape,
    params: &ParamStore,
    a_ids: &[u32],
    b_ids: &[u32],
) -> Result<NodeId> {
    let u = clf.hidden_node(tape, params, a_ids)?;
    let v = clf.hidden_node(tape, params, b_ids)?;
    let uv = tape.mul(u, v)?;
    let diff = tape.sub(u, v)?;
    let sq_diff = tape.mul(diff, diff)?;
    let feats = tape.concat_cols(&[u, v, uv, sq_diff])?;
    let wp = tape.param("wp", params.get("wp").expect("wp").clone());
    let bp = tape.param("bp", params.get("bp").expect("bp").clone());
    let score = tape.matmul(feats, wp)?;
    let score = tape.add(score, bp)?;
    tape.sigmoid(score)
}

impl SimilarityModel {
    /// similarity(a, b) in [0, 1]; both texts truncate to the configured
    /// maximum token count before scoring.
    pub fn score_pair(&self, a: &str, b: &str) -> Result<f64> {
        let a_ids = textproc::tokenize(a, &self.0.vocab);
        let b_ids = textproc::tokenize(b, &self.0.vocab);
        let mut tape = Tape::new();
        let node = similarity_node(&self.0, &mut tape, &self.0.params, &a_ids, &b_ids)?;
        Ok(tape.value(node).item())
    }

    /// Finite-difference check of the squared-error gradient on one pair.
    pub fn finite_diff_check(
        &self,
        a: &str,
        b: &str,
        target: f64,
        eps: f64,
        samples_per_param: usize,
        seed: u64,
    ) -> Result<f64> {
        let a_ids = textproc::tokenize(a, &self.0.vocab);
        let b_ids = textproc::tokenize(b, &self.0.vocab);
        let clf = &self.0;
        let mut params = clf.params.clone();
        crate::diffcore::finite_diff_check(&mut params, eps, samples_per_param, seed, |store, tape| {
            let pred = similarity_node(clf, tape, store, &a_ids, &b_ids)?;
            let t = tape.leaf(Tensor::scalar(target));
            let diff = tape.sub(pred, t)?;
            tape.mul(diff, diff)
        })
    }

    pub fn save(&self, params_path: &Path, sidecar_path: &Path) -> Result<()> {
        save_classifier(&self.0, "similarity", params_path, sidecar_path)
    }

    pub fn load(params_path: &Path, sidecar_path: &Path) -> Result<Self> {
        load_classifier("similarity", params_path, sidecar_path).map(SimilarityModel)
    }
}

// ---------------------------------------------------------------------------
// Fluency
// ---------------------------------------------------------------------------

/// Sentence acceptability scorer: P(grammatical | sentence).
#[derive(Debug, Clone)]
pub struct FluencyModel(TextClassifier);

pub fn train_fluency_model(
    sentences: &[LabeledSentence],
    config: &RewardTrainConfig,
    seed: u64,
) -> Result<(FluencyModel, RewardReport)> {
    require_both_classes(sentences)?;
    let texts: Vec<&str> = sentences.iter().map(|s| s.text.as_str()).collect();
    let vocab = textproc::build_vocab(&texts, 1)?;
    let examples: Vec<(Vec<u32>, u8)> = sentences
        .iter()
        .map(|s| (textproc::tokenize(&s.text, &vocab), s.label))
        .collect();
    let (train_idx, eval_idx) = split_holdout(examples.len(), config.holdout_fraction, seed);
    let train: Vec<(Vec<u32>, u8)> = train_idx.iter().map(|&i| examples[i].clone()).collect();

    let mut clf = TextClassifier::new(
        vocab,
        config.model,
        FeatureKind::BigramMean,
        HeadKind::TwoClass,
        seed,
    )?;
    clf.train(&train, config, seed)?;
    let model = FluencyModel(clf);

    let truths: Vec<u8> = eval_idx.iter().map(|&i| sentences[i].label).collect();
    let preds: Vec<f64> = eval_idx
        .iter()
        .map(|&i| model.score_sentence(&sentences[i].text))
        .collect::<Result<_>>()?;
    Ok((model, binary_report(&truths, &preds)))
}

impl FluencyModel {
    pub fn score_sentence(&self, sentence: &str) -> Result<f64> {
        self.0.positive_probability(sentence)
    }

    /// Finite-difference check of the training-loss gradient on one example.
    pub fn finite_diff_check(
        &self,
        sentence: &str,
        label: u8,
        eps: f64,
        samples_per_param: usize,
        seed: u64,
    ) -> Result<f64> {
        self.0.classification_fd_check(sentence, label, eps, samples_per_param, seed)
    }

    pub fn save(&self, params_path: &Path, sidecar_path: &Path) -> Result<()> {
        save_classifier(&self.0, "fluency", params_path, sidecar_path)
    }

    pub fn load(params_path: &Path, sidecar_path: &Path) -> Result<Self> {
        load_classifier("fluency", params_path, sidecar_path).map(FluencyModel)
    }
}

// ---------------------------------------------------------------------------
// Rewards
// ---------------------------------------------------------------------------

/// Weights for the three reward components; defaults (1.0, 0.5, 0.2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        RewardWeights {
            alpha: 1.0,
            beta: 0.5,
            gamma: 0.2,
        }
    }
}

impl RewardWeights {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        let w = RewardWeights { alpha, beta, gamma };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if self.alpha < 0.0 || self.beta < 0.0 || self.gamma < 0.0 {
            return Err(Error::config("reward weights must be non-negative"));
        }
        if self.alpha == 0.0 && self.beta == 0.0 && self.gamma == 0.0 {
            return Err(Error::config("at least one reward weight must be positive"));
        }
        Ok(())
    }
}

/// Per-sample reward record: components, weights and exact weighted total.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub r_polarity: f64,
    pub r_content: f64,
    pub r_language: f64,
    pub weights: RewardWeights,
    pub total: f64,
}

impl RewardBreakdown {
    pub fn new(weights: RewardWeights, r_polarity: f64, r_content: f64, r_language: f64) -> Result<Self> {
        weights.validate()?;
        if !(-1.0..=0.0).contains(&r_polarity) {
            return Err(Error::data(format!("r_polarity {r_polarity} outside [-1, 0]")));
        }
        if !(0.0..=1.0).contains(&r_content) || !(0.0..=1.0).contains(&r_language) {
            return Err(Error::data("content/language rewards must lie in [0, 1]".to_string()));
        }
        let total = weights.alpha * r_polarity + weights.beta * r_content + weights.gamma * r_language;
        Ok(RewardBreakdown {
            r_polarity,
            r_content,
            r_language,
            weights,
            total,
        })
    }
}

/// Negative absolute polarity gap between two scores in [0, 1].
pub fn polarity_reward_from_scores(input_score: f64, summary_score: f64) -> f64 {
    -(summary_score - input_score).abs()
}

/// Polarity distance reward: 0 when summary and input polarity agree, -1 at
/// the maximal gap.
pub fn reward_polarity(
    model: &PolarityModel,
    cluster: &OpinionCluster,
    summary: &Summary,
) -> Result<f64> {
    let input = polarity_of_input(model, cluster)?;
    let output = polarity_of_summary(model, summary, cluster.mode)?;
    Ok(polarity_reward_from_scores(input, output))
}

/// Content preservation reward: similarity(summary, input concatenation).
pub fn reward_content(
    model: &SimilarityModel,
    cluster: &OpinionCluster,
    summary: &Summary,
) -> Result<f64> {
    model.score_pair(&summary.text(), &cluster.input_text())
}

/// Language naturality reward: mean per-sentence grammaticality.
pub fn reward_language(model: &FluencyModel, summary: &Summary) -> Result<f64> {
    if summary.sentences.is_empty() {
        return Err(Error::data("reward_language: empty summary"));
    }
    let scores = summary
        .sentences
        .iter()
        .map(|s| model.score_sentence(s))
        .collect::<Result<Vec<f64>>>()?;
    Ok(mean(&scores))
}

/// Frozen bundle of the three trained reward models.
#[derive(Debug, Clone)]
pub struct RewardModels {
    pub polarity: PolarityModel,
    pub similarity: SimilarityModel,
    pub fluency: FluencyModel,
}

/// Weighted composite of the three rewards.
pub fn composite_reward(
    weights: RewardWeights,
    cluster: &OpinionCluster,
    summary: &Summary,
    models: &RewardModels,
) -> Result<RewardBreakdown> {
    let r_p = reward_polarity(&models.polarity, cluster, summary)?;
    let r_c = reward_content(&models.similarity, cluster, summary)?;
    let r_l = reward_language(&models.fluency, summary)?;
    RewardBreakdown::new(weights, r_p, r_c, r_l)
}

// ---------------------------------------------------------------------------
// Checkpoint I/O
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct ClassifierSidecar {
    role: String,
    config: ClassifierConfig,
    features: FeatureKind,
    head: HeadKind,
    vocab: Vec<String>,
}

fn save_classifier(
    clf: &TextClassifier,
    role: &str,
    params_path: &Path,
    sidecar_path: &Path,
) -> Result<()> {
    clf.params.save(params_path)?;
    let sidecar = ClassifierSidecar {
        role: role.to_string(),
        config: clf.config,
        features: clf.features,
        head: clf.head,
        vocab: clf.vocab.tokens().to_vec(),
    };
    std::fs::write(sidecar_path, serde_json::to_string_pretty(&sidecar)?)?;
    Ok(())
}

fn load_classifier(role: &str, params_path: &Path, sidecar_path: &Path) -> Result<TextClassifier> {
    let text = std::fs::read_to_string(sidecar_path)?;
    let sidecar: ClassifierSidecar = serde_json::from_str(&text)?;
    if sidecar.role != role {
        return Err(Error::data(format!(
            "checkpoint role mismatch: expected `{role}`, found `{}`",
            sidecar.role
        )));
    }
    let vocab = Vocab::from_token_list(sidecar.vocab)?;
    let mut clf = TextClassifier::new(vocab, sidecar.config, sidecar.features, sidecar.head, 0)?;
    clf.params.load_into(params_path)?;
    Ok(clf)
}
