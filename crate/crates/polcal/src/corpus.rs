//! Seeded synthetic opinion corpora and their JSON-Lines interchange format.
//!
//! Real opinion datasets are replaced by template synthesis with aspect and
//! opinion-phrase slots, so sentiment labels and reference polarity are
//! controllable ground truth. A [`CorpusBundle`] carries the summarization
//! clusters plus the three reward-model training sets.

use crate::error::{Error, Result};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Reviews,
    Articles,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Mode::Reviews => write!(f, "reviews"),
            Mode::Articles => write!(f, "articles"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
}

/// One input document: a short review or article.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub sentences: Vec<String>,
    pub source_label: Option<Polarity>,
}

impl Document {
    pub fn text(&self) -> String {
        self.sentences.join(" ")
    }
}

/// Reference or generated summary as ordered sentences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub sentences: Vec<String>,
}

impl Summary {
    pub fn text(&self) -> String {
        self.sentences.join(" ")
    }

    pub fn from_text(text: &str) -> Summary {
        Summary {
            sentences: crate::textproc::split_sentences(text),
        }
    }
}

/// One summarization instance: input documents plus a reference summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpinionCluster {
    pub id: String,
    pub mode: Mode,
    pub inputs: Vec<Document>,
    pub reference: Summary,
    /// Share of positive-polarity content realized at generation time.
    /// Absent for ingested real data.
    pub mixture: Option<f64>,
}

impl OpinionCluster {
    /// Check the structural invariants. Called on every loaded record.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::validation(self.id.clone(), msg));
        if self.inputs.is_empty() {
            return fail("inputs must be non-empty".to_string());
        }
        if self.mode == Mode::Articles && self.inputs.len() != 3 {
            return fail(format!(
                "articles mode requires exactly 3 documents, got {}",
                self.inputs.len()
            ));
        }
        for (d, doc) in self.inputs.iter().enumerate() {
            if doc.sentences.is_empty() {
                return fail(format!("document {d} has no sentences"));
            }
            if doc.sentences.iter().any(|s| s.trim().is_empty()) {
                return fail(format!("document {d} has an empty sentence"));
            }
        }
        if self.reference.sentences.is_empty() {
            return fail("reference must be non-empty".to_string());
        }
        if self.reference.sentences.iter().any(|s| s.trim().is_empty()) {
            return fail("reference has an empty sentence".to_string());
        }
        if let Some(m) = self.mixture {
            if !(0.0..=1.0).contains(&m) {
                return fail(format!("mixture {m} outside [0, 1]"));
            }
        }
        Ok(())
    }

    /// All input sentences in document order.
    pub fn input_sentences(&self) -> impl Iterator<Item = &str> {
        self.inputs
            .iter()
            .flat_map(|d| d.sentences.iter().map(|s| s.as_str()))
    }

    /// Whole input as one string, documents joined in cluster order.
    pub fn input_text(&self) -> String {
        self.inputs
            .iter()
            .map(|d| d.text())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// (sentence, binary label) pair for the polarity and fluency training sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSentence {
    pub text: String,
    pub label: u8,
}

/// (text_a, text_b, score in [0,1]) triple for the similarity training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityPair {
    pub a: String,
    pub b: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ClusterSplits {
    pub train: Vec<OpinionCluster>,
    pub dev: Vec<OpinionCluster>,
    pub test: Vec<OpinionCluster>,
}

/// Everything one experiment needs: clusters plus reward-model training sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusBundle {
    pub clusters: ClusterSplits,
    pub polarity_sentences: Vec<LabeledSentence>,
    pub similarity_pairs: Vec<SimilarityPair>,
    pub acceptability_pairs: Vec<LabeledSentence>,
}

impl CorpusBundle {
    pub fn all_cluster_texts(&self) -> Vec<String> {
        let mut texts = Vec::new();
        for c in self
            .clusters
            .train
            .iter()
            .chain(&self.clusters.dev)
            .chain(&self.clusters.test)
        {
            texts.push(c.input_text());
            texts.push(c.reference.text());
        }
        for s in &self.polarity_sentences {
            texts.push(s.text.clone());
        }
        for p in &self.similarity_pairs {
            texts.push(p.a.clone());
            texts.push(p.b.clone());
        }
        for s in &self.acceptability_pairs {
            texts.push(s.text.clone());
        }
        texts
    }
}

/// Distribution the per-cluster positive-content share is drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MixtureSpec {
    Fixed { value: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl MixtureSpec {
    fn sample(&self, rng: &mut StdRng) -> f64 {
        match *self {
            MixtureSpec::Fixed { value } => value,
            MixtureSpec::Uniform { lo, hi } => {
                if lo == hi {
                    lo
                } else {
                    rng.gen_range(lo..hi)
                }
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            MixtureSpec::Fixed { value } => (0.0..=1.0).contains(&value),
            MixtureSpec::Uniform { lo, hi } => {
                (0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi) && lo <= hi
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::config(format!("mixture spec out of range: {self:?}")))
        }
    }
}

/// Aspect nouns and opinion templates the generator renders sentences from.
///
/// Every positive pattern contains at least one polarity-bearing word absent
/// from the negative bank and vice versa, so sentiment labels are separable
/// by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateBank {
    pub aspects: Vec<String>,
    pub positive_patterns: Vec<String>,
    pub negative_patterns: Vec<String>,
    pub positive_opinions: Vec<String>,
    pub negative_opinions: Vec<String>,
}

impl Default for TemplateBank {
    fn default() -> Self {
        let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect();
        TemplateBank {
            aspects: s(&[
                "battery", "screen", "sound", "camera", "price", "design", "keyboard",
                "service", "speed", "manual", "packaging", "warranty",
            ]),
            positive_patterns: s(&[
                "the {aspect} is {opinion}.",
                "i really like the {aspect}.",
                "the {aspect} feels {opinion}.",
                "great {aspect} overall.",
                "the {aspect} exceeded my expectations.",
                "everyone praised the {aspect}.",
            ]),
            negative_patterns: s(&[
                "the {aspect} is {opinion}.",
                "i really dislike the {aspect}.",
                "the {aspect} feels {opinion}.",
                "poor {aspect} overall.",
                "the {aspect} fell short of my expectations.",
                "everyone criticized the {aspect}.",
            ]),
            positive_opinions: s(&[
                "great", "excellent", "superb", "reliable", "crisp", "solid", "fantastic",
                "wonderful",
            ]),
            negative_opinions: s(&[
                "poor", "awful", "weak", "flimsy", "noisy", "disappointing", "terrible",
                "unreliable",
            ]),
        }
    }
}

impl TemplateBank {
    fn validate(&self) -> Result<()> {
        if self.aspects.is_empty()
            || self.positive_patterns.is_empty()
            || self.negative_patterns.is_empty()
            || self.positive_opinions.is_empty()
            || self.negative_opinions.is_empty()
        {
            return Err(Error::config("template vocabulary must not be empty"));
        }
        Ok(())
    }

    fn render(&self, polarity: Polarity, aspect: &str, rng: &mut StdRng) -> String {
        let opinions = match polarity {
            Polarity::Positive => &self.positive_opinions,
            Polarity::Negative => &self.negative_opinions,
        };
        let opinion = &opinions[rng.gen_range(0..opinions.len())];
        self.render_with_opinion(polarity, aspect, opinion, rng)
    }

    fn render_with_opinion(
        &self,
        polarity: Polarity,
        aspect: &str,
        opinion: &str,
        rng: &mut StdRng,
    ) -> String {
        let patterns = match polarity {
            Polarity::Positive => &self.positive_patterns,
            Polarity::Negative => &self.negative_patterns,
        };
        let pattern = &patterns[rng.gen_range(0..patterns.len())];
        pattern.replace("{aspect}", aspect).replace("{opinion}", opinion)
    }

    /// Deterministic summary-style sentence for an aspect: the reference is a
    /// pure function of the cluster's aspect/polarity assignment, which keeps
    /// the summarization task learnable at desk scale.
    fn render_summary(&self, polarity: Polarity, aspect_index: usize, aspect: &str) -> String {
        let opinions = match polarity {
            Polarity::Positive => &self.positive_opinions,
            Polarity::Negative => &self.negative_opinions,
        };
        let opinion = &opinions[aspect_index % opinions.len()];
        format!("the {aspect} is {opinion}.")
    }
}

/// Generator configuration. `documents_per_cluster` must be 3 in articles
/// mode, mirroring three-article clusters; reviews mode defaults to 8.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    pub mode: Mode,
    pub train_clusters: usize,
    pub dev_clusters: usize,
    pub test_clusters: usize,
    pub documents_per_cluster: usize,
    pub sentences_per_document: usize,
    /// Distinct aspects discussed across a cluster's documents.
    pub input_aspects: usize,
    pub min_reference_sentences: usize,
    pub reference_sentences: usize,
    pub mixture: MixtureSpec,
    pub polarity_examples: usize,
    pub similarity_examples: usize,
    pub acceptability_examples: usize,
    pub max_summary_tokens: usize,
    pub templates: TemplateBank,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            mode: Mode::Reviews,
            train_clusters: 64,
            dev_clusters: 16,
            test_clusters: 32,
            documents_per_cluster: 8,
            sentences_per_document: 3,
            input_aspects: 6,
            min_reference_sentences: 3,
            reference_sentences: 5,
            mixture: MixtureSpec::Uniform { lo: 0.55, hi: 0.95 },
            polarity_examples: 600,
            similarity_examples: 1000,
            acceptability_examples: 600,
            max_summary_tokens: 48,
            templates: TemplateBank::default(),
        }
    }
}

impl CorpusConfig {
    pub fn validate(&self) -> Result<()> {
        if self.train_clusters == 0 && self.dev_clusters == 0 && self.test_clusters == 0 {
            return Err(Error::config("zero clusters requested"));
        }
        self.templates.validate()?;
        self.mixture.validate()?;
        if self.documents_per_cluster == 0 || self.sentences_per_document == 0 {
            return Err(Error::config("documents and sentences per cluster must be >= 1"));
        }
        if self.mode == Mode::Articles && self.documents_per_cluster != 3 {
            return Err(Error::config(format!(
                "articles mode requires documents_per_cluster = 3, got {}",
                self.documents_per_cluster
            )));
        }
        if self.min_reference_sentences == 0 || self.min_reference_sentences > self.reference_sentences {
            return Err(Error::config(
                "need 1 <= min_reference_sentences <= reference_sentences",
            ));
        }
        if self.reference_sentences > self.input_aspects {
            return Err(Error::config(format!(
                "reference_sentences {} exceeds input_aspects {}",
                self.reference_sentences, self.input_aspects
            )));
        }
        if self.input_aspects > self.templates.aspects.len() {
            return Err(Error::config(format!(
                "input_aspects {} exceeds available aspects {}",
                self.input_aspects,
                self.templates.aspects.len()
            )));
        }
        if 2 * self.reference_sentences > self.templates.aspects.len() {
            return Err(Error::config(
                "similarity pairs need at least 2 * reference_sentences distinct aspects",
            ));
        }
        if self.polarity_examples < 2 || self.acceptability_examples < 2 {
            return Err(Error::config(
                "labeled sets need at least 2 examples so both classes appear",
            ));
        }
        Ok(())
    }
}

fn round_count(fraction: f64, total: usize) -> usize {
    ((fraction * total as f64).round() as usize).min(total)
}

/// Generate a full corpus bundle. Pure function of `(config, seed)`.
pub fn generate_corpus(config: &CorpusConfig, seed: u64) -> Result<CorpusBundle> {
    config.validate()?;
    let mut rng = StdRng::seed_from_u64(seed);

    let mut splits = ClusterSplits::default();
    for (name, count, out) in [
        ("train", config.train_clusters, &mut splits.train),
        ("dev", config.dev_clusters, &mut splits.dev),
        ("test", config.test_clusters, &mut splits.test),
    ] {
        for i in 0..count {
            out.push(generate_cluster(config, format!("{name}-{i:04}"), &mut rng)?);
        }
    }

    let polarity_sentences = generate_labeled_sentences(config, config.polarity_examples, &mut rng);
    let similarity_pairs = generate_similarity_pairs(config, &mut rng);
    let acceptability_pairs = generate_acceptability(config, &mut rng);

    let bundle = CorpusBundle {
        clusters: splits,
        polarity_sentences,
        similarity_pairs,
        acceptability_pairs,
    };
    debug_assert!(bundle
        .polarity_sentences
        .iter()
        .any(|s| s.label == 1)
        != bundle.polarity_sentences.iter().all(|s| s.label == 1));
    Ok(bundle)
}

fn generate_cluster(config: &CorpusConfig, id: String, rng: &mut StdRng) -> Result<OpinionCluster> {
    let bank = &config.templates;
    let docs = config.documents_per_cluster;
    let drawn = config.mixture.sample(rng);
    let pos_docs = round_count(drawn, docs);
    let mixture = pos_docs as f64 / docs as f64;

    // Aspects discussed across the documents; the first block is reviewed
    // positively.
    let mut aspect_ids: Vec<usize> = (0..bank.aspects.len()).collect();
    aspect_ids.shuffle(rng);
    aspect_ids.truncate(config.input_aspects);
    let mut pos_aspects = round_count(mixture, config.input_aspects);
    if pos_docs > 0 {
        pos_aspects = pos_aspects.max(1);
    }
    if pos_docs < docs {
        pos_aspects = pos_aspects.min(config.input_aspects.saturating_sub(1));
    }
    let (pos_pool, neg_pool) = aspect_ids.split_at(pos_aspects.min(config.input_aspects));

    let mut inputs = Vec::with_capacity(docs);
    for d in 0..docs {
        let polarity = if d < pos_docs {
            Polarity::Positive
        } else {
            Polarity::Negative
        };
        let pool = match polarity {
            Polarity::Positive => pos_pool,
            Polarity::Negative => neg_pool,
        };
        let mut sentences = Vec::with_capacity(config.sentences_per_document);
        for s in 0..config.sentences_per_document {
            // Cycle through the pool so every aspect is mentioned, then vary.
            let aspect_id = pool[(d + s + rng.gen_range(0..pool.len())) % pool.len()];
            sentences.push(bank.render(polarity, &bank.aspects[aspect_id], rng));
        }
        inputs.push(Document {
            sentences,
            source_label: Some(polarity),
        });
    }
    // Interleave document order so polarity is not positionally encoded.
    inputs.shuffle(rng);

    // The reference covers a random subset of the discussed aspects, the way
    // an editor picks highlights; which aspects make the cut is not
    // predictable from the documents. Positive content comes first, in
    // deterministic wording, and the positive share tracks the mixture
    // within rounding.
    let ref_len = if config.min_reference_sentences == config.reference_sentences {
        config.reference_sentences
    } else {
        rng.gen_range(config.min_reference_sentences..=config.reference_sentences)
    };
    let ref_len = ref_len.min(config.input_aspects);
    let mut pos_ref = round_count(mixture, ref_len);
    pos_ref = pos_ref.min(pos_pool.len());
    let mut neg_ref = ref_len - pos_ref;
    if neg_ref > neg_pool.len() {
        let overflow = neg_ref - neg_pool.len();
        neg_ref = neg_pool.len();
        pos_ref = (pos_ref + overflow).min(pos_pool.len());
    }

    let mut pos_pick: Vec<usize> = pos_pool.to_vec();
    pos_pick.shuffle(rng);
    pos_pick.truncate(pos_ref);
    let mut neg_pick: Vec<usize> = neg_pool.to_vec();
    neg_pick.shuffle(rng);
    neg_pick.truncate(neg_ref);

    let mut reference = Vec::with_capacity(pos_ref + neg_ref);
    for &a in &pos_pick {
        reference.push(bank.render_summary(Polarity::Positive, a, &bank.aspects[a]));
    }
    for &a in &neg_pick {
        reference.push(bank.render_summary(Polarity::Negative, a, &bank.aspects[a]));
    }

    let ref_tokens: usize = reference
        .iter()
        .map(|s| crate::textproc::normalize_tokens(s).len())
        .sum();
    if ref_tokens > config.max_summary_tokens {
        return Err(Error::config(format!(
            "reference length {ref_tokens} exceeds max_summary_tokens {}",
            config.max_summary_tokens
        )));
    }

    let cluster = OpinionCluster {
        id,
        mode: config.mode,
        inputs,
        reference: Summary {
            sentences: reference,
        },
        mixture: Some(mixture),
    };
    cluster.validate()?;
    Ok(cluster)
}

fn generate_labeled_sentences(
    config: &CorpusConfig,
    count: usize,
    rng: &mut StdRng,
) -> Vec<LabeledSentence> {
    let bank = &config.templates;
    (0..count)
        .map(|i| {
            let polarity = if i % 2 == 0 {
                Polarity::Positive
            } else {
                Polarity::Negative
            };
            let aspect = &bank.aspects[rng.gen_range(0..bank.aspects.len())];
            LabeledSentence {
                text: bank.render(polarity, aspect, rng),
                label: if polarity == Polarity::Positive { 1 } else { 0 },
            }
        })
        .collect()
}

/// Similarity pairs score the shared-content overlap fraction between two
/// paraphrase variants, already normalized to [0, 1].
fn generate_similarity_pairs(config: &CorpusConfig, rng: &mut StdRng) -> Vec<SimilarityPair> {
    let bank = &config.templates;
    let k = config.reference_sentences.max(2);
    let mut pairs = Vec::with_capacity(config.similarity_examples);
    for i in 0..config.similarity_examples {
        let mut aspect_ids: Vec<usize> = (0..bank.aspects.len()).collect();
        aspect_ids.shuffle(rng);
        let (a_aspects, spare) = aspect_ids.split_at(k);

        let polarities: Vec<Polarity> = (0..k)
            .map(|_| {
                if rng.gen_bool(0.5) {
                    Polarity::Positive
                } else {
                    Polarity::Negative
                }
            })
            .collect();
        let opinions: Vec<String> = polarities
            .iter()
            .map(|&p| {
                let bank_words = match p {
                    Polarity::Positive => &bank.positive_opinions,
                    Polarity::Negative => &bank.negative_opinions,
                };
                bank_words[rng.gen_range(0..bank_words.len())].clone()
            })
            .collect();
        let a_sentences: Vec<String> = (0..k)
            .map(|slot| {
                bank.render_with_opinion(
                    polarities[slot],
                    &bank.aspects[a_aspects[slot]],
                    &opinions[slot],
                    rng,
                )
            })
            .collect();

        // Share j of k content slots; spread j evenly over the output.
        let shared = i % (k + 1);
        let mut b_sentences = Vec::with_capacity(k);
        for slot in 0..k {
            if slot < shared {
                // Paraphrase: same aspect, polarity and opinion word under a
                // re-rendered pattern.
                b_sentences.push(bank.render_with_opinion(
                    polarities[slot],
                    &bank.aspects[a_aspects[slot]],
                    &opinions[slot],
                    rng,
                ));
            } else {
                let aid = spare[(slot - shared) % spare.len()];
                let p = if rng.gen_bool(0.5) {
                    Polarity::Positive
                } else {
                    Polarity::Negative
                };
                b_sentences.push(bank.render(p, &bank.aspects[aid], rng));
            }
        }
        b_sentences.shuffle(rng);

        pairs.push(SimilarityPair {
            a: a_sentences.join(" "),
            b: b_sentences.join(" "),
            score: shared as f64 / k as f64,
        });
    }
    pairs
}

/// Fluent sentences labeled 1; corruptions (shuffle, duplication, truncation)
/// labeled 0.
fn generate_acceptability(config: &CorpusConfig, rng: &mut StdRng) -> Vec<LabeledSentence> {
    let bank = &config.templates;
    (0..config.acceptability_examples)
        .map(|i| {
            let polarity = if rng.gen_bool(0.5) {
                Polarity::Positive
            } else {
                Polarity::Negative
            };
            let aspect = &bank.aspects[rng.gen_range(0..bank.aspects.len())];
            let sentence = bank.render(polarity, aspect, rng);
            if i % 2 == 0 {
                LabeledSentence {
                    text: sentence,
                    label: 1,
                }
            } else {
                LabeledSentence {
                    text: corrupt_sentence(&sentence, rng),
                    label: 0,
                }
            }
        })
        .collect()
}

fn corrupt_sentence(sentence: &str, rng: &mut StdRng) -> String {
    let tokens = crate::textproc::normalize_tokens(sentence);
    let mut out = tokens.clone();
    match rng.gen_range(0..3u8) {
        0 => {
            // Shuffle until the order actually changes.
            for _ in 0..16 {
                out.shuffle(rng);
                if out != tokens {
                    break;
                }
            }
            if out == tokens && tokens.len() >= 2 {
                out.swap(0, 1);
            }
        }
        1 => {
            // Duplicate a random word next to itself.
            let idx = rng.gen_range(0..out.len());
            let w = out[idx].clone();
            out.insert(idx, w);
        }
        _ => {
            // Drop the trailing tokens (including the terminator).
            let keep = (out.len().saturating_sub(2)).max(1);
            out.truncate(keep);
        }
    }
    out.join(" ")
}

// ---------------------------------------------------------------------------
// JSON-Lines I/O
// ---------------------------------------------------------------------------

/// Write clusters one JSON record per line.
pub fn save_jsonl(clusters: &[OpinionCluster], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    for cluster in clusters {
        serde_json::to_writer(&mut w, cluster)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Load clusters, preserving order and validating every invariant.
///
/// A malformed line reports its 1-based line number; an invariant violation
/// reports the offending cluster id.
pub fn load_jsonl(path: &Path) -> Result<Vec<OpinionCluster>> {
    let file = std::fs::File::open(path)?;
    let reader = std::io::BufReader::new(file);
    let mut clusters = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cluster: OpinionCluster = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: idx + 1,
            msg: e.to_string(),
        })?;
        cluster.validate()?;
        clusters.push(cluster);
    }
    Ok(clusters)
}

pub fn save_labeled_jsonl(items: &[LabeledSentence], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_labeled_jsonl(path: &Path) -> Result<Vec<LabeledSentence>> {
    let file = std::fs::File::open(path)?;
    let reader = std::io::BufReader::new(file);
    let mut items = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let item: LabeledSentence = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: idx + 1,
            msg: e.to_string(),
        })?;
        if item.label > 1 {
            return Err(Error::validation(
                format!("line {}", idx + 1),
                format!("label must be 0 or 1, got {}", item.label),
            ));
        }
        items.push(item);
    }
    Ok(items)
}

pub fn save_pairs_jsonl(items: &[SimilarityPair], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_pairs_jsonl(path: &Path) -> Result<Vec<SimilarityPair>> {
    let file = std::fs::File::open(path)?;
    let reader = std::io::BufReader::new(file);
    let mut items = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let item: SimilarityPair = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: idx + 1,
            msg: e.to_string(),
        })?;
        if !(0.0..=1.0).contains(&item.score) {
            return Err(Error::validation(
                format!("line {}", idx + 1),
                format!("score {} outside [0, 1]", item.score),
            ));
        }
        items.push(item);
    }
    Ok(items)
}
