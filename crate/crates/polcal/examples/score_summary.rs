//! Score candidate summaries against one cluster with the composite reward.
//!
//! ```bash
//! cargo run --release --example score_summary
//! ```

use polcal::corpus::{generate_corpus, CorpusConfig, Summary};
use polcal::rewards::{
    composite_reward, train_fluency_model, train_polarity_model, train_similarity_model,
    RewardModels, RewardTrainConfig, RewardWeights,
};

fn main() -> polcal::Result<()> {
    let bundle = generate_corpus(&CorpusConfig::default(), 7)?;
    let cfg = RewardTrainConfig::default();
    let (polarity, _) = train_polarity_model(&bundle.polarity_sentences, &cfg, 7)?;
    let (similarity, _) = train_similarity_model(&bundle.similarity_pairs, &cfg, 7)?;
    let (fluency, _) = train_fluency_model(&bundle.acceptability_pairs, &cfg, 7)?;
    let models = RewardModels {
        polarity,
        similarity,
        fluency,
    };

    let cluster = &bundle.clusters.test[0];
    println!("cluster {} (mixture {:.3})", cluster.id, cluster.mixture.unwrap());
    println!("input: {}\n", cluster.input_text());

    let weights = RewardWeights::default();
    let candidates = [
        ("reference", cluster.reference.clone()),
        (
            "all positive",
            Summary::from_text("the battery is great. the screen is superb. the price is excellent."),
        ),
        (
            "word salad",
            Summary::from_text("battery the great superb is. price excellent the is screen."),
        ),
    ];
    for (label, summary) in candidates {
        let b = composite_reward(weights, cluster, &summary, &models)?;
        println!(
            "{label:12} -> total {:+.4} (polarity {:+.3}, content {:.3}, language {:.3})",
            b.total, b.r_polarity, b.r_content, b.r_language
        );
    }
    Ok(())
}
