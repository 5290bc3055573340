//! Train the three reward models on synthetic data and print held-out quality.
//!
//! ```bash
//! cargo run --release --example train_reward_models
//! ```

use polcal::corpus::{generate_corpus, CorpusConfig};
use polcal::rewards::{
    composite_reward, train_fluency_model, train_polarity_model, train_similarity_model,
    RewardModels, RewardTrainConfig, RewardWeights,
};

fn main() -> polcal::Result<()> {
    let bundle = generate_corpus(&CorpusConfig::default(), 7)?;
    let cfg = RewardTrainConfig::default();

    let (polarity, pr) = train_polarity_model(&bundle.polarity_sentences, &cfg, 7)?;
    println!("polarity:   holdout accuracy {:.3}, f1 {:.3}", pr.accuracy, pr.f1);
    let (similarity, sr) = train_similarity_model(&bundle.similarity_pairs, &cfg, 7)?;
    println!("similarity: holdout pearson r {:.3}", sr.pearson_r);
    let (fluency, fr) = train_fluency_model(&bundle.acceptability_pairs, &cfg, 7)?;
    println!("fluency:    holdout accuracy {:.3}", fr.accuracy);

    let models = RewardModels {
        polarity,
        similarity,
        fluency,
    };
    let cluster = &bundle.clusters.test[0];
    let breakdown = composite_reward(
        RewardWeights::default(),
        cluster,
        &cluster.reference,
        &models,
    )?;
    println!("\nreference summary of {} scores:", cluster.id);
    println!("{}", serde_json::to_string_pretty(&breakdown).unwrap());
    Ok(())
}
