//! Measured behavior of trained reward models on constructed probes: scores
//! that are high or low by design of the synthetic corpus.

use polcal::corpus::{generate_corpus, CorpusConfig, MixtureSpec, Summary};
use polcal::rewards::{
    polarity_of_input, reward_content, reward_language, train_fluency_model,
    train_polarity_model, train_similarity_model, RewardTrainConfig,
};
use std::sync::OnceLock;

struct Trained {
    bundle: polcal::corpus::CorpusBundle,
    polarity: polcal::rewards::PolarityModel,
    similarity: polcal::rewards::SimilarityModel,
    fluency: polcal::rewards::FluencyModel,
}

static TRAINED: OnceLock<Trained> = OnceLock::new();

fn trained() -> &'static Trained {
    TRAINED.get_or_init(|| {
        let config = CorpusConfig {
            train_clusters: 8,
            dev_clusters: 2,
            test_clusters: 4,
            mixture: MixtureSpec::Uniform { lo: 0.05, hi: 0.95 },
            ..CorpusConfig::default()
        };
        let bundle = generate_corpus(&config, 41).unwrap();
        let cfg = RewardTrainConfig::default();
        let (polarity, report) = train_polarity_model(&bundle.polarity_sentences, &cfg, 41).unwrap();
        assert!(report.f1 >= 0.95, "fixture polarity f1 {}", report.f1);
        let (similarity, report) = train_similarity_model(&bundle.similarity_pairs, &cfg, 41).unwrap();
        assert!(report.pearson_r >= 0.8, "fixture similarity r {}", report.pearson_r);
        let (fluency, report) = train_fluency_model(&bundle.acceptability_pairs, &cfg, 41).unwrap();
        assert!(report.accuracy >= 0.9, "fixture fluency acc {}", report.accuracy);
        Trained {
            bundle,
            polarity,
            similarity,
            fluency,
        }
    })
}

#[test]
fn all_positive_cluster_scores_high_input_polarity() {
    let t = trained();
    let config = CorpusConfig {
        train_clusters: 4,
        dev_clusters: 1,
        test_clusters: 1,
        mixture: MixtureSpec::Fixed { value: 1.0 },
        ..CorpusConfig::default()
    };
    let all_positive = generate_corpus(&config, 43).unwrap();
    for cluster in &all_positive.clusters.train {
        let score = polarity_of_input(&t.polarity, cluster).unwrap();
        assert!(score >= 0.9, "cluster {}: input polarity {score}", cluster.id);
    }
}

#[test]
fn content_reward_high_for_copy_low_for_unrelated() {
    let t = trained();
    let cluster = &t.bundle.clusters.test[0];
    // Summary identical to the input text.
    let copy = Summary::from_text(&cluster.input_text());
    let score = reward_content(&t.similarity, cluster, &copy).unwrap();
    assert!(score >= 0.9, "copy similarity {score}");

    // A summary about entirely different aspects.
    let bank = polcal::corpus::TemplateBank::default();
    let cluster_text = cluster.input_text();
    let unused: Vec<&String> = bank
        .aspects
        .iter()
        .filter(|a| !cluster_text.contains(a.as_str()))
        .collect();
    assert!(unused.len() >= 3, "need unrelated aspects for the probe");
    let unrelated_text = format!(
        "the {} is great. the {} is poor. the {} is solid.",
        unused[0], unused[1], unused[2]
    );
    let unrelated = Summary::from_text(&unrelated_text);
    let score = reward_content(&t.similarity, cluster, &unrelated).unwrap();
    assert!(score <= 0.3, "unrelated similarity {score}");
}

#[test]
fn language_reward_separates_fluent_from_shuffled() {
    let t = trained();
    let fluent = Summary::from_text("the battery is great. everyone praised the screen.");
    let score = reward_language(&t.fluency, &fluent).unwrap();
    assert!(score >= 0.9, "fluent score {score}");

    let shuffled = Summary::from_text("battery great the is the. praised screen everyone the");
    let score = reward_language(&t.fluency, &shuffled).unwrap();
    assert!(score <= 0.3, "shuffled score {score}");
}

#[test]
fn single_sentence_language_reward_equals_sentence_score() {
    let t = trained();
    let sentence = "the sound is superb.";
    let summary = Summary::from_text(sentence);
    let via_reward = reward_language(&t.fluency, &summary).unwrap();
    let direct = t.fluency.score_sentence(sentence).unwrap();
    assert_eq!(via_reward, direct);
}
