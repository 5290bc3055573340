use polcal::corpus::{generate_corpus, CorpusConfig};
use polcal::rewards::*;

fn main() {
    let bundle = generate_corpus(&CorpusConfig { train_clusters: 4, dev_clusters: 1, test_clusters: 1, ..CorpusConfig::default() }, 7).unwrap();
    for (label, cfg) in [
        ("default e24 h32 ep120", RewardTrainConfig::default()),
        ("small   e12 h12 ep30 ", RewardTrainConfig {
            epochs: 30,
            model: ClassifierConfig { embed_dim: 12, hidden_dim: 12, max_text_tokens: 256 },
            ..RewardTrainConfig::default()
        }),
        ("tiny    e10 h10 ep15 ", RewardTrainConfig {
            epochs: 15, weight_decay: 5e-2,
            model: ClassifierConfig { embed_dim: 10, hidden_dim: 10, max_text_tokens: 256 },
            ..RewardTrainConfig::default()
        }),
    ] {
        let (m, r) = train_polarity_model(&bundle.polarity_sentences, &cfg, 7).unwrap();
        let mut pos_scores = vec![];
        let mut neg_scores = vec![];
        for s in &bundle.polarity_sentences {
            let p = m.score_text(&s.text).unwrap();
            if s.label == 1 { pos_scores.push(p) } else { neg_scores.push(p) }
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let sd = |v: &[f64]| { let mm = mean(v); (v.iter().map(|x| (x-mm)*(x-mm)).sum::<f64>() / v.len() as f64).sqrt() };
        println!("{label}: f1 {:.3} | pos mean {:.3} sd {:.3} | neg mean {:.3} sd {:.3}",
            r.f1, mean(&pos_scores), sd(&pos_scores), mean(&neg_scores), sd(&neg_scores));
    }
}
