use polcal::corpus::{generate_corpus, CorpusConfig};
use polcal::rewards::*;
use std::time::Instant;

fn main() {
    let bundle = generate_corpus(&CorpusConfig::default(), 7).unwrap();
    let cfg = RewardTrainConfig::default();
    let t0 = Instant::now();
    let (_p, pr) = train_polarity_model(&bundle.polarity_sentences, &cfg, 11).unwrap();
    let (_s, sr) = train_similarity_model(&bundle.similarity_pairs, &cfg, 11).unwrap();
    let (_f, fr) = train_fluency_model(&bundle.acceptability_pairs, &cfg, 11).unwrap();
    println!("polarity f1 {:.4} | similarity pearson {:.4} | fluency acc {:.4} | total {:.1?}",
        pr.f1, sr.pearson_r, fr.accuracy, t0.elapsed());
}
