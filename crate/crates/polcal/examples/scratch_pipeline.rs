use polcal::calibrate::{calibrate, RLConfig};
use polcal::corpus::{generate_corpus, CorpusConfig};
use polcal::evalreport::*;
use polcal::rewards::*;
use polcal::summarizer::*;
use polcal::textproc::build_vocab;
use std::io::Write;

fn log(msg: &str) {
    let mut f = std::fs::OpenOptions::new().create(true).append(true).open("/tmp/exp.log").unwrap();
    writeln!(f, "{msg}").unwrap();
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let master_seed: u64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(7);
    let steps: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(500);
    let lr: f64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(4e-4);

    let corpus_config = CorpusConfig {
        train_clusters: 96, dev_clusters: 24, test_clusters: 48,
        ..CorpusConfig::default()
    };
    let bundle = generate_corpus(&corpus_config, master_seed).unwrap();
    let rt = RewardTrainConfig::default();
    let (polarity, _) = train_polarity_model(&bundle.polarity_sentences, &rt, master_seed).unwrap();
    let (similarity, _) = train_similarity_model(&bundle.similarity_pairs, &rt, master_seed).unwrap();
    let (fluency, _) = train_fluency_model(&bundle.acceptability_pairs, &rt, master_seed).unwrap();
    let models = RewardModels { polarity, similarity, fluency };
    let vocab = build_vocab(&bundle.all_cluster_texts(), 1).unwrap();
    let sum_config = SummarizerConfig {
        embed_dim: 32, hidden_dim: 64, attention_dim: 32,
        max_input_len: 220, max_summary_len: 28,
    };
    let mut base = SummarizerModel::new(vocab.clone(), sum_config, master_seed).unwrap();
    let sup = SupervisedConfig {
        epochs: 20, batch_size: 8, learning_rate: 3e-3,
        weight_decay: 1e-2, warmup_fraction: 0.05, seed: master_seed,
    };
    train_supervised(&mut base, &bundle.clusters.train, &bundle.clusters.dev, &sup).unwrap();
    let (br, bs) = evaluate_model("base", &base, &models, &bundle.clusters.test).unwrap();
    let n = bs.points.len() as f64;
    let amp: f64 = bs.points.iter().map(|p| p.output_polarity - p.input_polarity).sum::<f64>() / n;
    log(&format!("== SEED {master_seed} steps {steps} lr {lr:.0e}: base rmse {:.4} r1 {:.4} amp {:+.4}", br.rmse, br.rouge1, amp));

    let rl = RLConfig {
        learning_rate: lr, batch_size: 8, samples_per_input: 4,
        max_steps: steps, probe_interval: 5, seed: master_seed,
        ..RLConfig::default()
    };
    let mut rows = vec![];
    for (name, w) in [
        ("pol-only", RewardWeights { alpha: 1.0, beta: 0.0, gamma: 0.0 }),
        ("pol+cont", RewardWeights { alpha: 1.0, beta: 0.5, gamma: 0.0 }),
        ("full", RewardWeights::default()),
    ] {
        let t = std::time::Instant::now();
        let (cal, logs) = calibrate(&base, &bundle.clusters.train, &bundle.clusters.dev, &models, w, &rl).unwrap();
        let best_probe = logs.iter().filter_map(|l| l.probe_rmse).fold(f64::INFINITY, f64::min);
        let (rep, _) = evaluate_model(name, &cal, &models, &bundle.clusters.test).unwrap();
        log(&format!("   {name:8}: rmse {:.4} ({:+.1}%) r1 {:.4} ({:+.1}%) best-probe {:.4} [{:.0?}]",
            rep.rmse, 100.0 * (rep.rmse - br.rmse) / br.rmse,
            rep.rouge1, 100.0 * (rep.rouge1 - br.rouge1) / br.rouge1, best_probe, t.elapsed()));
        rows.push((name, rep.rmse, rep.rouge1));
    }
    let pol = rows.iter().find(|r| r.0 == "pol-only").unwrap();
    let full = rows.iter().find(|r| r.0 == "full").unwrap();
    let crit7 = full.1 <= 0.9 * br.rmse && full.2 >= 0.85 * br.rouge1;
    let crit8 = rows.iter().all(|r| r.1 >= pol.1) && full.2 > pol.2;
    log(&format!("   SEED {master_seed}: CRIT6 {} CRIT7 {crit7} CRIT8 {crit8}", amp >= 0.05));
}
