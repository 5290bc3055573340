//! Evaluation and analysis artifacts: Rouge-1/2/L/Lsum, polarity-distance
//! RMSE/MAE, the input/output polarity scatter, and the reward-ablation
//! harness.
//!
//! Rouge settings are fixed once for the whole repo: lowercase, word-level
//! tokenization from [`textproc`], no stemming, no stopword removal, F1
//! reported. Numbers are comparable within this repo only.

use crate::calibrate::{calibrate, RLConfig};
use crate::corpus::{OpinionCluster, Summary};
use crate::error::{Error, Result};
use crate::rewards::{polarity_of_input, polarity_of_summary, RewardModels, RewardWeights};
use crate::summarizer::SummarizerModel;
use crate::textproc::normalize_tokens;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::path::Path;

// ---------------------------------------------------------------------------
// Rouge
// ---------------------------------------------------------------------------

fn f1(matches: f64, candidate_total: f64, reference_total: f64) -> f64 {
    if candidate_total <= 0.0 || reference_total <= 0.0 {
        return 0.0;
    }
    let p = matches / candidate_total;
    let r = matches / reference_total;
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// N-gram overlap F1 with count clipping. 0 when either side has fewer than
/// `n` tokens; an empty candidate scores 0 rather than erroring.
pub fn rouge_n(candidate: &str, reference: &str, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::config("rouge_n: n must be >= 1"));
    }
    let cand = normalize_tokens(candidate);
    let refr = normalize_tokens(reference);
    Ok(rouge_n_tokens(&cand, &refr, n))
}

fn rouge_n_tokens<'a>(cand: &'a [String], refr: &'a [String], n: usize) -> f64 {
    if cand.len() < n || refr.len() < n {
        return 0.0;
    }
    fn grams<'t>(tokens: &'t [String], n: usize) -> HashMap<&'t [String], usize> {
        let mut counts = HashMap::new();
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
        counts
    }
    let cg = grams(cand, n);
    let rg = grams(refr, n);
    let mut matches = 0usize;
    for (gram, count) in &cg {
        if let Some(rc) = rg.get(gram) {
            matches += (*count).min(*rc);
        }
    }
    f1(
        matches as f64,
        (cand.len() - n + 1) as f64,
        (refr.len() - n + 1) as f64,
    )
}

/// Length of the longest common subsequence, two-row dynamic program.
fn lcs_len(a: &[String], b: &[String]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                prev[j + 1].max(cur[j])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Sentence-level Rouge-L: LCS-based F1 over whole token sequences.
pub fn rouge_l(candidate: &str, reference: &str) -> Result<f64> {
    let cand = normalize_tokens(candidate);
    let refr = normalize_tokens(reference);
    Ok(f1(
        lcs_len(&cand, &refr) as f64,
        cand.len() as f64,
        refr.len() as f64,
    ))
}

/// Reference token positions matched by the canonical LCS alignment.
///
/// Backtrack rule, fixed for reproducibility: take the match whenever tokens
/// are equal; otherwise step toward the reference when its subproblem is at
/// least as long.
fn lcs_match_positions(reference: &[String], candidate: &[String]) -> Vec<usize> {
    let (m, n) = (reference.len(), candidate.len());
    let mut dp = vec![vec![0usize; n + 1]; m + 1];
    for i in 1..=m {
        for j in 1..=n {
            dp[i][j] = if reference[i - 1] == candidate[j - 1] {
                dp[i - 1][j - 1] + 1
            } else {
                dp[i - 1][j].max(dp[i][j - 1])
            };
        }
    }
    let mut positions = Vec::new();
    let (mut i, mut j) = (m, n);
    while i > 0 && j > 0 {
        if reference[i - 1] == candidate[j - 1] {
            positions.push(i - 1);
            i -= 1;
            j -= 1;
        } else if dp[i - 1][j] >= dp[i][j - 1] {
            i -= 1;
        } else {
            j -= 1;
        }
    }
    positions
}

/// Summary-level Rouge-Lsum: per-reference-sentence union LCS.
///
/// For each reference sentence the matched reference positions are unioned
/// over all candidate sentences; hit counts aggregate over the whole summary.
pub fn rouge_lsum(candidate_sentences: &[String], reference_sentences: &[String]) -> Result<f64> {
    let cand: Vec<Vec<String>> = candidate_sentences.iter().map(|s| normalize_tokens(s)).collect();
    let refr: Vec<Vec<String>> = reference_sentences.iter().map(|s| normalize_tokens(s)).collect();
    let cand_total: usize = cand.iter().map(|s| s.len()).sum();
    let ref_total: usize = refr.iter().map(|s| s.len()).sum();
    let mut hits = 0usize;
    for ref_sent in &refr {
        let mut matched = vec![false; ref_sent.len()];
        for cand_sent in &cand {
            for pos in lcs_match_positions(ref_sent, cand_sent) {
                matched[pos] = true;
            }
        }
        hits += matched.iter().filter(|&&m| m).count();
    }
    Ok(f1(hits as f64, cand_total as f64, ref_total as f64))
}

// ---------------------------------------------------------------------------
// Polarity-distance metrics and scatter
// ---------------------------------------------------------------------------

/// Per-cluster (input polarity, output polarity) points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub cluster_id: String,
    pub input_polarity: f64,
    pub output_polarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasScatter {
    pub model_name: String,
    pub points: Vec<ScatterPoint>,
}

/// Score one summary per cluster; the backbone of both the metrics and the
/// scatter, so both always agree.
pub fn polarity_points(
    models: &RewardModels,
    clusters: &[OpinionCluster],
    summaries: &[Summary],
    model_name: &str,
) -> Result<BiasScatter> {
    if clusters.is_empty() {
        return Err(Error::data("polarity metrics need at least one cluster"));
    }
    if clusters.len() != summaries.len() {
        return Err(Error::data(format!(
            "clusters ({}) and summaries ({}) must align",
            clusters.len(),
            summaries.len()
        )));
    }
    let mut points = Vec::with_capacity(clusters.len());
    for (cluster, summary) in clusters.iter().zip(summaries) {
        let input = polarity_of_input(&models.polarity, cluster)?;
        let output = polarity_of_summary(&models.polarity, summary, cluster.mode)?;
        points.push(ScatterPoint {
            cluster_id: cluster.id.clone(),
            input_polarity: input,
            output_polarity: output,
        });
    }
    Ok(BiasScatter {
        model_name: model_name.to_string(),
        points,
    })
}

/// (rmse, mae) over residuals `output - input`.
pub fn polarity_distance_metrics(
    models: &RewardModels,
    clusters: &[OpinionCluster],
    summaries: &[Summary],
) -> Result<(f64, f64)> {
    let scatter = polarity_points(models, clusters, summaries, "metrics")?;
    Ok(metrics_from_points(&scatter.points))
}

pub fn metrics_from_points(points: &[ScatterPoint]) -> (f64, f64) {
    let residuals: Vec<f64> = points
        .iter()
        .map(|p| p.output_polarity - p.input_polarity)
        .collect();
    metrics_from_residuals(&residuals)
}

pub fn metrics_from_residuals(residuals: &[f64]) -> (f64, f64) {
    let n = residuals.len() as f64;
    let mse = residuals.iter().map(|r| r * r).sum::<f64>() / n;
    let mae = residuals.iter().map(|r| r.abs()).sum::<f64>() / n;
    (mse.sqrt(), mae)
}

impl BiasScatter {
    /// `scatter_points.csv`: cluster_id, input_polarity, output_polarity.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("cluster_id,input_polarity,output_polarity\n");
        for p in &self.points {
            out.push_str(&format!(
                "{},{:.6},{:.6}\n",
                p.cluster_id, p.input_polarity, p.output_polarity
            ));
        }
        std::fs::write(path, out)?;
        Ok(())
    }

    /// Fixed 600x600 SVG: unit axes, y=x guide, one marker per cluster.
    pub fn write_svg(&self, path: &Path) -> Result<()> {
        const SIZE: f64 = 600.0;
        const MARGIN: f64 = 60.0;
        let span = SIZE - 2.0 * MARGIN;
        let sx = |v: f64| MARGIN + v * span;
        let sy = |v: f64| SIZE - MARGIN - v * span;

        let mut svg = String::new();
        svg.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"600\" height=\"600\" viewBox=\"0 0 600 600\">\n"
        ));
        svg.push_str("<rect width=\"600\" height=\"600\" fill=\"white\"/>\n");
        // Axes.
        svg.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"black\" stroke-width=\"1\"/>\n",
            sx(0.0), sy(0.0), sx(1.0), sy(0.0)
        ));
        svg.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"black\" stroke-width=\"1\"/>\n",
            sx(0.0), sy(0.0), sx(0.0), sy(1.0)
        ));
        for tick in [0.0, 0.25, 0.5, 0.75, 1.0] {
            svg.push_str(&format!(
                "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\" text-anchor=\"middle\">{:.2}</text>\n",
                sx(tick),
                SIZE - MARGIN + 20.0,
                tick
            ));
            svg.push_str(&format!(
                "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\" text-anchor=\"end\">{:.2}</text>\n",
                MARGIN - 8.0,
                sy(tick) + 4.0,
                tick
            ));
        }
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"14\" text-anchor=\"middle\">input polarity</text>\n",
            SIZE / 2.0,
            SIZE - 12.0
        ));
        svg.push_str(&format!(
            "<text x=\"16\" y=\"{:.1}\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.1})\">output polarity</text>\n",
            SIZE / 2.0,
            SIZE / 2.0
        ));
        // y = x guide.
        svg.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"green\" stroke-width=\"1.5\" stroke-dasharray=\"6 4\"/>\n",
            sx(0.0), sy(0.0), sx(1.0), sy(1.0)
        ));
        for p in &self.points {
            svg.push_str(&format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"steelblue\" fill-opacity=\"0.65\"/>\n",
                sx(p.input_polarity),
                sy(p.output_polarity)
            ));
        }
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"30\" font-size=\"15\" text-anchor=\"middle\">{}</text>\n",
            SIZE / 2.0,
            self.model_name
        ));
        svg.push_str("</svg>\n");
        std::fs::write(path, svg)?;
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

/// One evaluation row: polarity distance plus the four Rouge F1 scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: String,
    pub rmse: f64,
    pub mae: f64,
    pub rouge1: f64,
    pub rouge2: f64,
    pub rouge_l: f64,
    pub rouge_lsum: f64,
}

impl EvalReport {
    pub fn new(
        model: impl Into<String>,
        rmse: f64,
        mae: f64,
        rouge1: f64,
        rouge2: f64,
        rouge_l: f64,
        rouge_lsum: f64,
    ) -> Result<Self> {
        if rmse < 0.0 || mae < 0.0 {
            return Err(Error::data("rmse and mae must be non-negative"));
        }
        // Power-mean inequality over one residual set, with fp slack.
        if rmse + 1e-12 < mae {
            return Err(Error::data(format!(
                "rmse {rmse} < mae {mae} is impossible for one residual set"
            )));
        }
        for r in [rouge1, rouge2, rouge_l, rouge_lsum] {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::data(format!("rouge value {r} outside [0, 1]")));
            }
        }
        Ok(EvalReport {
            model: model.into(),
            rmse,
            mae,
            rouge1,
            rouge2,
            rouge_l,
            rouge_lsum,
        })
    }
}

/// Greedy-decode a model over clusters and score it against the references.
///
/// Clusters whose decode comes out empty score 0 on Rouge and are excluded
/// from the polarity residuals; it is an error if every decode is empty.
pub fn evaluate_model(
    name: &str,
    model: &SummarizerModel,
    reward_models: &RewardModels,
    clusters: &[OpinionCluster],
) -> Result<(EvalReport, BiasScatter)> {
    if clusters.is_empty() {
        return Err(Error::data("evaluate_model: empty cluster set"));
    }
    let mut rouge1 = 0.0;
    let mut rouge2 = 0.0;
    let mut rl = 0.0;
    let mut rlsum = 0.0;
    let mut scored_clusters = Vec::new();
    let mut scored_summaries = Vec::new();
    for cluster in clusters {
        let ids = model.cluster_input_ids(cluster);
        let decoded = model.greedy_decode(&ids)?;
        let summary = model.ids_to_summary(&decoded)?;
        let cand_text = summary.text();
        let ref_text = cluster.reference.text();
        rouge1 += rouge_n(&cand_text, &ref_text, 1)?;
        rouge2 += rouge_n(&cand_text, &ref_text, 2)?;
        rl += rouge_l(&cand_text, &ref_text)?;
        rlsum += rouge_lsum(&summary.sentences, &cluster.reference.sentences)?;
        if !summary.sentences.is_empty() {
            scored_clusters.push(cluster.clone());
            scored_summaries.push(summary);
        }
    }
    if scored_clusters.is_empty() {
        return Err(Error::data(
            "evaluate_model: every greedy decode came out empty",
        ));
    }
    let scatter = polarity_points(reward_models, &scored_clusters, &scored_summaries, name)?;
    let (rmse, mae) = metrics_from_points(&scatter.points);
    let n = clusters.len() as f64;
    let report = EvalReport::new(name, rmse, mae, rouge1 / n, rouge2 / n, rl / n, rlsum / n)?;
    Ok((report, scatter))
}

/// `report.csv` columns: model, rmse, mae, rouge1, rouge2, rougeL, rougeLsum.
pub fn write_report_csv(reports: &[EvalReport], path: &Path) -> Result<()> {
    let mut out = String::from("model,rmse,mae,rouge1,rouge2,rougeL,rougeLsum\n");
    for r in reports {
        out.push_str(&format!(
            "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
            r.model, r.rmse, r.mae, r.rouge1, r.rouge2, r.rouge_l, r.rouge_lsum
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Ablation harness
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct AblationTable {
    pub rows: Vec<EvalReport>,
}

/// Calibrate once per weight configuration (shared seed) and evaluate every
/// resulting model plus the base row.
pub fn ablation_run(
    base: &SummarizerModel,
    train: &[OpinionCluster],
    probe: &[OpinionCluster],
    test: &[OpinionCluster],
    reward_models: &RewardModels,
    configurations: &[(String, RewardWeights)],
    rl_config: &RLConfig,
) -> Result<AblationTable> {
    if configurations.is_empty() {
        return Err(Error::config("ablation_run: no weight configurations"));
    }
    let mut rows = Vec::with_capacity(configurations.len() + 1);
    let (base_report, _) = evaluate_model("base", base, reward_models, test)?;
    rows.push(base_report);
    for (name, weights) in configurations {
        let (model, _) = calibrate(base, train, probe, reward_models, *weights, rl_config)?;
        let (report, _) = evaluate_model(name, &model, reward_models, test)?;
        rows.push(report);
    }
    Ok(AblationTable { rows })
}

/// The three reward configurations in their conventional order.
pub fn standard_ablation_configurations() -> Vec<(String, RewardWeights)> {
    let full = RewardWeights::default();
    vec![
        (
            "polarity".to_string(),
            RewardWeights {
                alpha: full.alpha,
                beta: 0.0,
                gamma: 0.0,
            },
        ),
        (
            "polarity+content".to_string(),
            RewardWeights {
                alpha: full.alpha,
                beta: full.beta,
                gamma: 0.0,
            },
        ),
        ("polarity+content+language".to_string(), full),
    ]
}

// ---------------------------------------------------------------------------
// Paired t-test utility
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TTestResult {
    pub t_statistic: f64,
    pub degrees_of_freedom: usize,
    pub p_two_sided: f64,
}

/// Paired two-sided t-test on aligned samples, e.g. per-cluster polarity
/// residual magnitudes of two models.
pub fn paired_t_test(xs: &[f64], ys: &[f64]) -> Result<TTestResult> {
    if xs.len() != ys.len() {
        return Err(Error::data("paired_t_test: unequal sample lengths"));
    }
    if xs.len() < 2 {
        return Err(Error::data("paired_t_test: need at least 2 pairs"));
    }
    let n = xs.len() as f64;
    let diffs: Vec<f64> = xs.iter().zip(ys).map(|(a, b)| a - b).collect();
    let mean = diffs.iter().sum::<f64>() / n;
    let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (n - 1.0);
    let df = xs.len() - 1;
    if var == 0.0 {
        return Ok(TTestResult {
            t_statistic: if mean == 0.0 { 0.0 } else { f64::INFINITY },
            degrees_of_freedom: df,
            p_two_sided: if mean == 0.0 { 1.0 } else { 0.0 },
        });
    }
    let t = mean / (var / n).sqrt();
    let dff = df as f64;
    let p = incomplete_beta(dff / 2.0, 0.5, dff / (dff + t * t));
    Ok(TTestResult {
        t_statistic: t,
        degrees_of_freedom: df,
        p_two_sided: p.clamp(0.0, 1.0),
    })
}

fn ln_gamma(x: f64) -> f64 {
    // Lanczos approximation.
    const COEFFS: [f64; 6] = [
        76.18009172947146,
        -86.50532032941677,
        24.01409824083091,
        -1.231739572450155,
        0.1208650973866179e-2,
        -0.5395239384953e-5,
    ];
    let mut y = x;
    let tmp = x + 5.5;
    let tmp = tmp - (x + 0.5) * tmp.ln();
    let mut ser = 1.000000000190015;
    for c in COEFFS {
        y += 1.0;
        ser += c / y;
    }
    -tmp + (2.5066282746310005 * ser / x).ln()
}

/// Regularized incomplete beta function I_x(a, b) via continued fraction.
fn incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    }
}

fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 200;
    const EPS: f64 = 3e-14;
    const FPMIN: f64 = 1e-300;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < FPMIN {
        d = FPMIN;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}
