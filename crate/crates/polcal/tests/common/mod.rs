//! Brute-force oracles, written independently of the library implementations
//! they check: naive list-scanning n-gram counts and full-table quadratic LCS.

/// Lowercase word/punctuation tokens; mirrors the library's normalization
/// rule but written directly.
pub fn naive_tokens(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for ch in text.to_lowercase().chars() {
        if ch.is_alphanumeric() {
            current.push(ch);
        } else {
            if !current.is_empty() {
                tokens.push(current.clone());
                current.clear();
            }
            if !ch.is_whitespace() {
                tokens.push(ch.to_string());
            }
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

fn naive_f1(matches: f64, cand_total: f64, ref_total: f64) -> f64 {
    if cand_total <= 0.0 || ref_total <= 0.0 {
        return 0.0;
    }
    let p = matches / cand_total;
    let r = matches / ref_total;
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Clipped n-gram overlap F1 by scanning gram lists, no hashing.
pub fn brute_rouge_n(candidate: &str, reference: &str, n: usize) -> f64 {
    let cand = naive_tokens(candidate);
    let refr = naive_tokens(reference);
    if cand.len() < n || refr.len() < n {
        return 0.0;
    }
    let cand_grams: Vec<&[String]> = cand.windows(n).collect();
    let ref_grams: Vec<&[String]> = refr.windows(n).collect();
    let mut used = vec![false; ref_grams.len()];
    let mut matches = 0usize;
    for gram in &cand_grams {
        for (j, rgram) in ref_grams.iter().enumerate() {
            if !used[j] && gram == rgram {
                used[j] = true;
                matches += 1;
                break;
            }
        }
    }
    naive_f1(matches as f64, cand_grams.len() as f64, ref_grams.len() as f64)
}

/// Full-table LCS length, no row reuse.
fn brute_lcs_table(a: &[String], b: &[String]) -> Vec<Vec<usize>> {
    let mut dp = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            dp[i][j] = if a[i - 1] == b[j - 1] {
                dp[i - 1][j - 1] + 1
            } else {
                dp[i - 1][j].max(dp[i][j - 1])
            };
        }
    }
    dp
}

pub fn brute_rouge_l(candidate: &str, reference: &str) -> f64 {
    let cand = naive_tokens(candidate);
    let refr = naive_tokens(reference);
    if cand.is_empty() || refr.is_empty() {
        return 0.0;
    }
    let lcs = brute_lcs_table(&cand, &refr)[cand.len()][refr.len()];
    naive_f1(lcs as f64, cand.len() as f64, refr.len() as f64)
}

/// Reference positions matched by the canonical LCS backtrack: take matches
/// on equality, otherwise prefer shrinking the reference side on ties.
fn brute_lcs_ref_positions(reference: &[String], candidate: &[String]) -> Vec<usize> {
    let dp = brute_lcs_table(reference, candidate);
    let mut out = Vec::new();
    let (mut i, mut j) = (reference.len(), candidate.len());
    while i > 0 && j > 0 {
        if reference[i - 1] == candidate[j - 1] {
            out.push(i - 1);
            i -= 1;
            j -= 1;
        } else if dp[i - 1][j] >= dp[i][j - 1] {
            i -= 1;
        } else {
            j -= 1;
        }
    }
    out
}

/// Summary-level union LCS F1 over sentence lists.
pub fn brute_rouge_lsum(candidate_sentences: &[String], reference_sentences: &[String]) -> f64 {
    let cand: Vec<Vec<String>> = candidate_sentences.iter().map(|s| naive_tokens(s)).collect();
    let refr: Vec<Vec<String>> = reference_sentences.iter().map(|s| naive_tokens(s)).collect();
    let cand_total: usize = cand.iter().map(|s| s.len()).sum();
    let ref_total: usize = refr.iter().map(|s| s.len()).sum();
    let mut hits = 0usize;
    for ref_sent in &refr {
        let mut matched = vec![false; ref_sent.len()];
        for cand_sent in &cand {
            for pos in brute_lcs_ref_positions(ref_sent, cand_sent) {
                matched[pos] = true;
            }
        }
        hits += matched.iter().filter(|&&m| m).count();
    }
    naive_f1(hits as f64, cand_total as f64, ref_total as f64)
}
