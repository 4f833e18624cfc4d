//! CIDEr-D: clipped TF-IDF n-gram consensus (n = 1..4) with a gaussian
//! length penalty, averaged over n and scaled by 10. Document frequencies
//! come from the reference sets of the corpus being scored.

use std::collections::{HashMap, HashSet};

use crate::metrics::TokRecord;

const MAX_N: usize = 4;
const SIGMA: f64 = 6.0;
const SCALE: f64 = 10.0;

type Gram = Vec<String>;

fn ngrams(tokens: &[String], n: usize) -> impl Iterator<Item = Gram> + '_ {
    tokens.windows(n).map(|w| w.to_vec())
}

struct TfIdfVec {
    // per n: gram -> tf*idf weight
    weights: Vec<HashMap<Gram, f64>>,
    norms: Vec<f64>,
    len: usize,
}

fn build_vec(tokens: &[String], df: &HashMap<Gram, f64>, log_n: f64) -> TfIdfVec {
    let mut weights = Vec::with_capacity(MAX_N);
    let mut norms = Vec::with_capacity(MAX_N);
    for n in 1..=MAX_N {
        let mut counts: HashMap<Gram, f64> = HashMap::new();
        for gram in ngrams(tokens, n) {
            *counts.entry(gram).or_insert(0.0) += 1.0;
        }
        for (gram, value) in counts.iter_mut() {
            let idf = log_n - df.get(gram).copied().unwrap_or(0.0).max(1.0).ln();
            *value *= idf;
        }
        let norm = counts.values().map(|v| v * v).sum::<f64>().sqrt();
        weights.push(counts);
        norms.push(norm);
    }
    TfIdfVec {
        weights,
        norms,
        len: tokens.len(),
    }
}

pub(crate) fn corpus_cider_d(records: &[TokRecord]) -> f64 {
    let big_n = records.len();
    // df: number of records whose reference set contains the n-gram
    let mut df: HashMap<Gram, f64> = HashMap::new();
    for record in records {
        let mut seen: HashSet<Gram> = HashSet::new();
        for reference in &record.refs {
            for n in 1..=MAX_N {
                seen.extend(ngrams(reference, n));
            }
        }
        for gram in seen {
            *df.entry(gram).or_insert(0.0) += 1.0;
        }
    }
    let log_n = (big_n as f64).ln();

    let mut total = 0.0f64;
    for record in records {
        let hyp = build_vec(&record.hyp, &df, log_n);
        let mut per_n = [0.0f64; MAX_N];
        for reference in &record.refs {
            let ref_vec = build_vec(reference, &df, log_n);
            let delta = hyp.len as f64 - ref_vec.len as f64;
            let length_penalty = (-(delta * delta) / (2.0 * SIGMA * SIGMA)).exp();
            for (n, slot) in per_n.iter_mut().enumerate() {
                let mut value = 0.0f64;
                for (gram, &hw) in &hyp.weights[n] {
                    if let Some(&rw) = ref_vec.weights[n].get(gram) {
                        value += hw.min(rw) * rw;
                    }
                }
                let norm = hyp.norms[n] * ref_vec.norms[n];
                if norm != 0.0 {
                    value /= norm;
                } else {
                    value = 0.0;
                }
                *slot += value * length_penalty;
            }
        }
        let record_score: f64 =
            per_n.iter().sum::<f64>() / MAX_N as f64 / record.refs.len() as f64 * SCALE;
        total += record_score;
    }
    total / big_n as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        crate::normalize::basic_tokens(s)
    }

    fn record(hyp: &str, refs: &[&str]) -> TokRecord {
        TokRecord {
            hyp: toks(hyp),
            refs: refs.iter().map(|r| toks(r)).collect(),
        }
    }

    #[test]
    fn disjoint_scores_zero() {
        let records = [
            record("purple elephant", &["have energy"]),
            record("quantum", &["drink water"]),
        ];
        assert_eq!(corpus_cider_d(&records), 0.0);
    }

    #[test]
    fn rarer_matches_score_higher() {
        // both hypotheses match their reference exactly, but "velvet llama"
        // n-grams are rarer (df 1) than "water" (df 3)
        let records = [
            record("water", &["water"]),
            record("water", &["water"]),
            record("water", &["water"]),
            record("velvet llama", &["velvet llama"]),
        ];
        let all = corpus_cider_d(&records);
        assert!(all > 0.0);

        let common_only = [
            record("water", &["water"]),
            record("water", &["water"]),
            record("water", &["water"]),
        ];
        // "water" appears in every record's refs: idf = ln(3) - ln(3) = 0
        assert_eq!(corpus_cider_d(&common_only), 0.0);
    }

    #[test]
    fn length_penalty_dampens_mismatched_lengths() {
        let close = [record("a b c", &["a b c d"]), record("x", &["y"])];
        let far = [record("a b c", &["a b c d e f g h i j"]), record("x", &["y"])];
        assert!(corpus_cider_d(&close) > corpus_cider_d(&far));
    }
}
