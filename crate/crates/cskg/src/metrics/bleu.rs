//! Corpus-level BLEU-1..4 with clipped n-gram counts, brevity penalty over
//! effective reference lengths, and add-epsilon smoothing for zero match
//! counts. Orders with no n-grams anywhere in the corpus contribute a vacuous
//! precision of 1 so identity corpora of short strings still score 1.

use std::collections::HashMap;

use crate::metrics::TokRecord;

const EPS: f64 = 1e-9;
const MAX_N: usize = 4;

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], u64> {
    let mut counts: HashMap<&[String], u64> = HashMap::new();
    if tokens.len() >= n {
        for window in tokens.windows(n) {
            *counts.entry(window).or_insert(0) += 1;
        }
    }
    counts
}

pub(crate) fn corpus_bleu(records: &[TokRecord]) -> [f64; 4] {
    let mut matched = [0u64; MAX_N];
    let mut total = [0u64; MAX_N];
    let mut hyp_len = 0u64;
    let mut ref_len = 0u64;

    for record in records {
        hyp_len += record.hyp.len() as u64;
        // effective reference length: closest to the hypothesis, tie -> shorter
        if let Some(best) = record.refs.iter().min_by_key(|r| {
            (
                (r.len() as i64 - record.hyp.len() as i64).abs(),
                r.len(),
            )
        }) {
            ref_len += best.len() as u64;
        }
        for n in 1..=MAX_N {
            let hyp_counts = ngram_counts(&record.hyp, n);
            let mut max_ref: HashMap<&[String], u64> = HashMap::new();
            for reference in &record.refs {
                for (gram, count) in ngram_counts(reference, n) {
                    let slot = max_ref.entry(gram).or_insert(0);
                    *slot = (*slot).max(count);
                }
            }
            for (gram, count) in &hyp_counts {
                matched[n - 1] += (*count).min(max_ref.get(gram).copied().unwrap_or(0));
            }
            total[n - 1] += record.hyp.len().saturating_sub(n - 1) as u64;
        }
    }

    if hyp_len == 0 {
        return [0.0; 4];
    }
    let bp = if hyp_len > ref_len {
        1.0
    } else {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    };

    let precisions: Vec<f64> = (0..MAX_N)
        .map(|n| {
            if total[n] == 0 {
                1.0
            } else if matched[n] == 0 {
                EPS / total[n] as f64
            } else {
                matched[n] as f64 / total[n] as f64
            }
        })
        .collect();

    let mut out = [0.0; 4];
    for (k, slot) in out.iter_mut().enumerate() {
        let sum: f64 = precisions[..=k].iter().map(|p| p.ln()).sum();
        *slot = bp * (sum / (k + 1) as f64).exp();
    }
    out
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
    fn clipping_limits_repeats() {
        // "the the the" against "the cat": only one "the" credits
        let records = [record("the the the", &["the cat"])];
        let bleu = corpus_bleu(&records);
        // p1 = 1/3, bp = 1 (hyp longer)
        assert!((bleu[0] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn brevity_penalty_fires_for_short_hypotheses() {
        let records = [record("the cat", &["the cat sat on the mat"])];
        let bleu = corpus_bleu(&records);
        let bp = (1.0f64 - 6.0 / 2.0).exp();
        assert!((bleu[0] - bp).abs() < 1e-12);
    }

    /// Exhaustive n-gram enumeration oracle on short strings.
    #[test]
    fn ngram_counts_match_enumeration_oracle() {
        use rand::Rng;
        let mut rng = crate::seed::derive_rng(5, "bleu-oracle");
        let vocab = ["a", "b", "c", "d"];
        for _ in 0..500 {
            let len = rng.gen_range(0..=4);
            let tokens: Vec<String> = (0..len)
                .map(|_| vocab[rng.gen_range(0..vocab.len())].to_string())
                .collect();
            for n in 1..=4usize {
                let counts = ngram_counts(&tokens, n);
                // oracle: enumerate every start position directly
                let mut expected: HashMap<Vec<String>, u64> = HashMap::new();
                for start in 0..tokens.len().saturating_sub(n - 1) {
                    if start + n <= tokens.len() {
                        *expected.entry(tokens[start..start + n].to_vec()).or_insert(0) += 1;
                    }
                }
                assert_eq!(counts.len(), expected.len());
                for (gram, count) in expected {
                    assert_eq!(counts.get(gram.as_slice()), Some(&count));
                }
            }
        }
    }
}
