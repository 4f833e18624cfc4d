//! METEOR variant with exact and suffix-stem matching stages (no synonym
//! resource). Alignment is greedy and deterministic: each hypothesis token
//! takes the first unmatched reference token per stage. The fragmentation
//! penalty uses the chunk fraction (chunks-1)/(m-1) so a perfectly ordered
//! alignment carries no penalty and identity scores exactly 1.

use crate::metrics::TokRecord;
use crate::normalize::suffix_strip;

const ALPHA: f64 = 0.9;
const GAMMA: f64 = 0.5;
const BETA: f64 = 3.0;

fn align(hyp: &[String], reference: &[String]) -> (usize, usize) {
    let mut used = vec![false; reference.len()];
    let mut pairs: Vec<(usize, usize)> = Vec::new();

    // stage 1: exact surface match
    for (i, token) in hyp.iter().enumerate() {
        for (j, candidate) in reference.iter().enumerate() {
            if !used[j] && token == candidate {
                used[j] = true;
                pairs.push((i, j));
                break;
            }
        }
    }
    // stage 2: stem match over the leftovers
    let matched: std::collections::HashSet<usize> = pairs.iter().map(|&(i, _)| i).collect();
    let ref_stems: Vec<String> = reference.iter().map(|t| suffix_strip(t)).collect();
    for (i, token) in hyp.iter().enumerate() {
        if matched.contains(&i) {
            continue;
        }
        let stem = suffix_strip(token);
        for (j, candidate) in ref_stems.iter().enumerate() {
            if !used[j] && &stem == candidate {
                used[j] = true;
                pairs.push((i, j));
                break;
            }
        }
    }

    pairs.sort_unstable();
    let m = pairs.len();
    let mut chunks = 0usize;
    let mut prev: Option<(usize, usize)> = None;
    for (i, j) in pairs {
        if prev != Some((i.wrapping_sub(1), j.wrapping_sub(1))) {
            chunks += 1;
        }
        prev = Some((i, j));
    }
    (m, chunks)
}

pub(crate) fn record_meteor(hyp: &[String], refs: &[Vec<String>]) -> f64 {
    let mut best = 0.0f64;
    for reference in refs {
        if hyp.is_empty() || reference.is_empty() {
            continue;
        }
        let (m, chunks) = align(hyp, reference);
        if m == 0 {
            continue;
        }
        let p = m as f64 / hyp.len() as f64;
        let r = m as f64 / reference.len() as f64;
        let f_mean = p * r / (ALPHA * p + (1.0 - ALPHA) * r);
        let frag = if m > 1 {
            (chunks - 1) as f64 / (m - 1) as f64
        } else {
            0.0
        };
        let penalty = GAMMA * frag.powf(BETA);
        best = best.max(f_mean * (1.0 - penalty));
    }
    best
}

pub(crate) fn corpus_meteor(records: &[TokRecord]) -> f64 {
    let sum: f64 = records
        .iter()
        .map(|rec| record_meteor(&rec.hyp, &rec.refs))
        .sum();
    sum / records.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        crate::normalize::basic_tokens(s)
    }

    #[test]
    fn identity_scores_one() {
        let hyp = toks("get some rest");
        assert_eq!(record_meteor(&hyp, std::slice::from_ref(&hyp)), 1.0);
    }

    #[test]
    fn stem_stage_matches_inflections() {
        let exact = record_meteor(&toks("drink water"), &[toks("drink water")]);
        let stemmed = record_meteor(&toks("drink water"), &[toks("drinks water")]);
        assert_eq!(exact, 1.0);
        assert_eq!(stemmed, 1.0, "drinks should stem-match drink");
    }

    #[test]
    fn fragmentation_penalizes_scrambled_order() {
        let ordered = record_meteor(&toks("a b c d"), &[toks("a b c d")]);
        let scrambled = record_meteor(&toks("d c b a"), &[toks("a b c d")]);
        assert_eq!(ordered, 1.0);
        assert!(scrambled < ordered);
    }
}
