//! ROUGE-L: longest-common-subsequence F-measure with the recall-favoring
//! beta of 1.2, best reference per record, averaged over records.

use crate::metrics::TokRecord;

const BETA: f64 = 1.2;

pub(crate) fn lcs_len(a: &[String], b: &[String]) -> usize {
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
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

pub(crate) fn record_rouge_l(hyp: &[String], refs: &[Vec<String>]) -> f64 {
    let mut best = 0.0f64;
    for reference in refs {
        if hyp.is_empty() || reference.is_empty() {
            continue;
        }
        let lcs = lcs_len(hyp, reference);
        if lcs == 0 {
            continue;
        }
        let p = lcs as f64 / hyp.len() as f64;
        let r = lcs as f64 / reference.len() as f64;
        let f = (1.0 + BETA * BETA) * p * r / (r + BETA * BETA * p);
        best = best.max(f);
    }
    best
}

pub(crate) fn corpus_rouge_l(records: &[TokRecord]) -> f64 {
    let sum: f64 = records
        .iter()
        .map(|rec| record_rouge_l(&rec.hyp, &rec.refs))
        .sum();
    sum / records.len() as f64
}
