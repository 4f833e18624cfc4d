//! Automated text-generation metrics over (prefix, hypothesis, references)
//! records: corpus BLEU-1..4, ROUGE-L, METEOR (exact + stem stages, no
//! synonym resource), and CIDEr-D. Scoring lowercases and
//! punctuation/whitespace-tokenizes both sides with the same tokenizer the
//! normalization pipeline uses.

mod bleu;
mod cider;
mod meteor;
mod rouge;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::kg::RelationId;
use crate::normalize::basic_tokens;
use crate::{Error, Result};

/// One scored generation: a (head, relation) prefix, the generated tail, and
/// the reference tails.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub head: String,
    pub relation: RelationId,
    pub hypothesis: String,
    pub references: Vec<String>,
}

impl GenerationRecord {
    /// References must be non-empty; the hypothesis may be empty (it scores
    /// near zero, it is not skipped).
    pub fn new(
        head: impl Into<String>,
        relation: RelationId,
        hypothesis: impl Into<String>,
        references: Vec<String>,
    ) -> Result<Self> {
        if references.is_empty() {
            return Err(Error::invalid("generation record", "empty reference list"));
        }
        Ok(GenerationRecord {
            head: head.into(),
            relation,
            hypothesis: hypothesis.into(),
            references,
        })
    }
}

/// Metric constants recorded in every report.
pub const METRIC_PARAMS: &str = "bleu=corpus,eps=1e-9;rouge-l=best-ref-f,beta=1.2;\
meteor=exact+stem,alpha=0.9,gamma=0.5,beta=3;cider=cider-d,n=1..4,sigma=6,scale=10";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub bleu: [f64; 4],
    pub rouge_l: f64,
    pub meteor: f64,
    pub cider: f64,
    pub n: usize,
    /// Order-invariant digest of the reference corpus that fed CIDEr's
    /// document frequencies.
    pub corpus_digest: String,
    /// Set for per-relation partitions with fewer than two records.
    pub low_n: bool,
    pub params: String,
}

pub(crate) struct TokRecord {
    pub hyp: Vec<String>,
    pub refs: Vec<Vec<String>>,
}

fn tokenize_records(records: &[GenerationRecord]) -> Vec<TokRecord> {
    records
        .par_iter()
        .map(|r| TokRecord {
            hyp: basic_tokens(&r.hypothesis),
            refs: r.references.iter().map(|s| basic_tokens(s)).collect(),
        })
        .collect()
}

fn reference_digest(records: &[GenerationRecord]) -> String {
    let mut refs: Vec<&str> = records
        .iter()
        .flat_map(|r| r.references.iter().map(String::as_str))
        .collect();
    refs.sort_unstable();
    let mut hasher = Sha256::new();
    for r in refs {
        hasher.update(r.as_bytes());
        hasher.update(b"\n");
    }
    let digest = hasher.finalize();
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// Score a whole corpus.
pub fn score_corpus(records: &[GenerationRecord]) -> Result<ScoreReport> {
    if records.is_empty() {
        return Err(Error::invalid("score input", "no records"));
    }
    if let Some(bad) = records.iter().find(|r| r.references.is_empty()) {
        return Err(Error::invalid(
            "score input",
            format!("record for head {:?} has no references", bad.head),
        ));
    }
    let toks = tokenize_records(records);
    Ok(ScoreReport {
        bleu: bleu::corpus_bleu(&toks),
        rouge_l: rouge::corpus_rouge_l(&toks),
        meteor: meteor::corpus_meteor(&toks),
        cider: cider::corpus_cider_d(&toks),
        n: records.len(),
        corpus_digest: reference_digest(records),
        low_n: records.len() < 2,
        params: METRIC_PARAMS.to_string(),
    })
}

/// Score each relation partition independently (CIDEr document frequencies
/// are per partition, so sub-reports legitimately differ from the corpus
/// report on the same records).
pub fn score_per_relation(
    records: &[GenerationRecord],
) -> Result<BTreeMap<String, ScoreReport>> {
    let mut partitions: BTreeMap<String, Vec<GenerationRecord>> = BTreeMap::new();
    for record in records {
        partitions
            .entry(record.relation.to_string())
            .or_default()
            .push(record.clone());
    }
    partitions
        .into_iter()
        .map(|(relation, part)| Ok((relation, score_corpus(&part)?)))
        .collect()
}

/// Read generation records from JSONL
/// (`{"head", "relation", "generation", "references": [...]}`).
pub fn read_generations_jsonl<R: std::io::BufRead>(
    reader: R,
    kg: &str,
) -> Result<Vec<GenerationRecord>> {
    #[derive(Deserialize)]
    struct Line {
        head: String,
        relation: String,
        generation: String,
        references: Vec<String>,
    }
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: Line = serde_json::from_str(&line)
            .map_err(|e| Error::data("generations", idx + 1, e.to_string()))?;
        let relation = RelationId::new(kg, &raw.relation)
            .map_err(|e| Error::data("generations", idx + 1, e.to_string()))?;
        records.push(
            GenerationRecord::new(raw.head, relation, raw.generation, raw.references)
                .map_err(|e| Error::data("generations", idx + 1, e.to_string()))?,
        );
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::ATOMIC2020;

    fn rel(name: &str) -> RelationId {
        RelationId::new(ATOMIC2020, name).unwrap()
    }

    fn record(hyp: &str, refs: &[&str]) -> GenerationRecord {
        GenerationRecord::new(
            "X runs out of steam",
            rel("xWant"),
            hyp,
            refs.iter().map(|s| s.to_string()).collect(),
        )
        .unwrap()
    }

    /// Golden fixture frozen from an independent implementation of the
    /// pinned metric formulas.
    #[test]
    fn golden_three_record_fixture() {
        let records = vec![
            record("have energy", &["have energy", "feel rested"]),
            record("drink some water", &["drinks water", "take a break"]),
            record("tired", &["tired", "exhausted"]),
        ];
        let report = score_corpus(&records).unwrap();
        let expected_bleu = [
            0.66666666666666663,
            0.47140452079103168,
            0.00060570686427737972,
            0.003860973950960897,
        ];
        for (got, want) in report.bleu.iter().zip(expected_bleu) {
            assert!((got - want).abs() < 1e-9, "bleu {got} vs {want}");
        }
        assert!((report.rouge_l - 0.80498866213151921).abs() < 1e-9);
        assert!((report.meteor - 0.82539682539682546).abs() < 1e-9);
        assert!((report.cider - 1.4177572372724996).abs() < 1e-9);
        assert_eq!(report.n, 3);
    }

    #[test]
    fn identity_maxes_bounded_metrics() {
        let records = vec![
            record("have energy", &["have energy"]),
            record("drinks some water now", &["drinks some water now"]),
        ];
        let report = score_corpus(&records).unwrap();
        assert_eq!(report.bleu, [1.0, 1.0, 1.0, 1.0]);
        assert_eq!(report.rouge_l, 1.0);
        assert_eq!(report.meteor, 1.0);
    }

    #[test]
    fn disjoint_hypotheses_score_zero() {
        let records = vec![
            record("purple elephant", &["have energy", "feel rested"]),
            record("quantum", &["drink water"]),
        ];
        let report = score_corpus(&records).unwrap();
        assert!(report.bleu[0] < 1e-6);
        assert_eq!(report.rouge_l, 0.0);
        assert_eq!(report.meteor, 0.0);
        assert_eq!(report.cider, 0.0);
    }

    #[test]
    fn empty_hypothesis_is_scored_not_skipped() {
        let records = vec![record("", &["have energy"])];
        let report = score_corpus(&records).unwrap();
        assert_eq!(report.bleu, [0.0; 4]);
        assert_eq!(report.rouge_l, 0.0);
        assert_eq!(report.n, 1);
    }

    #[test]
    fn permutation_invariance() {
        let a = vec![
            record("have energy", &["have energy", "feel rested"]),
            record("drink some water", &["drinks water"]),
            record("tired", &["tired", "exhausted"]),
        ];
        let mut b = a.clone();
        b.reverse();
        let ra = score_corpus(&a).unwrap();
        let rb = score_corpus(&b).unwrap();
        assert_eq!(ra.bleu, rb.bleu);
        assert_eq!(ra.rouge_l, rb.rouge_l);
        assert_eq!(ra.meteor, rb.meteor);
        assert_eq!(ra.cider, rb.cider);
        assert_eq!(ra.corpus_digest, rb.corpus_digest);
    }

    #[test]
    fn tokenization_ignores_case_and_outer_whitespace() {
        let a = vec![record("Have Energy", &["  have ENERGY  "])];
        let b = vec![record("have energy", &["have energy"])];
        let ra = score_corpus(&a).unwrap();
        let rb = score_corpus(&b).unwrap();
        assert_eq!(ra.bleu, rb.bleu);
        assert_eq!(ra.rouge_l, rb.rouge_l);
        assert_eq!(ra.meteor, rb.meteor);
        assert_eq!(ra.cider, rb.cider);
    }

    #[test]
    fn per_relation_partitions_are_local() {
        let mut records = vec![
            GenerationRecord::new("a", rel("xWant"), "rest now", vec!["rest now".into()])
                .unwrap(),
            GenerationRecord::new("b", rel("xWant"), "sleep", vec!["sleep well".into()])
                .unwrap(),
        ];
        let solo = score_per_relation(&records).unwrap();

        records.push(
            GenerationRecord::new("c", rel("xAttr"), "calm", vec!["calm person".into()])
                .unwrap(),
        );
        let with_other = score_per_relation(&records).unwrap();

        // BLEU/ROUGE/METEOR of one partition are unaffected by the other
        let before = &solo["atomic2020:xWant"];
        let after = &with_other["atomic2020:xWant"];
        assert_eq!(before.bleu, after.bleu);
        assert_eq!(before.rouge_l, after.rouge_l);
        assert_eq!(before.meteor, after.meteor);
        assert!(with_other["atomic2020:xAttr"].low_n);
    }

    #[test]
    fn cider_df_scope_differs_between_corpus_and_partition() {
        // inside the xNeed partition "water" saturates the document
        // frequency (idf 0, vectors vanish); in the full corpus a third
        // record keeps its idf positive
        let records = vec![
            GenerationRecord::new("a", rel("xNeed"), "water", vec!["water".into()]).unwrap(),
            GenerationRecord::new("b", rel("xNeed"), "water", vec!["water".into()]).unwrap(),
            GenerationRecord::new("c", rel("xWant"), "bread", vec!["bread".into()]).unwrap(),
        ];
        let corpus = score_corpus(&records).unwrap();
        let per_rel = score_per_relation(&records).unwrap();
        let partition = &per_rel["atomic2020:xNeed"];
        assert_eq!(partition.cider, 0.0);
        assert!(
            corpus.cider > 0.0,
            "corpus-scope idf should keep the match visible: {}",
            corpus.cider
        );
    }

    #[test]
    fn empty_reference_list_is_rejected_at_load() {
        assert!(GenerationRecord::new("h", rel("xWant"), "t", vec![]).is_err());
    }
}
