//! Pairwise symbolic KG comparison. A source tuple is "found" iff any of its
//! normalized keys exists in the target's index; matching is exact string
//! equality of normalized keys, no partial credit. Precision and the two
//! recall variants (raw, which may exceed 100%, and dedup over distinct
//! target keys) are reported overall and per target-space relation.

use std::collections::{BTreeMap, HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::anno::{AnnotationRecord, FinalLabel};
use crate::kg::registry::parse_version;
use crate::kg::{KgId, KnowledgeGraph, MatchMode, RelationId};
use crate::normalize::{build_normalized_index, KeyStatus, NormalizedIndex, NormalizedKey, Normalizer};
use crate::{Error, Result};

fn pct(numerator: u64, denominator: u64) -> Option<f64> {
    (denominator > 0).then(|| 100.0 * numerator as f64 / denominator as f64)
}

/// Coverage figures for one relation row (and, inlined, for the whole pair).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RelationCoverage {
    pub precision_pct: Option<f64>,
    pub recall_raw_pct: Option<f64>,
    pub recall_dedup_pct: Option<f64>,
    pub matched_source_tuples: u64,
    pub source_size: u64,
    pub target_size: u64,
    pub target_distinct_keys: u64,
    pub target_keys_hit: u64,
}

impl RelationCoverage {
    fn finalize(&mut self) {
        self.precision_pct = pct(self.matched_source_tuples, self.source_size);
        self.recall_raw_pct = pct(self.matched_source_tuples, self.target_size);
        self.recall_dedup_pct = pct(self.target_keys_hit, self.target_distinct_keys);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub source: KgId,
    pub target: KgId,
    pub precision_pct: Option<f64>,
    pub recall_raw_pct: Option<f64>,
    pub recall_dedup_pct: Option<f64>,
    /// Matchable source tuples found in the target.
    pub matched_source_tuples: u64,
    /// Matchable (mapped, non-degenerate) tuple counts; the excluded
    /// counts below make alternative denominators recomputable.
    pub source_size: u64,
    pub target_size: u64,
    pub target_distinct_keys: u64,
    pub target_keys_hit: u64,
    pub source_total: u64,
    pub source_unmapped: u64,
    pub source_degenerate: u64,
    pub target_total: u64,
    pub target_unmapped: u64,
    pub target_degenerate: u64,
    pub per_relation: BTreeMap<String, RelationCoverage>,
    pub mode: MatchMode,
    pub config_digest: String,
}

#[derive(Default)]
struct SourceAccum {
    matchable: u64,
    matched: u64,
    unmapped: u64,
    degenerate: u64,
    hit_keys: HashSet<NormalizedKey>,
    rel_size: HashMap<RelationId, u64>,
    rel_matched: HashMap<RelationId, u64>,
}

impl SourceAccum {
    fn merge(mut self, other: SourceAccum) -> SourceAccum {
        self.matchable += other.matchable;
        self.matched += other.matched;
        self.unmapped += other.unmapped;
        self.degenerate += other.degenerate;
        self.hit_keys.extend(other.hit_keys);
        for (rel, count) in other.rel_size {
            *self.rel_size.entry(rel).or_insert(0) += count;
        }
        for (rel, count) in other.rel_matched {
            *self.rel_matched.entry(rel).or_insert(0) += count;
        }
        self
    }
}

fn scan_source(
    source: &KnowledgeGraph,
    target_index: &NormalizedIndex,
    normalizer: &Normalizer<'_>,
) -> SourceAccum {
    source
        .tuples()
        .par_chunks(4096)
        .map(|chunk| {
            let mut acc = SourceAccum::default();
            for tuple in chunk {
                let keys = normalizer.tuple_keys(tuple);
                match keys.status {
                    KeyStatus::Unmapped => acc.unmapped += 1,
                    KeyStatus::Degenerate => acc.degenerate += 1,
                    KeyStatus::Ok => {
                        acc.matchable += 1;
                        let mut found = false;
                        for key in keys.keys {
                            *acc.rel_size.entry(key.relation.clone()).or_insert(0) += 1;
                            if target_index.contains(&key) {
                                found = true;
                                *acc.rel_matched.entry(key.relation.clone()).or_insert(0) += 1;
                                acc.hit_keys.insert(key);
                            }
                        }
                        if found {
                            acc.matched += 1;
                        }
                    }
                }
            }
            acc
        })
        .reduce(SourceAccum::default, SourceAccum::merge)
}

fn coverage_with_index(
    source: &KnowledgeGraph,
    target: &KnowledgeGraph,
    target_index: &NormalizedIndex,
    normalizer: &Normalizer<'_>,
) -> CoverageReport {
    let acc = scan_source(source, target_index, normalizer);

    let target_rel_stats = target_index.relation_stats();
    let mut hit_per_relation: HashMap<RelationId, u64> = HashMap::new();
    for key in &acc.hit_keys {
        *hit_per_relation.entry(key.relation.clone()).or_insert(0) += 1;
    }

    let mut per_relation: BTreeMap<String, RelationCoverage> = BTreeMap::new();
    let relations: HashSet<RelationId> = acc
        .rel_size
        .keys()
        .chain(target_rel_stats.keys())
        .cloned()
        .collect();
    for relation in relations {
        let (distinct, tuples) = target_rel_stats
            .get(&relation)
            .copied()
            .unwrap_or((0, 0));
        let mut row = RelationCoverage {
            matched_source_tuples: acc.rel_matched.get(&relation).copied().unwrap_or(0),
            source_size: acc.rel_size.get(&relation).copied().unwrap_or(0),
            target_size: tuples,
            target_distinct_keys: distinct,
            target_keys_hit: hit_per_relation.get(&relation).copied().unwrap_or(0),
            ..Default::default()
        };
        row.finalize();
        per_relation.insert(relation.name().to_string(), row);
    }

    let target_size = target_index.matchable_tuples();
    let target_distinct = target_index.distinct_keys() as u64;
    CoverageReport {
        source: source.id().clone(),
        target: target.id().clone(),
        precision_pct: pct(acc.matched, acc.matchable),
        recall_raw_pct: pct(acc.matched, target_size),
        recall_dedup_pct: pct(acc.hit_keys.len() as u64, target_distinct),
        matched_source_tuples: acc.matched,
        source_size: acc.matchable,
        target_size,
        target_distinct_keys: target_distinct,
        target_keys_hit: acc.hit_keys.len() as u64,
        source_total: source.len() as u64,
        source_unmapped: acc.unmapped,
        source_degenerate: acc.degenerate,
        target_total: target.len() as u64,
        target_unmapped: target_index.unmapped().len() as u64,
        target_degenerate: target_index.degenerate().len() as u64,
        per_relation,
        mode: normalizer.mode,
        config_digest: normalizer.digest(),
    }
}

/// Pairwise coverage of `source` against `target`.
pub fn coverage(
    source: &KnowledgeGraph,
    target: &KnowledgeGraph,
    normalizer: &Normalizer<'_>,
) -> CoverageReport {
    let target_index = build_normalized_index(target, normalizer);
    coverage_with_index(source, target, &target_index, normalizer)
}

/// Full pairwise grid over two or more graphs, diagonal omitted.
pub fn coverage_matrix(
    kgs: &[&KnowledgeGraph],
    normalizer: &Normalizer<'_>,
) -> Result<Vec<CoverageReport>> {
    if kgs.len() < 2 {
        return Err(Error::Config("coverage matrix needs at least 2 graphs".into()));
    }
    let indexes: Vec<NormalizedIndex> = kgs
        .iter()
        .map(|kg| build_normalized_index(kg, normalizer))
        .collect();
    let mut reports = Vec::with_capacity(kgs.len() * (kgs.len() - 1));
    for (i, source) in kgs.iter().enumerate() {
        for (j, target) in kgs.iter().enumerate() {
            if i == j {
                continue;
            }
            reports.push(coverage_with_index(source, target, &indexes[j], normalizer));
        }
    }
    Ok(reports)
}

// --- accuracy breakdown ---

/// Cognate relation groups (e.g. ObjectUse/UsedFor) merged in accuracy
/// tables. Ungrouped relations fall back to singleton groups by name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CognateGroups {
    map: HashMap<RelationId, String>,
    version: String,
}

impl CognateGroups {
    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn from_tsv(text: &str, origin: &str) -> Result<Self> {
        let mut groups = CognateGroups {
            version: parse_version(text),
            ..Default::default()
        };
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let [group, kg, relation] = fields.as_slice() else {
                return Err(Error::data(origin, idx + 1, "expected 3 fields"));
            };
            let relation = RelationId::new(*kg, relation)
                .map_err(|e| Error::data(origin, idx + 1, e.to_string()))?;
            groups.map.insert(relation, group.to_string());
        }
        Ok(groups)
    }

    pub fn group_of(&self, relation: &RelationId) -> String {
        self.map
            .get(relation)
            .cloned()
            .unwrap_or_else(|| relation.name().to_string())
    }

    pub fn members(&self) -> impl Iterator<Item = &RelationId> {
        self.map.keys()
    }
}

/// Accept/Reject/No-Judgment percentages for one (group, KG) cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccuracyCell {
    pub n: u64,
    pub accepts: u64,
    pub rejects: u64,
    pub no_judgments: u64,
    pub accept_pct: f64,
    pub reject_pct: f64,
    pub no_judgment_pct: f64,
    /// Two-proportion z-test on accept rates against the baseline KG.
    /// Absent for the baseline itself and for unpaired cells.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub significant_vs_baseline: Option<bool>,
}

impl AccuracyCell {
    fn from_counts(accepts: u64, rejects: u64, no_judgments: u64) -> Self {
        let n = accepts + rejects + no_judgments;
        let as_pct = |c: u64| 100.0 * c as f64 / n as f64;
        AccuracyCell {
            n,
            accepts,
            rejects,
            no_judgments,
            accept_pct: as_pct(accepts),
            reject_pct: as_pct(rejects),
            no_judgment_pct: as_pct(no_judgments),
            significant_vs_baseline: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccuracyBreakdown {
    pub baseline: KgId,
    pub alpha: f64,
    pub test: String,
    /// group -> kg -> cell
    pub rows: BTreeMap<String, BTreeMap<KgId, AccuracyCell>>,
    pub overall: BTreeMap<KgId, AccuracyCell>,
    pub diagnostics: Vec<String>,
}

const Z_CRITICAL_05: f64 = 1.959963984540054;

/// Two-proportion pooled z-test; true iff the accept rates differ at alpha.
fn accept_rates_differ(a: &AccuracyCell, b: &AccuracyCell) -> Option<bool> {
    if a.n == 0 || b.n == 0 {
        return None;
    }
    let p1 = a.accepts as f64 / a.n as f64;
    let p2 = b.accepts as f64 / b.n as f64;
    let pooled = (a.accepts + b.accepts) as f64 / (a.n + b.n) as f64;
    let se = (pooled * (1.0 - pooled) * (1.0 / a.n as f64 + 1.0 / b.n as f64)).sqrt();
    if se == 0.0 {
        return Some(p1 != p2);
    }
    Some(((p1 - p2) / se).abs() > Z_CRITICAL_05)
}

/// Per-(KG, relation-group) Accept/Reject/No-Judgment percentages with
/// significance flags against a baseline KG.
pub fn accuracy_breakdown(
    records: &[AnnotationRecord],
    groups: &CognateGroups,
    baseline: &KgId,
) -> AccuracyBreakdown {
    let mut counts: BTreeMap<String, BTreeMap<KgId, [u64; 3]>> = BTreeMap::new();
    let mut overall_counts: BTreeMap<KgId, [u64; 3]> = BTreeMap::new();
    for record in records {
        let group = groups.group_of(&record.relation);
        let kg = record.relation.kg().clone();
        let slot = match record.final_label {
            FinalLabel::Accept => 0,
            FinalLabel::Reject => 1,
            FinalLabel::NoJudgment => 2,
        };
        counts.entry(group).or_default().entry(kg.clone()).or_default()[slot] += 1;
        overall_counts.entry(kg).or_default()[slot] += 1;
    }

    let build = |cells: &BTreeMap<KgId, [u64; 3]>| -> BTreeMap<KgId, AccuracyCell> {
        let mut out: BTreeMap<KgId, AccuracyCell> = cells
            .iter()
            .map(|(kg, c)| (kg.clone(), AccuracyCell::from_counts(c[0], c[1], c[2])))
            .collect();
        let baseline_cell = out.get(baseline).cloned();
        for (kg, cell) in out.iter_mut() {
            if kg != baseline {
                cell.significant_vs_baseline = baseline_cell
                    .as_ref()
                    .and_then(|b| accept_rates_differ(cell, b));
            }
        }
        out
    };

    let overall = build(&overall_counts);
    let mut rows = BTreeMap::new();
    let mut diagnostics = Vec::new();
    let all_kgs: Vec<KgId> = overall_counts.keys().cloned().collect();
    for (group, cells) in counts {
        for kg in &all_kgs {
            if !cells.contains_key(kg) {
                diagnostics.push(format!("group {group:?} has no records for {kg}"));
            }
        }
        rows.insert(group, build(&cells));
    }

    AccuracyBreakdown {
        baseline: baseline.clone(),
        alpha: 0.05,
        test: "two-proportion z-test on accept rates".to_string(),
        rows,
        overall,
        diagnostics,
    }
}
