//! Shared fixtures for the integration suites: seeded random KG generators
//! and the brute-force coverage oracle. Each test target compiles its own
//! copy, so not every item is used everywhere.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap, HashSet};

use rand::Rng;

use cskg::compare::{CoverageReport, RelationCoverage};
use cskg::kg::{KnowledgeGraph, RelationId, Tuple};
use cskg::normalize::{KeyStatus, NormalizedKey, Normalizer};

pub const CONTENT_WORDS: &[&str] = &[
    "bread", "dough", "baker", "cake", "water", "coffee", "steam", "energy", "pantry",
    "basket", "gift", "cat", "dog", "story", "music", "garden", "river", "stone", "cloud",
    "window", "candle", "paper", "glass", "wheel", "engine", "road", "mountain", "forest",
    "ocean", "lamp", "chair", "table", "bottle", "hammer", "nail", "rope", "ladder",
    "bridge", "tower", "field", "eats", "eating", "baked", "running", "carried", "boxes",
    "watches", "cookies",
];

const A2020_RELATIONS: &[&str] = &[
    "ObjectUse", "AtLocation", "MadeUpOf", "HasProperty", "CapableOf", "Desires",
    "NotDesires", "IsAfter", "HasSubEvent", "IsBefore", "HinderedBy", "Causes", "xReason",
    "isFilledBy", "xNeed", "xAttr", "xEffect", "xReact", "xWant", "xIntent", "oEffect",
    "oReact", "oWant",
];

const ATOMIC_RELATIONS: &[&str] = &[
    "xIntent", "xNeed", "xAttr", "xEffect", "xReact", "xWant", "oEffect", "oReact", "oWant",
];

const CONCEPTNET_MAPPED: &[&str] = &[
    "AtLocation", "CapableOf", "Causes", "CausesDesire", "Desires", "MadeOf", "HasProperty",
    "HasA", "HasPrerequisite", "HasSubevent", "HasFirstSubevent", "HasLastSubevent",
    "NotDesires", "MotivatedByGoal", "PartOf", "UsedFor", "ReceivesAction",
];

const CONCEPTNET_UNMAPPED: &[&str] = &["CreatedBy", "IsA", "RelatedTo"];

fn phrase<R: Rng>(rng: &mut R, max_words: usize) -> String {
    let words = rng.gen_range(1..=max_words);
    (0..words)
        .map(|_| CONTENT_WORDS[rng.gen_range(0..CONTENT_WORDS.len())])
        .collect::<Vec<_>>()
        .join(" ")
}

/// A random graph in one of the three mapped vocabularies. Includes the
/// occasional degenerate (stopword-only) head and, for conceptnet, the
/// occasional unmapped relation.
pub fn random_kg<R: Rng>(rng: &mut R, tag: &str, size: usize) -> KnowledgeGraph {
    let kg_name = ["atomic2020", "atomic", "conceptnet"][rng.gen_range(0..3)];
    let mut kg = KnowledgeGraph::new(kg_name);
    for i in 0..size {
        // the first tuple is always plain and mappable so every generated
        // graph has at least one matchable tuple
        let rel_name = match kg_name {
            "atomic2020" => A2020_RELATIONS[rng.gen_range(0..A2020_RELATIONS.len())],
            "atomic" => ATOMIC_RELATIONS[rng.gen_range(0..ATOMIC_RELATIONS.len())],
            _ if i == 0 || !rng.gen_bool(0.1) => {
                CONCEPTNET_MAPPED[rng.gen_range(0..CONCEPTNET_MAPPED.len())]
            }
            _ => CONCEPTNET_UNMAPPED[rng.gen_range(0..CONCEPTNET_UNMAPPED.len())],
        };
        let relation = RelationId::new(kg_name, rel_name).unwrap();
        let mut head = if i > 0 && rng.gen_bool(0.05) {
            "the of".to_string() // degenerate after normalization
        } else {
            phrase(rng, 3)
        };
        if kg_name != "conceptnet" && rng.gen_bool(0.3) {
            head = format!("PersonX {head}");
        }
        let tail = phrase(rng, 3);
        let mut tuple = Tuple::new(format!("{tag}-{i}"), head, relation, tail).unwrap();
        if rng.gen_bool(0.3) {
            tuple = tuple.with_weight(rng.gen_range(0.0..3.0)).unwrap();
        }
        kg.push(tuple).unwrap();
    }
    kg
}

fn pct(numerator: u64, denominator: u64) -> Option<f64> {
    (denominator > 0).then(|| 100.0 * numerator as f64 / denominator as f64)
}

/// Brute-force coverage oracle: per-tuple normalization followed by a double
/// loop over all (source, target) tuple pairs. Independent of the indexed
/// matching path in `cskg::compare`.
pub fn oracle_coverage(
    source: &KnowledgeGraph,
    target: &KnowledgeGraph,
    normalizer: &Normalizer<'_>,
) -> CoverageReport {
    let source_keys: Vec<_> = source.tuples().iter().map(|t| normalizer.tuple_keys(t)).collect();
    let target_keys: Vec<_> = target.tuples().iter().map(|t| normalizer.tuple_keys(t)).collect();

    let mut target_matchable = 0u64;
    let mut target_unmapped = 0u64;
    let mut target_degenerate = 0u64;
    let mut target_key_set: BTreeSet<&NormalizedKey> = BTreeSet::new();
    let mut target_rel_distinct: HashMap<RelationId, BTreeSet<&NormalizedKey>> = HashMap::new();
    let mut target_rel_tuples: HashMap<RelationId, u64> = HashMap::new();
    for keys in &target_keys {
        match keys.status {
            KeyStatus::Unmapped => target_unmapped += 1,
            KeyStatus::Degenerate => target_degenerate += 1,
            KeyStatus::Ok => {
                target_matchable += 1;
                for key in &keys.keys {
                    target_key_set.insert(key);
                    target_rel_distinct
                        .entry(key.relation.clone())
                        .or_default()
                        .insert(key);
                    *target_rel_tuples.entry(key.relation.clone()).or_insert(0) += 1;
                }
            }
        }
    }

    let mut matched = 0u64;
    let mut matchable = 0u64;
    let mut unmapped = 0u64;
    let mut degenerate = 0u64;
    let mut hit_keys: BTreeSet<&NormalizedKey> = BTreeSet::new();
    let mut rel_size: HashMap<RelationId, u64> = HashMap::new();
    let mut rel_matched: HashMap<RelationId, u64> = HashMap::new();

    for keys in &source_keys {
        match keys.status {
            KeyStatus::Unmapped => unmapped += 1,
            KeyStatus::Degenerate => degenerate += 1,
            KeyStatus::Ok => {
                matchable += 1;
                let mut found_relations: HashSet<&RelationId> = HashSet::new();
                let mut found = false;
                // the double loop: compare against every target tuple
                for target_tuple in &target_keys {
                    if target_tuple.status != KeyStatus::Ok {
                        continue;
                    }
                    for key in &keys.keys {
                        if target_tuple.keys.contains(key) {
                            found = true;
                            found_relations.insert(&key.relation);
                            hit_keys.insert(key);
                        }
                    }
                }
                for key in &keys.keys {
                    *rel_size.entry(key.relation.clone()).or_insert(0) += 1;
                }
                for relation in found_relations {
                    *rel_matched.entry(relation.clone()).or_insert(0) += 1;
                }
                if found {
                    matched += 1;
                }
            }
        }
    }

    let mut hit_per_relation: HashMap<RelationId, u64> = HashMap::new();
    for key in &hit_keys {
        *hit_per_relation.entry(key.relation.clone()).or_insert(0) += 1;
    }

    let mut per_relation = std::collections::BTreeMap::new();
    let relations: HashSet<RelationId> = rel_size
        .keys()
        .chain(target_rel_distinct.keys())
        .cloned()
        .collect();
    for relation in relations {
        let distinct = target_rel_distinct
            .get(&relation)
            .map_or(0, |s| s.len() as u64);
        let tuples = target_rel_tuples.get(&relation).copied().unwrap_or(0);
        let matched_r = rel_matched.get(&relation).copied().unwrap_or(0);
        let size_r = rel_size.get(&relation).copied().unwrap_or(0);
        let hit_r = hit_per_relation.get(&relation).copied().unwrap_or(0);
        per_relation.insert(
            relation.name().to_string(),
            RelationCoverage {
                precision_pct: pct(matched_r, size_r),
                recall_raw_pct: pct(matched_r, tuples),
                recall_dedup_pct: pct(hit_r, distinct),
                matched_source_tuples: matched_r,
                source_size: size_r,
                target_size: tuples,
                target_distinct_keys: distinct,
                target_keys_hit: hit_r,
            },
        );
    }

    let target_distinct = target_key_set.len() as u64;
    CoverageReport {
        source: source.id().clone(),
        target: target.id().clone(),
        precision_pct: pct(matched, matchable),
        recall_raw_pct: pct(matched, target_matchable),
        recall_dedup_pct: pct(hit_keys.len() as u64, target_distinct),
        matched_source_tuples: matched,
        source_size: matchable,
        target_size: target_matchable,
        target_distinct_keys: target_distinct,
        target_keys_hit: hit_keys.len() as u64,
        source_total: source.len() as u64,
        source_unmapped: unmapped,
        source_degenerate: degenerate,
        target_total: target.len() as u64,
        target_unmapped,
        target_degenerate,
        per_relation,
        mode: normalizer.mode,
        config_digest: normalizer.digest(),
    }
}

