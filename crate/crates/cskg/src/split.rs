//! Adversarial train/dev/test splits: normalized heads never cross split
//! boundaries, generic heads (more tuples than the eval cap) are forced into
//! train, upstream split tags can be preserved, and the remaining head groups
//! are assigned greedily against the requested ratios after a seeded shuffle
//! over lexicographically pre-sorted heads.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::kg::{KnowledgeGraph, Split, Tuple, TupleId};
use crate::normalize::{normalize_concept, NormalizerConfig};
use crate::seed::derive_rng;
use crate::{Error, Result};

// Default train/dev/test proportions.
pub const DEFAULT_RATIOS: (f64, f64, f64) = (
    1_076_880.0 / 1_331_113.0,
    102_024.0 / 1_331_113.0,
    152_209.0 / 1_331_113.0,
);

pub const DEFAULT_EVAL_HEAD_CAP: u64 = 500;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub ratios: (f64, f64, f64),
    /// Heads involved in more tuples than this never reach dev/test.
    pub max_head_tuples_eval: u64,
    /// Keep only tuples with weight >= this (absent weights fail the filter).
    pub min_confidence: Option<f64>,
    pub seed: u64,
    /// Head groups carrying an upstream split tag inherit it (conflicting
    /// tags force the group into train).
    pub preserve_upstream: bool,
}

impl SplitConfig {
    pub fn new(seed: u64) -> Self {
        SplitConfig {
            ratios: DEFAULT_RATIOS,
            max_head_tuples_eval: DEFAULT_EVAL_HEAD_CAP,
            min_confidence: None,
            seed,
            preserve_upstream: false,
        }
    }

    /// TransOMCS preset: confidence >= 0.5 required.
    pub fn transomcs(seed: u64) -> Self {
        SplitConfig {
            min_confidence: Some(0.5),
            ..SplitConfig::new(seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (train, dev, test) = self.ratios;
        for (name, r) in [("train", train), ("dev", dev), ("test", test)] {
            if r.is_nan() || r <= 0.0 {
                return Err(Error::Config(format!("{name} ratio must be > 0, got {r}")));
            }
        }
        if (train + dev + test - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "ratios must sum to 1, got {}",
                train + dev + test
            )));
        }
        if self.max_head_tuples_eval < 1 {
            return Err(Error::Config("max_head_tuples_eval must be >= 1".into()));
        }
        Ok(())
    }

    fn ratio(&self, split: Split) -> f64 {
        match split {
            Split::Train => self.ratios.0,
            Split::Dev => self.ratios.1,
            Split::Test => self.ratios.2,
        }
    }

    fn confidence_passes(&self, tuple: &Tuple) -> bool {
        match self.min_confidence {
            None => true,
            Some(threshold) => tuple.weight.is_some_and(|w| w >= threshold),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: u64,
    pub dev: u64,
    pub test: u64,
}

impl SplitCounts {
    fn get(&self, split: Split) -> u64 {
        match split {
            Split::Train => self.train,
            Split::Dev => self.dev,
            Split::Test => self.test,
        }
    }

    fn add(&mut self, split: Split, n: u64) {
        match split {
            Split::Train => self.train += n,
            Split::Dev => self.dev += n,
            Split::Test => self.test += n,
        }
    }

    pub fn total(&self) -> u64 {
        self.train + self.dev + self.test
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitResult {
    pub assignment: BTreeMap<TupleId, Split>,
    pub head_partition: BTreeMap<String, Split>,
    pub counts: SplitCounts,
    pub dropped_low_confidence: u64,
    pub requested_ratios: [f64; 3],
    pub achieved_ratios: [f64; 3],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deviation: Option<String>,
    pub seed: u64,
}

pub fn make_adversarial_split(
    kg: &KnowledgeGraph,
    config: &SplitConfig,
    norm: &NormalizerConfig,
) -> Result<SplitResult> {
    config.validate()?;

    let mut dropped_low_confidence = 0u64;
    // lexicographic head order comes from the BTreeMap
    let mut groups: BTreeMap<String, Vec<&Tuple>> = BTreeMap::new();
    for tuple in kg.tuples() {
        if !config.confidence_passes(tuple) {
            dropped_low_confidence += 1;
            continue;
        }
        let head_key = normalize_concept(&tuple.head, tuple.relation.kg(), norm);
        groups.entry(head_key).or_default().push(tuple);
    }

    let total_kept: u64 = groups.values().map(|g| g.len() as u64).sum();
    let targets = [
        config.ratio(Split::Train) * total_kept as f64,
        config.ratio(Split::Dev) * total_kept as f64,
        config.ratio(Split::Test) * total_kept as f64,
    ];

    let mut head_partition: BTreeMap<String, Split> = BTreeMap::new();
    let mut counts = SplitCounts::default();
    let mut forced = SplitCounts::default();
    let mut remaining: Vec<(&String, u64)> = Vec::new();

    for (head_key, group) in &groups {
        let size = group.len() as u64;
        if size > config.max_head_tuples_eval {
            // generic head: never eligible for dev/test
            head_partition.insert(head_key.clone(), Split::Train);
            counts.add(Split::Train, size);
            forced.add(Split::Train, size);
            continue;
        }
        if config.preserve_upstream {
            let mut tags = group.iter().filter_map(|t| t.split);
            if let Some(first) = tags.next() {
                let split = if tags.all(|t| t == first) {
                    first
                } else {
                    Split::Train
                };
                head_partition.insert(head_key.clone(), split);
                counts.add(split, size);
                forced.add(split, size);
                continue;
            }
        }
        remaining.push((head_key, size));
    }

    let mut rng = derive_rng(config.seed, "split");
    remaining.shuffle(&mut rng);

    for (head_key, size) in remaining {
        // most-underfilled split wins; ties resolve in train/dev/test order
        let split = Split::ALL
            .into_iter()
            .max_by(|a, b| {
                let deficit_a = targets[*a as usize] - counts.get(*a) as f64;
                let deficit_b = targets[*b as usize] - counts.get(*b) as f64;
                deficit_a
                    .partial_cmp(&deficit_b)
                    .expect("deficits are finite")
            })
            .expect("three splits");
        head_partition.insert(head_key.clone(), split);
        counts.add(split, size);
    }

    let mut assignment = BTreeMap::new();
    for (head_key, group) in &groups {
        let split = head_partition[head_key];
        for tuple in group {
            assignment.insert(tuple.id.clone(), split);
        }
    }

    let achieved = if total_kept == 0 {
        [0.0; 3]
    } else {
        [
            counts.train as f64 / total_kept as f64,
            counts.dev as f64 / total_kept as f64,
            counts.test as f64 / total_kept as f64,
        ]
    };

    let mut deviation = None;
    for split in Split::ALL {
        if forced.get(split) as f64 > targets[split as usize] + 0.5 {
            deviation = Some(format!(
                "forced assignments exceed the {split} budget: requested ratios \
                 {:?}, achieved [{:.4}, {:.4}, {:.4}]",
                [config.ratios.0, config.ratios.1, config.ratios.2],
                achieved[0],
                achieved[1],
                achieved[2]
            ));
            break;
        }
    }

    Ok(SplitResult {
        assignment,
        head_partition,
        counts,
        dropped_low_confidence,
        requested_ratios: [config.ratios.0, config.ratios.1, config.ratios.2],
        achieved_ratios: achieved,
        deviation,
        seed: config.seed,
    })
}

/// Check a split result against its graph and config. Empty iff head
/// disjointness, the eval-head cap, the confidence filter, and completeness
/// all hold.
pub fn verify_split(
    kg: &KnowledgeGraph,
    result: &SplitResult,
    config: &SplitConfig,
    norm: &NormalizerConfig,
) -> Vec<String> {
    let mut violations = Vec::new();

    let mut head_splits: BTreeMap<String, Split> = BTreeMap::new();
    let mut eval_head_counts: BTreeMap<(String, Split), u64> = BTreeMap::new();
    let mut dropped = 0u64;
    let mut assigned = 0u64;

    for tuple in kg.tuples() {
        let entry = result.assignment.get(&tuple.id);
        if !config.confidence_passes(tuple) {
            dropped += 1;
            if entry.is_some() {
                violations.push(format!(
                    "tuple {} fails the confidence filter but is assigned",
                    tuple.id
                ));
            }
            continue;
        }
        let Some(&split) = entry else {
            violations.push(format!("tuple {} is not assigned to any split", tuple.id));
            continue;
        };
        assigned += 1;
        let head_key = normalize_concept(&tuple.head, tuple.relation.kg(), norm);
        match head_splits.get(&head_key) {
            None => {
                head_splits.insert(head_key.clone(), split);
            }
            Some(&prev) if prev != split => {
                violations.push(format!(
                    "head {head_key:?} appears in both {prev} and {split}"
                ));
            }
            _ => {}
        }
        if split != Split::Train {
            *eval_head_counts.entry((head_key, split)).or_insert(0) += 1;
        }
    }

    for ((head_key, split), count) in eval_head_counts {
        if count > config.max_head_tuples_eval {
            violations.push(format!(
                "head {head_key:?} has {count} tuples in {split}, cap is {}",
                config.max_head_tuples_eval
            ));
        }
    }

    if dropped != result.dropped_low_confidence {
        violations.push(format!(
            "dropped_low_confidence is {}, recomputed {dropped}",
            result.dropped_low_confidence
        ));
    }
    if assigned != result.counts.total() {
        violations.push(format!(
            "counts total {} but {assigned} tuples are assigned",
            result.counts.total()
        ));
    }
    for id in result.assignment.keys() {
        if !kg.contains_id(id) {
            violations.push(format!("assignment references unknown tuple id {id}"));
        }
    }

    violations
}
