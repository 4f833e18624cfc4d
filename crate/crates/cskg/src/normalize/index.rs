//! Normalized-key index over a knowledge graph: the target-side structure of
//! coverage matching. Construction shards tuples across threads and merges in
//! shard order, so the index is byte-for-byte deterministic.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::kg::{KnowledgeGraph, RelationId, TupleId};
use crate::normalize::{KeyStatus, NormalizedKey, Normalizer};

#[derive(Debug, Clone, Default)]
pub struct NormalizedIndex {
    entries: HashMap<NormalizedKey, Vec<TupleId>>,
    degenerate: Vec<TupleId>,
    unmapped: Vec<TupleId>,
    matchable_tuples: u64,
}

impl NormalizedIndex {
    pub fn contains(&self, key: &NormalizedKey) -> bool {
        self.entries.contains_key(key)
    }

    pub fn tuples_for(&self, key: &NormalizedKey) -> Option<&[TupleId]> {
        self.entries.get(key).map(Vec::as_slice)
    }

    /// How many tuples produced this key.
    pub fn multiplicity(&self, key: &NormalizedKey) -> usize {
        self.entries.get(key).map_or(0, Vec::len)
    }

    pub fn distinct_keys(&self) -> usize {
        self.entries.len()
    }

    pub fn keys(&self) -> impl Iterator<Item = &NormalizedKey> {
        self.entries.keys()
    }

    /// Tuples that contributed at least one key.
    pub fn matchable_tuples(&self) -> u64 {
        self.matchable_tuples
    }

    pub fn degenerate(&self) -> &[TupleId] {
        &self.degenerate
    }

    pub fn unmapped(&self) -> &[TupleId] {
        &self.unmapped
    }

    /// Per target relation: (distinct keys, tuple-key contributions).
    pub fn relation_stats(&self) -> HashMap<RelationId, (u64, u64)> {
        let mut stats: HashMap<RelationId, (u64, u64)> = HashMap::new();
        for (key, ids) in &self.entries {
            let slot = stats.entry(key.relation.clone()).or_default();
            slot.0 += 1;
            slot.1 += ids.len() as u64;
        }
        stats
    }
}

const SHARD: usize = 8192;

pub fn build_normalized_index(kg: &KnowledgeGraph, normalizer: &Normalizer<'_>) -> NormalizedIndex {
    let shards: Vec<NormalizedIndex> = kg
        .tuples()
        .par_chunks(SHARD)
        .map(|chunk| {
            let mut shard = NormalizedIndex::default();
            for tuple in chunk {
                let keys = normalizer.tuple_keys(tuple);
                match keys.status {
                    KeyStatus::Unmapped => shard.unmapped.push(tuple.id.clone()),
                    KeyStatus::Degenerate => shard.degenerate.push(tuple.id.clone()),
                    KeyStatus::Ok => {
                        shard.matchable_tuples += 1;
                        for key in keys.keys {
                            shard.entries.entry(key).or_default().push(tuple.id.clone());
                        }
                    }
                }
            }
            shard
        })
        .collect();

    let mut index = NormalizedIndex::default();
    for shard in shards {
        index.matchable_tuples += shard.matchable_tuples;
        index.degenerate.extend(shard.degenerate);
        index.unmapped.extend(shard.unmapped);
        for (key, ids) in shard.entries {
            index.entries.entry(key).or_default().extend(ids);
        }
    }
    index
}
