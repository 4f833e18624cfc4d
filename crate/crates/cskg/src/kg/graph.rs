//! In-memory knowledge-graph handle: append-only during ingestion, then
//! treated as frozen read-only by every downstream stage.

use std::collections::HashSet;

use crate::kg::{KgId, Tuple, TupleId};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct KnowledgeGraph {
    id: KgId,
    tuples: Vec<Tuple>,
    ids: HashSet<TupleId>,
}

impl KnowledgeGraph {
    pub fn new(id: impl Into<KgId>) -> Self {
        KnowledgeGraph {
            id: id.into(),
            tuples: Vec::new(),
            ids: HashSet::new(),
        }
    }

    pub fn id(&self) -> &KgId {
        &self.id
    }

    /// Append a tuple. The tuple's relation must live in this KG's vocabulary
    /// and its id must be unused.
    pub fn push(&mut self, tuple: Tuple) -> Result<()> {
        if tuple.relation.kg() != &self.id {
            return Err(Error::invalid(
                "knowledge graph",
                format!(
                    "tuple {} carries relation {} but the graph is {}",
                    tuple.id, tuple.relation, self.id
                ),
            ));
        }
        if !self.ids.insert(tuple.id.clone()) {
            return Err(Error::invalid(
                "knowledge graph",
                format!("duplicate tuple id {}", tuple.id),
            ));
        }
        self.tuples.push(tuple);
        Ok(())
    }

    pub fn from_tuples(id: impl Into<KgId>, tuples: impl IntoIterator<Item = Tuple>) -> Result<Self> {
        let mut kg = KnowledgeGraph::new(id);
        for tuple in tuples {
            kg.push(tuple)?;
        }
        Ok(kg)
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn tuples(&self) -> &[Tuple] {
        &self.tuples
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Tuple> {
        self.tuples.iter()
    }

    pub fn contains_id(&self, id: &TupleId) -> bool {
        self.ids.contains(id)
    }
}
