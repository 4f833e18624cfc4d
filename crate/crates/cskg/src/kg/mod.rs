//! Domain types shared by every pipeline stage: KG identifiers, relations,
//! tuples, registries, cross-KG mappings, and the in-memory graph handle.

mod graph;
mod mapping;
pub(crate) mod registry;

pub use graph::KnowledgeGraph;
pub use mapping::{MappingEntry, MatchMode, RelationMapping, validate_mapping};
pub use registry::RelationRegistry;

use std::fmt;
use std::sync::Arc;

use serde::de::Deserializer;
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const ATOMIC2020: &str = "atomic2020";
pub const ATOMIC: &str = "atomic";
pub const CONCEPTNET: &str = "conceptnet";
pub const TRANSOMCS: &str = "transomcs";

/// Symbolic knowledge-graph identifier ("atomic2020", "conceptnet", ...).
/// Cheap to clone; equality is by name.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct KgId(Arc<str>);

impl KgId {
    pub fn new(name: &str) -> Self {
        KgId(Arc::from(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for KgId {
    fn from(name: &str) -> Self {
        KgId::new(name)
    }
}

impl fmt::Display for KgId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for KgId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "KgId({})", self.0)
    }
}

impl Serialize for KgId {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for KgId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Ok(KgId::new(&s))
    }
}

/// A relation identified by the KG vocabulary it belongs to plus its label.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RelationId {
    kg: KgId,
    name: Arc<str>,
}

impl RelationId {
    /// Build a relation id. The name must be non-empty and free of
    /// whitespace.
    pub fn new(kg: impl Into<KgId>, name: &str) -> Result<Self> {
        if name.is_empty() {
            return Err(Error::invalid("relation name", "empty"));
        }
        if name.chars().any(char::is_whitespace) {
            return Err(Error::invalid(
                "relation name",
                format!("contains whitespace: {name:?}"),
            ));
        }
        Ok(RelationId {
            kg: kg.into(),
            name: Arc::from(name),
        })
    }

    /// Infallible constructor for names known to be valid (shipped data,
    /// already-validated registries).
    pub(crate) fn known(kg: impl Into<KgId>, name: &str) -> Self {
        RelationId {
            kg: kg.into(),
            name: Arc::from(name),
        }
    }

    pub fn kg(&self) -> &KgId {
        &self.kg
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

impl fmt::Display for RelationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kg, self.name)
    }
}

impl fmt::Debug for RelationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Stable opaque tuple identifier.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TupleId(Arc<str>);

impl TupleId {
    pub fn new(id: &str) -> Self {
        TupleId(Arc::from(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for TupleId {
    fn from(id: &str) -> Self {
        TupleId::new(id)
    }
}

impl From<String> for TupleId {
    fn from(id: String) -> Self {
        TupleId(Arc::from(id))
    }
}

impl fmt::Display for TupleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for TupleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for TupleId {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for TupleId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Ok(TupleId::new(&s))
    }
}

/// Train/dev/test assignment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Dev, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Option<Split> {
        match s {
            "train" | "trn" => Some(Split::Train),
            "dev" | "valid" | "validation" => Some(Split::Dev),
            "test" | "tst" => Some(Split::Test),
            _ => None,
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Relation category per the three-way grouping of the atomic2020 inventory.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RelationCategory {
    PhysicalEntity,
    EventCentered,
    SocialInteraction,
    Other,
}

impl RelationCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            RelationCategory::PhysicalEntity => "physical-entity",
            RelationCategory::EventCentered => "event-centered",
            RelationCategory::SocialInteraction => "social-interaction",
            RelationCategory::Other => "other",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "physical-entity" => Some(RelationCategory::PhysicalEntity),
            "event-centered" => Some(RelationCategory::EventCentered),
            "social-interaction" => Some(RelationCategory::SocialInteraction),
            "other" => Some(RelationCategory::Other),
            _ => None,
        }
    }
}

impl fmt::Display for RelationCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One (head, relation, tail) assertion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tuple {
    pub id: TupleId,
    pub head: String,
    pub relation: RelationId,
    pub tail: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
    pub source: KgId,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub split: Option<Split>,
}

impl Tuple {
    /// Validating constructor: head/tail must be non-empty after trimming and
    /// the weight, when present, non-negative.
    pub fn new(
        id: impl Into<TupleId>,
        head: impl Into<String>,
        relation: RelationId,
        tail: impl Into<String>,
    ) -> Result<Self> {
        let head = head.into();
        let tail = tail.into();
        if head.trim().is_empty() {
            return Err(Error::invalid("tuple", "head empty after trimming"));
        }
        if tail.trim().is_empty() {
            return Err(Error::invalid("tuple", "tail empty after trimming"));
        }
        let source = relation.kg().clone();
        Ok(Tuple {
            id: id.into(),
            head,
            relation,
            tail,
            weight: None,
            source,
            split: None,
        })
    }

    pub fn with_weight(mut self, weight: f64) -> Result<Self> {
        if weight.is_nan() || weight < 0.0 {
            return Err(Error::invalid(
                "tuple",
                format!("negative weight {weight}"),
            ));
        }
        self.weight = Some(weight);
        Ok(self)
    }

    pub fn with_source(mut self, source: impl Into<KgId>) -> Self {
        self.source = source.into();
        self
    }

    pub fn with_split(mut self, split: Split) -> Self {
        self.split = Some(split);
        self
    }
}

/// Load the shipped relation registry together with the default cross-KG
/// mapping (conceptnet/transomcs/atomic into the atomic2020 vocabulary).
pub fn load_default_registries() -> (&'static RelationRegistry, &'static RelationMapping) {
    (crate::data::default_registry(), crate::data::default_mapping())
}
