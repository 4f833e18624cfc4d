//! Cross-KG relation mapping: each source relation maps to an ordered list of
//! target relations with one designated primary target.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::kg::registry::parse_version;
use crate::kg::{RelationId, RelationRegistry};
use crate::{Error, Result};

/// How multi-target mapping entries are applied during matching.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatchMode {
    /// Only the primary target produces a key (deterministic exports).
    PrimaryOnly,
    /// Every target produces a key (a tuple counts as found if any matches).
    AllTargets,
}

impl MatchMode {
    pub fn as_str(self) -> &'static str {
        match self {
            MatchMode::PrimaryOnly => "primary-only",
            MatchMode::AllTargets => "all-targets",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "primary-only" | "primary" => Some(MatchMode::PrimaryOnly),
            "all-targets" | "all" => Some(MatchMode::AllTargets),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MappingEntry {
    pub source: RelationId,
    pub targets: Vec<RelationId>,
    pub primary: RelationId,
}

#[derive(Debug, Clone, Default)]
pub struct RelationMapping {
    entries: Vec<MappingEntry>,
    by_source: HashMap<RelationId, usize>,
    version: String,
}

impl RelationMapping {
    pub fn new() -> Self {
        RelationMapping {
            version: "unversioned".to_string(),
            ..Default::default()
        }
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn entries(&self) -> &[MappingEntry] {
        &self.entries
    }

    pub fn lookup(&self, source: &RelationId) -> Option<&MappingEntry> {
        self.by_source.get(source).map(|&i| &self.entries[i])
    }

    /// The targets a source relation maps to under the given mode. Empty if
    /// the relation has no entry.
    pub fn targets<'a>(&'a self, source: &RelationId, mode: MatchMode) -> &'a [RelationId] {
        match self.lookup(source) {
            None => &[],
            Some(entry) => match mode {
                MatchMode::PrimaryOnly => std::slice::from_ref(&entry.primary),
                MatchMode::AllTargets => &entry.targets,
            },
        }
    }

    pub fn insert(&mut self, entry: MappingEntry) -> Result<()> {
        if !entry.targets.contains(&entry.primary) {
            return Err(Error::invalid(
                "mapping entry",
                format!("primary {} not among targets", entry.primary),
            ));
        }
        if self.by_source.contains_key(&entry.source) {
            return Err(Error::invalid(
                "mapping entry",
                format!("duplicate source relation {}", entry.source),
            ));
        }
        self.by_source
            .insert(entry.source.clone(), self.entries.len());
        self.entries.push(entry);
        Ok(())
    }

    /// Parse the tabular mapping format: one target per line as
    /// `source-kg <TAB> source-rel <TAB> target-rel <TAB> is-primary`, with a
    /// `# target-kg:` directive naming the target vocabulary (default
    /// "atomic2020").
    pub fn from_tsv(text: &str, origin: &str) -> Result<Self> {
        let mut mapping = RelationMapping::new();
        mapping.version = parse_version(text);

        let mut target_kg = crate::kg::ATOMIC2020.to_string();
        // (source, targets, primary index) accumulated in file order
        let mut pending: Vec<(RelationId, Vec<RelationId>, Option<usize>)> = Vec::new();
        let mut index: HashMap<RelationId, usize> = HashMap::new();

        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if let Some(rest) = line.strip_prefix("# target-kg:") {
                target_kg = rest.trim().to_string();
                continue;
            }
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let [source_kg, source_rel, target_rel, primary_flag] = fields.as_slice() else {
                return Err(Error::data(
                    origin,
                    idx + 1,
                    format!("expected 4 tab-separated fields, got {}", fields.len()),
                ));
            };
            let source = RelationId::new(*source_kg, source_rel)
                .map_err(|e| Error::data(origin, idx + 1, e.to_string()))?;
            let target = RelationId::new(target_kg.as_str(), target_rel)
                .map_err(|e| Error::data(origin, idx + 1, e.to_string()))?;
            let is_primary = match *primary_flag {
                "1" | "true" => true,
                "0" | "false" => false,
                other => {
                    return Err(Error::data(
                        origin,
                        idx + 1,
                        format!("is-primary must be 0 or 1, got {other:?}"),
                    ));
                }
            };
            let slot = *index.entry(source.clone()).or_insert_with(|| {
                pending.push((source.clone(), Vec::new(), None));
                pending.len() - 1
            });
            let (_, targets, primary) = &mut pending[slot];
            if is_primary {
                if primary.is_some() {
                    return Err(Error::data(
                        origin,
                        idx + 1,
                        format!("source {source} has two primary targets"),
                    ));
                }
                *primary = Some(targets.len());
            }
            targets.push(target);
        }

        for (source, targets, primary) in pending {
            let Some(primary_idx) = primary else {
                return Err(Error::data(
                    origin,
                    0,
                    format!("source {source} has no primary target"),
                ));
            };
            let primary = targets[primary_idx].clone();
            mapping.insert(MappingEntry {
                source,
                targets,
                primary,
            })?;
        }
        Ok(mapping)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = format!("# version: {}\n", self.version);
        if let Some(entry) = self.entries.first() {
            out.push_str(&format!("# target-kg: {}\n", entry.primary.kg()));
        }
        for entry in &self.entries {
            for target in &entry.targets {
                let flag = if *target == entry.primary { 1 } else { 0 };
                out.push_str(&format!(
                    "{}\t{}\t{}\t{}\n",
                    entry.source.kg(),
                    entry.source.name(),
                    target.name(),
                    flag
                ));
            }
        }
        out
    }
}

/// Check a mapping against a registry. Violations are data, not failures:
/// the list is empty iff every referenced relation resolves and the mapping
/// invariants hold.
pub fn validate_mapping(mapping: &RelationMapping, registry: &RelationRegistry) -> Vec<String> {
    let mut violations = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for entry in mapping.entries() {
        if !registry.contains(&entry.source) {
            violations.push(format!("unknown source relation {}", entry.source));
        }
        for target in &entry.targets {
            if !registry.contains(target) {
                violations.push(format!(
                    "unknown target relation {} (source {})",
                    target, entry.source
                ));
            }
        }
        if !entry.targets.contains(&entry.primary) {
            violations.push(format!(
                "primary {} of source {} is not among its targets",
                entry.primary, entry.source
            ));
        }
        if !seen.insert(entry.source.clone()) {
            violations.push(format!("source relation {} appears twice", entry.source));
        }
    }
    violations
}
