//! ConceptNet curation: drop non-commonsense relations, apply pattern-based
//! drop/retarget rules, and remap surviving relations into the target
//! vocabulary (primary mapping target). Tuples whose relation has no mapping
//! entry and is not removed pass through unchanged with a warning count.

use regex::Regex;

use crate::ingest::{IngestReport, RejectReason};
use crate::kg::registry::parse_version;
use crate::kg::{RelationId, RelationMapping, RelationRegistry, Tuple, ATOMIC2020};
use crate::{Error, Result};

#[derive(Debug, Clone)]
struct DropRule {
    relation: Option<String>,
    head: Regex,
    tail: Regex,
}

#[derive(Debug, Clone)]
struct RetargetRule {
    relation: String,
    tail: Regex,
    target: String,
}

#[derive(Debug, Clone, Default)]
pub struct CurationRules {
    remove: std::collections::BTreeSet<String>,
    drops: Vec<DropRule>,
    retargets: Vec<RetargetRule>,
    version: String,
}

fn anchored_ci(pattern: &str, origin: &str, line: usize) -> Result<Regex> {
    Regex::new(&format!("(?i)^(?:{pattern})$"))
        .map_err(|e| Error::data(origin, line, format!("bad pattern {pattern:?}: {e}")))
}

impl CurationRules {
    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn removes(&self, relation_name: &str) -> bool {
        self.remove.contains(relation_name)
    }

    /// Parse the tabular rule format (`remove`, `drop`, `retarget` records).
    pub fn from_tsv(text: &str, origin: &str) -> Result<Self> {
        let mut rules = CurationRules {
            version: parse_version(text),
            ..Default::default()
        };
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            match fields.as_slice() {
                ["remove", relation] => {
                    rules.remove.insert(relation.to_string());
                }
                ["drop", relation, head, tail] => {
                    rules.drops.push(DropRule {
                        relation: (*relation != "*").then(|| relation.to_string()),
                        head: anchored_ci(head, origin, idx + 1)?,
                        tail: anchored_ci(tail, origin, idx + 1)?,
                    });
                }
                ["retarget", relation, tail, target] => {
                    rules.retargets.push(RetargetRule {
                        relation: relation.to_string(),
                        tail: anchored_ci(tail, origin, idx + 1)?,
                        target: target.to_string(),
                    });
                }
                _ => {
                    return Err(Error::data(
                        origin,
                        idx + 1,
                        format!("expected remove/drop/retarget record, got {line:?}"),
                    ));
                }
            }
        }
        Ok(rules)
    }
}

/// Streaming curation pass. Feed tuples through [`Curator::process`] and
/// collect the report with [`Curator::finish`].
pub struct Curator<'a> {
    registry: &'a RelationRegistry,
    mapping: &'a RelationMapping,
    rules: &'a CurationRules,
    report: IngestReport,
}

impl<'a> Curator<'a> {
    pub fn new(
        registry: &'a RelationRegistry,
        mapping: &'a RelationMapping,
        rules: &'a CurationRules,
    ) -> Self {
        Curator {
            registry,
            mapping,
            rules,
            report: IngestReport::default(),
        }
    }

    pub fn report(&self) -> &IngestReport {
        &self.report
    }

    pub fn finish(self) -> IngestReport {
        self.report
    }

    pub fn process(&mut self, tuple: Tuple) -> Option<Tuple> {
        // canonicalize spelling variants before rule lookup
        let relation = self
            .registry
            .resolve(tuple.relation.kg().as_str(), tuple.relation.name())
            .unwrap_or_else(|| tuple.relation.clone());

        if self.rules.removes(relation.name()) {
            self.report.reject(RejectReason::RemovedRelation);
            return None;
        }
        for rule in &self.rules.drops {
            let relation_matches = rule
                .relation
                .as_deref()
                .is_none_or(|name| name == relation.name());
            if relation_matches
                && rule.head.is_match(tuple.head.trim())
                && rule.tail.is_match(tuple.tail.trim())
            {
                self.report.reject(RejectReason::PatternDropped);
                return None;
            }
        }
        for rule in &self.rules.retargets {
            if rule.relation == relation.name() && rule.tail.is_match(tuple.tail.trim()) {
                let target = RelationId::known(ATOMIC2020, &rule.target);
                self.report.keep();
                return Some(Tuple {
                    relation: target,
                    ..tuple
                });
            }
        }
        match self.mapping.lookup(&relation) {
            Some(entry) => {
                self.report.keep();
                Some(Tuple {
                    relation: entry.primary.clone(),
                    ..tuple
                })
            }
            None => {
                // no mapping and not removed: emit unchanged with a warning
                self.report.keep();
                self.report.unmapped_kept += 1;
                Some(tuple)
            }
        }
    }
}

/// Curate a whole collection at once.
pub fn apply_conceptnet_curation(
    tuples: impl IntoIterator<Item = Tuple>,
    registry: &RelationRegistry,
    mapping: &RelationMapping,
    rules: &CurationRules,
) -> (Vec<Tuple>, IngestReport) {
    let mut curator = Curator::new(registry, mapping, rules);
    let kept: Vec<Tuple> = tuples
        .into_iter()
        .filter_map(|t| curator.process(t))
        .collect();
    (kept, curator.finish())
}
