//! Relation registry: the per-KG relation vocabulary, category map, and
//! spelling-variant aliases.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::kg::{KgId, RelationCategory, RelationId};
use crate::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RelationRegistry {
    relations: BTreeMap<KgId, BTreeSet<String>>,
    categories: HashMap<RelationId, RelationCategory>,
    // (kg, variant) -> canonical name; the kg "*" slot applies to any KG.
    aliases: HashMap<(KgId, String), String>,
    version: String,
}

const ANY_KG: &str = "*";

impl RelationRegistry {
    pub fn new() -> Self {
        RelationRegistry {
            version: "unversioned".to_string(),
            ..Default::default()
        }
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn insert(&mut self, relation: RelationId, category: RelationCategory) {
        self.relations
            .entry(relation.kg().clone())
            .or_default()
            .insert(relation.name().to_string());
        self.categories.insert(relation, category);
    }

    pub fn insert_alias(&mut self, kg: Option<&str>, variant: &str, canonical: &str) {
        let kg = KgId::new(kg.unwrap_or(ANY_KG));
        self.aliases
            .insert((kg, variant.to_string()), canonical.to_string());
    }

    pub fn contains(&self, relation: &RelationId) -> bool {
        self.relations
            .get(relation.kg())
            .is_some_and(|names| names.contains(relation.name()))
    }

    /// Resolve a (kg, label) pair to a canonical registry relation. Tries the
    /// exact name, then KG-specific and wildcard aliases, then the same chain
    /// with internal whitespace removed (labels like "Not Desires" appear in
    /// the wild).
    pub fn resolve(&self, kg: &str, name: &str) -> Option<RelationId> {
        let kg_id = KgId::new(kg);
        if let Some(rel) = self.resolve_exact(&kg_id, name.trim()) {
            return Some(rel);
        }
        let squeezed: String = name.chars().filter(|c| !c.is_whitespace()).collect();
        if squeezed != name {
            return self.resolve_exact(&kg_id, &squeezed);
        }
        None
    }

    fn resolve_exact(&self, kg: &KgId, name: &str) -> Option<RelationId> {
        if let Some(names) = self.relations.get(kg) {
            if names.contains(name) {
                return Some(RelationId::known(kg.clone(), name));
            }
        }
        let canonical = self
            .aliases
            .get(&(kg.clone(), name.to_string()))
            .or_else(|| self.aliases.get(&(KgId::new(ANY_KG), name.to_string())))?;
        let names = self.relations.get(kg)?;
        names
            .contains(canonical)
            .then(|| RelationId::known(kg.clone(), canonical))
    }

    pub fn category(&self, relation: &RelationId) -> Option<RelationCategory> {
        self.categories.get(relation).copied()
    }

    pub fn kgs(&self) -> impl Iterator<Item = &KgId> {
        self.relations.keys()
    }

    pub fn relations_for<'a>(&'a self, kg: &str) -> impl Iterator<Item = RelationId> + 'a {
        let kg = KgId::new(kg);
        self.relations
            .get(&kg)
            .into_iter()
            .flat_map(move |names| {
                let kg = kg.clone();
                names
                    .iter()
                    .map(move |name| RelationId::known(kg.clone(), name))
            })
    }

    /// Parse the tabular registry format (`rel`/`alias` records, `#` comments,
    /// a `# version:` header).
    pub fn from_tsv(text: &str, origin: &str) -> Result<Self> {
        let mut registry = RelationRegistry::new();
        registry.version = parse_version(text);
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            match fields.as_slice() {
                ["rel", kg, name, category] => {
                    let relation = RelationId::new(*kg, name)
                        .map_err(|e| Error::data(origin, idx + 1, e.to_string()))?;
                    let category = RelationCategory::parse(category).ok_or_else(|| {
                        Error::data(origin, idx + 1, format!("unknown category {category:?}"))
                    })?;
                    registry.insert(relation, category);
                }
                ["alias", kg, variant, canonical] => {
                    let kg = if *kg == ANY_KG { None } else { Some(*kg) };
                    registry.insert_alias(kg, variant, canonical);
                }
                _ => {
                    return Err(Error::data(
                        origin,
                        idx + 1,
                        format!("expected 'rel' or 'alias' record, got {line:?}"),
                    ));
                }
            }
        }
        Ok(registry)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = format!("# version: {}\n", self.version);
        for (kg, names) in &self.relations {
            for name in names {
                let rel = RelationId::known(kg.clone(), name);
                let category = self.category(&rel).unwrap_or(RelationCategory::Other);
                out.push_str(&format!("rel\t{kg}\t{name}\t{category}\n"));
            }
        }
        let mut aliases: Vec<_> = self.aliases.iter().collect();
        aliases.sort();
        for ((kg, variant), canonical) in aliases {
            out.push_str(&format!("alias\t{kg}\t{variant}\t{canonical}\n"));
        }
        out
    }
}

pub(crate) fn parse_version(text: &str) -> String {
    for line in text.lines() {
        let line = line.trim();
        if let Some(rest) = line.strip_prefix("# version:") {
            return rest.trim().to_string();
        }
        if !line.is_empty() && !line.starts_with('#') {
            break;
        }
    }
    "unversioned".to_string()
}
