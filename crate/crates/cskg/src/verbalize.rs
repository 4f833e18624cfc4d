//! Render tuples into natural-language and LM-ready forms: human-readable
//! templates ("HEAD <template> TAIL"), zero-shot prefixes, delimiter-token
//! training lines, and few-shot priming blocks.

use std::collections::HashMap;

use rand::seq::SliceRandom;

use crate::kg::registry::parse_version;
use crate::kg::{RelationId, RelationRegistry, Split, Tuple};
use crate::seed::derive_rng;
use crate::{Error, Result};

pub const GEN_TOKEN: &str = "[GEN]";
pub const SEP_TOKEN: &str = "[SEP]";

/// Relation -> connective phrase table. Entries may be KG-specific or
/// wildcard ("*"); lookups fall back from exact to wildcard to the
/// registry-canonical spelling.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TemplateTable {
    exact: HashMap<RelationId, String>,
    by_name: HashMap<String, String>,
    version: String,
}

impl TemplateTable {
    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn from_tsv(text: &str, origin: &str) -> Result<Self> {
        let mut table = TemplateTable {
            version: parse_version(text),
            ..Default::default()
        };
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim_end();
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let [kg, relation, template] = fields.as_slice() else {
                return Err(Error::data(origin, idx + 1, "expected 3 fields"));
            };
            if template.trim().is_empty() || template.contains('\n') {
                return Err(Error::data(
                    origin,
                    idx + 1,
                    "template must be a single non-empty phrase",
                ));
            }
            if *kg == "*" {
                table.by_name.insert(relation.to_string(), template.trim().to_string());
            } else {
                let relation = RelationId::new(*kg, relation)
                    .map_err(|e| Error::data(origin, idx + 1, e.to_string()))?;
                table.exact.insert(relation, template.trim().to_string());
            }
        }
        Ok(table)
    }

    pub fn lookup(&self, relation: &RelationId, registry: &RelationRegistry) -> Option<&str> {
        if let Some(template) = self.exact.get(relation) {
            return Some(template);
        }
        if let Some(template) = self.by_name.get(relation.name()) {
            return Some(template);
        }
        let canonical = registry.resolve(relation.kg().as_str(), relation.name())?;
        self.exact
            .get(&canonical)
            .or_else(|| self.by_name.get(canonical.name()))
            .map(String::as_str)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.by_name
            .keys()
            .map(String::as_str)
            .chain(self.exact.keys().map(|r| r.name()))
    }
}

fn template_for<'a>(
    relation: &RelationId,
    table: &'a TemplateTable,
    registry: &RelationRegistry,
) -> Result<&'a str> {
    table
        .lookup(relation, registry)
        .ok_or_else(|| Error::MissingTemplate(relation.to_string()))
}

/// "HEAD <template> TAIL", the form shown to human raters.
pub fn render_human(
    tuple: &Tuple,
    table: &TemplateTable,
    registry: &RelationRegistry,
) -> Result<String> {
    let template = template_for(&tuple.relation, table, registry)?;
    Ok(format!("{} {} {}", tuple.head, template, tuple.tail))
}

/// "HEAD <template>", the zero-shot query form.
pub fn render_prefix(
    head: &str,
    relation: &RelationId,
    table: &TemplateTable,
    registry: &RelationRegistry,
) -> Result<String> {
    let template = template_for(relation, table, registry)?;
    Ok(format!("{head} {template}"))
}

/// LM training line: `HEAD RELATION [GEN] TAIL [SEP]`.
pub fn render_training_line(tuple: &Tuple) -> String {
    format!(
        "{} {} {GEN_TOKEN} {} {SEP_TOKEN}",
        tuple.head,
        tuple.relation.name(),
        tuple.tail
    )
}

/// Export guard: heads/tails containing the literal delimiter tokens are
/// rejected rather than escaped, keeping the format bit-exact.
pub fn check_training_exportable(tuple: &Tuple) -> Result<()> {
    for (what, text) in [("head", tuple.head.as_str()), ("tail", tuple.tail.as_str())] {
        if text.contains(GEN_TOKEN) || text.contains(SEP_TOKEN) {
            return Err(Error::invalid(
                "training line",
                format!(
                    "tuple {} {what} contains a literal delimiter token",
                    tuple.id
                ),
            ));
        }
    }
    Ok(())
}

/// Inverse of [`render_training_line`] for delimiter-free tuples.
pub fn parse_training_line(line: &str) -> Result<(String, String, String)> {
    let bad = || Error::invalid("training line", format!("cannot parse {line:?}"));
    let sep_suffix = format!(" {SEP_TOKEN}");
    let body = line.strip_suffix(&sep_suffix).ok_or_else(bad)?;
    let gen_delim = format!(" {GEN_TOKEN} ");
    let split_at = body.find(&gen_delim).ok_or_else(bad)?;
    let (prefix, tail) = (&body[..split_at], &body[split_at + gen_delim.len()..]);
    let rel_at = prefix.rfind(' ').ok_or_else(bad)?;
    let (head, relation) = (&prefix[..rel_at], &prefix[rel_at + 1..]);
    if head.is_empty() || relation.is_empty() {
        return Err(bad());
    }
    Ok((head.to_string(), relation.to_string(), tail.to_string()))
}

/// Few-shot priming block: `k` seeded-random train examples rendered as
/// "prefix TAIL" lines, then the query prefix. `k = 0` degenerates to the
/// zero-shot prompt.
pub fn build_fewshot_block(
    relation: &RelationId,
    query_head: &str,
    pool: &[Tuple],
    k: usize,
    seed: u64,
    table: &TemplateTable,
    registry: &RelationRegistry,
) -> Result<String> {
    let canonical = registry
        .resolve(relation.kg().as_str(), relation.name())
        .unwrap_or_else(|| relation.clone());
    let eligible: Vec<&Tuple> = pool
        .iter()
        .filter(|t| {
            let t_rel = registry
                .resolve(t.relation.kg().as_str(), t.relation.name())
                .unwrap_or_else(|| t.relation.clone());
            t_rel == canonical && !matches!(t.split, Some(Split::Dev) | Some(Split::Test))
        })
        .collect();
    if eligible.len() < k {
        return Err(Error::InsufficientPool {
            relation: relation.to_string(),
            available: eligible.len(),
            requested: k,
        });
    }
    let mut indices: Vec<usize> = (0..eligible.len()).collect();
    let mut rng = derive_rng(seed, "fewshot");
    indices.shuffle(&mut rng);

    let mut lines = Vec::with_capacity(k + 1);
    for &idx in indices.iter().take(k) {
        let example = eligible[idx];
        let prefix = render_prefix(&example.head, &canonical, table, registry)?;
        lines.push(format!("{prefix} {}", example.tail));
    }
    lines.push(render_prefix(query_head, &canonical, table, registry)?);
    Ok(lines.join("\n"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::{ATOMIC2020, CONCEPTNET};

    fn fixtures() -> (&'static TemplateTable, &'static RelationRegistry) {
        (crate::data::default_templates(), crate::data::default_registry())
    }

    fn tuple(head: &str, kg: &str, rel: &str, tail: &str) -> Tuple {
        Tuple::new("t1", head, RelationId::new(kg, rel).unwrap(), tail).unwrap()
    }

    #[test]
    fn render_human_examples() {
        let (table, registry) = fixtures();
        let t = tuple(
            "X runs out of steam",
            ATOMIC2020,
            "xWant",
            "to get some energy",
        );
        assert_eq!(
            render_human(&t, table, registry).unwrap(),
            "X runs out of steam as a result, PersonX wants to get some energy"
        );
        let t = tuple("bread", CONCEPTNET, "AtLocation", "pantry");
        assert_eq!(
            render_human(&t, table, registry).unwrap(),
            "bread located or found at/in/on pantry"
        );
        let t = tuple("a", "mystery-kg", "Unknown", "b");
        assert!(matches!(
            render_human(&t, table, registry),
            Err(Error::MissingTemplate(_))
        ));
    }

    #[test]
    fn render_prefix_examples() {
        let (table, registry) = fixtures();
        let hindered = RelationId::new(ATOMIC2020, "HinderedBy").unwrap();
        assert_eq!(
            render_prefix("X adopts a cat", &hindered, table, registry).unwrap(),
            "X adopts a cat can be hindered by"
        );
        let capable = RelationId::new(ATOMIC2020, "CapableOf").unwrap();
        assert_eq!(
            render_prefix("baker", &capable, table, registry).unwrap(),
            "baker is/are capable of"
        );
    }

    #[test]
    fn prefix_is_a_prefix_of_render_human() {
        let (table, registry) = fixtures();
        for rel in crate::data::default_registry().relations_for(ATOMIC2020) {
            let t = Tuple::new("t1", "some head", rel.clone(), "some tail").unwrap();
            let human = render_human(&t, table, registry).unwrap();
            let prefix = render_prefix(&t.head, &rel, table, registry).unwrap();
            assert!(human.starts_with(&prefix), "{human:?} vs {prefix:?}");
        }
    }

    #[test]
    fn every_registry_relation_has_a_template() {
        let (table, registry) = fixtures();
        let kgs: Vec<String> = registry.kgs().map(|kg| kg.to_string()).collect();
        for kg in kgs {
            for rel in registry.relations_for(&kg) {
                assert!(
                    table.lookup(&rel, registry).is_some(),
                    "missing template for {rel}"
                );
            }
        }
    }

    #[test]
    fn training_line_format_is_exact() {
        let t = tuple("bread", ATOMIC2020, "MadeUpOf", "dough");
        assert_eq!(render_training_line(&t), "bread MadeUpOf [GEN] dough [SEP]");
        let t = tuple("a", ATOMIC2020, "xAttr", "b");
        assert_eq!(render_training_line(&t), "a xAttr [GEN] b [SEP]");
    }

    #[test]
    fn training_line_round_trip() {
        let t = tuple("X runs out of steam", ATOMIC2020, "xWant", "to get some energy");
        let line = render_training_line(&t);
        let (head, relation, tail) = parse_training_line(&line).unwrap();
        assert_eq!(head, t.head);
        assert_eq!(relation, t.relation.name());
        assert_eq!(tail, t.tail);
        assert!(parse_training_line("no delimiters here").is_err());
    }

    #[test]
    fn delimiter_tuples_are_rejected_at_export() {
        let t = tuple("bad [GEN] head", ATOMIC2020, "xWant", "tail");
        assert!(check_training_exportable(&t).is_err());
        let t = tuple("head", ATOMIC2020, "xWant", "bad [SEP] tail");
        assert!(check_training_exportable(&t).is_err());
        let t = tuple("head", ATOMIC2020, "xWant", "tail");
        assert!(check_training_exportable(&t).is_ok());
    }

    #[test]
    fn fewshot_block_shape_and_determinism() {
        let (table, registry) = fixtures();
        let rel = RelationId::new(ATOMIC2020, "xWant").unwrap();
        let pool: Vec<Tuple> = (0..100)
            .map(|i| {
                Tuple::new(
                    format!("p{i}"),
                    format!("head {i}"),
                    rel.clone(),
                    format!("tail {i}"),
                )
                .unwrap()
                .with_split(Split::Train)
            })
            .collect();
        let block = build_fewshot_block(&rel, "X naps", &pool, 5, 9, table, registry).unwrap();
        let lines: Vec<&str> = block.lines().collect();
        assert_eq!(lines.len(), 6);
        assert_eq!(*lines.last().unwrap(), "X naps as a result, PersonX wants");
        for line in &lines[..5] {
            assert!(line.contains("as a result, PersonX wants"));
        }
        let again = build_fewshot_block(&rel, "X naps", &pool, 5, 9, table, registry).unwrap();
        assert_eq!(block, again);

        // k = 0 degenerates to the zero-shot prompt
        let zero = build_fewshot_block(&rel, "X naps", &pool, 0, 9, table, registry).unwrap();
        assert_eq!(zero, "X naps as a result, PersonX wants");
    }

    #[test]
    fn fewshot_pool_filters_relation_and_split() {
        let (table, registry) = fixtures();
        let rel = RelationId::new(ATOMIC2020, "xWant").unwrap();
        let other = RelationId::new(ATOMIC2020, "xAttr").unwrap();
        let pool = vec![
            Tuple::new("p1", "h1", rel.clone(), "t1")
                .unwrap()
                .with_split(Split::Train),
            Tuple::new("p2", "h2", rel.clone(), "t2")
                .unwrap()
                .with_split(Split::Test),
            Tuple::new("p3", "h3", other, "t3").unwrap().with_split(Split::Train),
        ];
        // only p1 is eligible: p2 is test-split, p3 is another relation
        let err = build_fewshot_block(&rel, "q", &pool, 2, 1, table, registry).unwrap_err();
        match err {
            Error::InsufficientPool { available, requested, .. } => {
                assert_eq!(available, 1);
                assert_eq!(requested, 2);
            }
            other => panic!("unexpected error {other}"),
        }
    }
}
