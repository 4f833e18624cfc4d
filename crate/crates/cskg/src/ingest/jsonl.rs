//! Canonical tuple JSONL: one object per line with `head`, `relation`,
//! `tail`, and optional `weight`, `split`, `id`. This is the interchange
//! format every downstream stage consumes.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::Deserialize;

use crate::ingest::{open_input, DedupSet, IngestConfig, IngestReport, RejectReason};
use crate::kg::{KgId, KnowledgeGraph, RelationId, Split, Tuple};
use crate::Result;

#[derive(Deserialize)]
struct JsonTupleLine {
    head: Option<String>,
    relation: Option<String>,
    tail: Option<String>,
    #[serde(default)]
    weight: Option<serde_json::Value>,
    #[serde(default)]
    split: Option<String>,
    #[serde(default)]
    id: Option<String>,
}

pub struct JsonlParser<R> {
    reader: R,
    kg: KgId,
    config: IngestConfig,
    report: IngestReport,
    dedup: DedupSet,
    line_no: u64,
    buf: String,
}

impl<R: BufRead> JsonlParser<R> {
    pub fn new(reader: R, kg: impl Into<KgId>, config: IngestConfig) -> Result<Self> {
        config.validate()?;
        Ok(JsonlParser {
            reader,
            kg: kg.into(),
            config,
            report: IngestReport::default(),
            dedup: DedupSet::default(),
            line_no: 0,
            buf: String::new(),
        })
    }

    pub fn report(&self) -> &IngestReport {
        &self.report
    }

    pub fn finish(self) -> IngestReport {
        self.report
    }

    pub fn next_tuple(&mut self) -> Result<Option<Tuple>> {
        loop {
            self.buf.clear();
            if self.reader.read_line(&mut self.buf)? == 0 {
                return Ok(None);
            }
            self.line_no += 1;
            let line = self.buf.trim();
            if line.is_empty() {
                continue;
            }

            let Ok(raw) = serde_json::from_str::<JsonTupleLine>(line) else {
                self.report.reject(RejectReason::Malformed);
                continue;
            };
            let (Some(head), Some(rel_name), Some(tail)) = (raw.head, raw.relation, raw.tail)
            else {
                self.report.reject(RejectReason::Malformed);
                continue;
            };
            if head.trim().is_empty() || tail.trim().is_empty() {
                self.report.reject(RejectReason::Malformed);
                continue;
            }
            let Ok(relation) = RelationId::new(self.kg.clone(), &rel_name) else {
                self.report.reject(RejectReason::Malformed);
                continue;
            };
            let split = match raw.split.as_deref() {
                None | Some("") => None,
                Some(s) => match Split::parse(s) {
                    Some(split) => Some(split),
                    None => {
                        self.report.reject(RejectReason::Malformed);
                        continue;
                    }
                },
            };
            // non-numeric or negative weights are treated as absent
            let weight = raw
                .weight
                .as_ref()
                .and_then(serde_json::Value::as_f64)
                .filter(|w| *w >= 0.0);

            if let Some(reason) = self.config.relation_reject(&rel_name) {
                self.report.reject(reason);
                continue;
            }
            if let Some(reason) = self.config.weight_reject(weight) {
                self.report.reject(reason);
                continue;
            }
            if self.config.dedup_exact && self.dedup.is_duplicate(&head, &rel_name, &tail) {
                self.report.reject(RejectReason::Duplicate);
                continue;
            }

            let id = raw
                .id
                .unwrap_or_else(|| format!("{}:{}", self.kg, self.line_no));
            let mut tuple =
                Tuple::new(id, head, relation, tail).expect("fields validated above");
            tuple = tuple.with_source(self.kg.clone());
            if let Some(w) = weight {
                tuple = tuple.with_weight(w).expect("weight validated above");
            }
            if let Some(s) = split {
                tuple = tuple.with_split(s);
            }
            self.report.keep();
            return Ok(Some(tuple));
        }
    }
}

pub fn parse_generic_jsonl<R: BufRead>(
    reader: R,
    kg: impl Into<KgId>,
    config: IngestConfig,
) -> Result<(Vec<Tuple>, IngestReport)> {
    let mut parser = JsonlParser::new(reader, kg, config)?;
    let mut tuples = Vec::new();
    while let Some(tuple) = parser.next_tuple()? {
        tuples.push(tuple);
    }
    Ok((tuples, parser.finish()))
}

/// Load a canonical JSONL file into a knowledge graph.
pub fn read_kg_jsonl(
    path: &Path,
    kg: impl Into<KgId>,
    config: IngestConfig,
) -> Result<(KnowledgeGraph, IngestReport)> {
    let kg = kg.into();
    let reader = open_input(path)?;
    let (tuples, report) = parse_generic_jsonl(reader, kg.clone(), config)?;
    let graph = KnowledgeGraph::from_tuples(kg, tuples)?;
    Ok((graph, report))
}

/// Serialize tuples back to the canonical JSONL format. The relation is
/// written as its bare name; the KG is implied by the consumer.
pub fn write_tuples_jsonl<'a, W: Write>(
    writer: &mut W,
    tuples: impl IntoIterator<Item = &'a Tuple>,
) -> Result<()> {
    for tuple in tuples {
        let mut obj = serde_json::Map::new();
        obj.insert("head".into(), tuple.head.clone().into());
        obj.insert("relation".into(), tuple.relation.name().into());
        obj.insert("tail".into(), tuple.tail.clone().into());
        if let Some(w) = tuple.weight {
            obj.insert("weight".into(), w.into());
        }
        if let Some(s) = tuple.split {
            obj.insert("split".into(), s.as_str().into());
        }
        obj.insert("id".into(), tuple.id.as_str().into());
        serde_json::to_writer(&mut *writer, &serde_json::Value::Object(obj))?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::InputFormat;
    use crate::kg::ATOMIC2020;

    fn plain_config() -> IngestConfig {
        IngestConfig::new(InputFormat::GenericJsonl)
    }

    #[test]
    fn keeps_minimal_lines() {
        let input = r#"{"head":"bread","relation":"MadeUpOf","tail":"dough"}"#;
        let (tuples, report) =
            parse_generic_jsonl(input.as_bytes(), ATOMIC2020, plain_config()).unwrap();
        assert_eq!(tuples.len(), 1);
        assert_eq!(tuples[0].relation.to_string(), "atomic2020:MadeUpOf");
        assert_eq!(tuples[0].id.as_str(), "atomic2020:1");
        assert!(report.is_conserved());
    }

    #[test]
    fn relation_resolves_in_registry() {
        let input = r#"{"head":"X runs out of steam","relation":"HinderedBy","tail":"drinks too much coffee"}"#;
        let (tuples, _) =
            parse_generic_jsonl(input.as_bytes(), ATOMIC2020, plain_config()).unwrap();
        let registry = crate::data::default_registry();
        assert!(registry.contains(&tuples[0].relation));
    }

    #[test]
    fn dedup_rejects_second_occurrence() {
        let line = r#"{"head":"bread","relation":"MadeUpOf","tail":"dough"}"#;
        let input = format!("{line}\n{line}\n");
        let mut config = plain_config();
        config.dedup_exact = true;
        let (tuples, report) =
            parse_generic_jsonl(input.as_bytes(), ATOMIC2020, config).unwrap();
        assert_eq!(tuples.len(), 1);
        assert_eq!(report.rejected_by[&RejectReason::Duplicate], 1);
    }

    #[test]
    fn missing_fields_are_malformed() {
        let input = r#"{"head":"bread","tail":"dough"}
{"relation":"MadeUpOf"}
not json
{"head":" ","relation":"MadeUpOf","tail":"dough"}
{"head":"a","relation":"Made Of","tail":"b"}
{"head":"a","relation":"MadeUpOf","tail":"b","split":"holdout"}"#;
        let (tuples, report) =
            parse_generic_jsonl(input.as_bytes(), ATOMIC2020, plain_config()).unwrap();
        assert!(tuples.is_empty());
        assert_eq!(report.rejected_by[&RejectReason::Malformed], 6);
        assert!(report.is_conserved());
    }

    #[test]
    fn split_weight_and_id_round_trip() {
        let input = r#"{"head":"a","relation":"xWant","tail":"b","weight":0.75,"split":"test","id":"custom-7"}"#;
        let (tuples, _) =
            parse_generic_jsonl(input.as_bytes(), ATOMIC2020, plain_config()).unwrap();
        let tuple = &tuples[0];
        assert_eq!(tuple.weight, Some(0.75));
        assert_eq!(tuple.split, Some(Split::Test));
        assert_eq!(tuple.id.as_str(), "custom-7");

        let mut out = Vec::new();
        write_tuples_jsonl(&mut out, tuples.iter()).unwrap();
        let (reloaded, _) =
            parse_generic_jsonl(out.as_slice(), ATOMIC2020, plain_config()).unwrap();
        assert_eq!(reloaded, tuples);
    }

    #[test]
    fn determinism_ids_included() {
        let input = r#"{"head":"a","relation":"xWant","tail":"b"}
{"head":"c","relation":"xAttr","tail":"d"}"#;
        let (first, _) =
            parse_generic_jsonl(input.as_bytes(), ATOMIC2020, plain_config()).unwrap();
        let (second, _) =
            parse_generic_jsonl(input.as_bytes(), ATOMIC2020, plain_config()).unwrap();
        assert_eq!(first, second);
    }
}
