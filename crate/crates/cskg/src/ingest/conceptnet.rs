//! ConceptNet assertion-dump parser. Lines are tab-separated
//! (edge URI, relation URI, start URI, end URI, JSON metadata); concepts are
//! URIs like `/c/en/bread/n` whose third segment is the term (underscores
//! encode spaces) and whose second segment is the language.

use std::io::BufRead;

use crate::ingest::{DedupSet, IngestConfig, IngestReport, RejectReason};
use crate::kg::{RelationId, Tuple, CONCEPTNET};
use crate::Result;

pub struct ConceptNetParser<R> {
    reader: R,
    config: IngestConfig,
    report: IngestReport,
    dedup: DedupSet,
    line_no: u64,
    buf: String,
}

struct Concept {
    term: String,
    english: bool,
}

fn parse_concept(uri: &str) -> Option<Concept> {
    let mut segments = uri.split('/');
    let empty = segments.next()?; // URI starts with '/'
    if !empty.is_empty() || segments.next()? != "c" {
        return None;
    }
    let lang = segments.next()?;
    let term = segments.next()?;
    if term.is_empty() {
        return None;
    }
    Some(Concept {
        term: term.replace('_', " "),
        english: lang == "en",
    })
}

fn parse_weight(meta: &str) -> Option<f64> {
    let value: serde_json::Value = serde_json::from_str(meta).ok()?;
    let weight = value.get("weight")?.as_f64()?;
    (weight >= 0.0).then_some(weight)
}

impl<R: BufRead> ConceptNetParser<R> {
    pub fn new(reader: R, config: IngestConfig) -> Result<Self> {
        config.validate()?;
        Ok(ConceptNetParser {
            reader,
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

    /// Next kept tuple, or `None` at end of input. Data errors are counted
    /// and skipped; only I/O errors surface.
    pub fn next_tuple(&mut self) -> Result<Option<Tuple>> {
        loop {
            self.buf.clear();
            if self.reader.read_line(&mut self.buf)? == 0 {
                return Ok(None);
            }
            self.line_no += 1;
            let line = self.buf.trim_end_matches(['\n', '\r']);
            if line.is_empty() {
                continue;
            }

            let fields: Vec<&str> = line.splitn(5, '\t').collect();
            if fields.len() < 5 {
                self.report.reject(RejectReason::Malformed);
                continue;
            }
            let Some(rel_name) = fields[1].strip_prefix("/r/").filter(|n| {
                !n.is_empty() && !n.chars().any(char::is_whitespace)
            }) else {
                self.report.reject(RejectReason::Malformed);
                continue;
            };
            let (Some(start), Some(end)) = (parse_concept(fields[2]), parse_concept(fields[3]))
            else {
                self.report.reject(RejectReason::Malformed);
                continue;
            };
            if start.term.trim().is_empty() || end.term.trim().is_empty() {
                self.report.reject(RejectReason::Malformed);
                continue;
            }

            if self.config.english_only && !(start.english && end.english) {
                self.report.reject(RejectReason::NonEnglish);
                continue;
            }
            if let Some(reason) = self.config.relation_reject(rel_name) {
                self.report.reject(reason);
                continue;
            }
            let weight = parse_weight(fields[4]);
            if let Some(reason) = self.config.weight_reject(weight) {
                self.report.reject(reason);
                continue;
            }
            if self.config.dedup_exact
                && self.dedup.is_duplicate(&start.term, rel_name, &end.term)
            {
                self.report.reject(RejectReason::Duplicate);
                continue;
            }

            let relation = RelationId::new(CONCEPTNET, rel_name)
                .expect("relation name validated above");
            let mut tuple = Tuple::new(
                format!("{CONCEPTNET}:{}", self.line_no),
                start.term,
                relation,
                end.term,
            )
            .expect("terms validated above");
            if let Some(w) = weight {
                tuple = tuple.with_weight(w).expect("weight validated above");
            }
            self.report.keep();
            return Ok(Some(tuple));
        }
    }
}

/// Collect an entire dump into memory.
pub fn parse_conceptnet_edges<R: BufRead>(
    reader: R,
    config: IngestConfig,
) -> Result<(Vec<Tuple>, IngestReport)> {
    let mut parser = ConceptNetParser::new(reader, config)?;
    let mut tuples = Vec::new();
    while let Some(tuple) = parser.next_tuple()? {
        tuples.push(tuple);
    }
    Ok((tuples, parser.finish()))
}
