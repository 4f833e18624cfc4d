//! ATOMIC-style TSV parser: a header row names the event column first, then
//! one column per relation holding a JSON array of tail strings, plus an
//! optional `split` column. Each (event, relation, tail-element) fans out to
//! one tuple; `"none"` elements mark empty tail lists and produce nothing.

use std::io::BufRead;

use crate::ingest::{DedupSet, IngestConfig, IngestReport, RejectReason};
use crate::kg::{RelationId, Split, Tuple, ATOMIC};
use crate::{Error, Result};

pub struct AtomicTsvParser<R> {
    reader: R,
    config: IngestConfig,
    report: IngestReport,
    dedup: DedupSet,
    // header: (column index -> relation name), split column index
    relation_cols: Vec<(usize, String)>,
    split_col: Option<usize>,
    header_read: bool,
    row_no: u64,
    pending: std::collections::VecDeque<Tuple>,
    buf: String,
}

impl<R: BufRead> AtomicTsvParser<R> {
    pub fn new(reader: R, config: IngestConfig) -> Result<Self> {
        config.validate()?;
        Ok(AtomicTsvParser {
            reader,
            config,
            report: IngestReport::default(),
            dedup: DedupSet::default(),
            relation_cols: Vec::new(),
            split_col: None,
            header_read: false,
            row_no: 0,
            pending: std::collections::VecDeque::new(),
            buf: String::new(),
        })
    }

    pub fn report(&self) -> &IngestReport {
        &self.report
    }

    pub fn finish(self) -> IngestReport {
        self.report
    }

    fn read_header(&mut self) -> Result<bool> {
        self.buf.clear();
        if self.reader.read_line(&mut self.buf)? == 0 {
            return Ok(false);
        }
        let header = self.buf.trim_end_matches(['\n', '\r']);
        let cols: Vec<&str> = header.split('\t').collect();
        if cols.len() < 2 {
            return Err(Error::invalid(
                "atomic tsv",
                "header must name an event column and at least one relation column",
            ));
        }
        for (idx, name) in cols.iter().enumerate().skip(1) {
            if name.eq_ignore_ascii_case("split") {
                self.split_col = Some(idx);
            } else {
                self.relation_cols.push((idx, name.to_string()));
            }
        }
        self.header_read = true;
        Ok(true)
    }

    fn process_row(&mut self) {
        let line = self.buf.trim_end_matches(['\n', '\r']).to_string();
        if line.is_empty() {
            return;
        }
        self.row_no += 1;
        let fields: Vec<&str> = line.split('\t').collect();
        let event = fields[0].trim();
        if event.is_empty() {
            self.report.reject(RejectReason::Malformed);
            return;
        }
        let split = match self.split_col.and_then(|i| fields.get(i)) {
            None => None,
            Some(cell) if cell.trim().is_empty() => None,
            Some(cell) => match Split::parse(cell.trim()) {
                Some(split) => Some(split),
                None => {
                    self.report.reject(RejectReason::Malformed);
                    return;
                }
            },
        };

        for (col, rel_name) in &self.relation_cols {
            let Some(cell) = fields.get(*col) else {
                continue;
            };
            let cell = cell.trim();
            if cell.is_empty() || cell == "[]" {
                continue;
            }
            let Ok(tails) = serde_json::from_str::<Vec<String>>(cell) else {
                // unparseable cell: one malformed record, the row continues
                self.report.reject(RejectReason::Malformed);
                continue;
            };
            for (elem_idx, tail) in tails.iter().enumerate() {
                let tail = tail.trim();
                if tail.eq_ignore_ascii_case("none") {
                    self.report.none_tails += 1;
                    continue;
                }
                if tail.is_empty() {
                    self.report.reject(RejectReason::Malformed);
                    continue;
                }
                if let Some(reason) = self.config.relation_reject(rel_name) {
                    self.report.reject(reason);
                    continue;
                }
                if self.config.weight_reject(None).is_some() {
                    self.report.reject(RejectReason::LowWeight);
                    continue;
                }
                if self.config.dedup_exact && self.dedup.is_duplicate(event, rel_name, tail) {
                    self.report.reject(RejectReason::Duplicate);
                    continue;
                }
                let Ok(relation) = RelationId::new(ATOMIC, rel_name) else {
                    self.report.reject(RejectReason::Malformed);
                    continue;
                };
                let id = format!("{ATOMIC}:{}:{}:{}", self.row_no, rel_name, elem_idx);
                let mut tuple =
                    Tuple::new(id, event, relation, tail).expect("fields validated above");
                if let Some(s) = split {
                    tuple = tuple.with_split(s);
                }
                self.report.keep();
                self.pending.push_back(tuple);
            }
        }
    }

    pub fn next_tuple(&mut self) -> Result<Option<Tuple>> {
        loop {
            if let Some(tuple) = self.pending.pop_front() {
                return Ok(Some(tuple));
            }
            if !self.header_read && !self.read_header()? {
                return Ok(None);
            }
            self.buf.clear();
            if self.reader.read_line(&mut self.buf)? == 0 {
                return Ok(None);
            }
            self.process_row();
        }
    }
}

pub fn parse_atomic_tsv<R: BufRead>(
    reader: R,
    config: IngestConfig,
) -> Result<(Vec<Tuple>, IngestReport)> {
    let mut parser = AtomicTsvParser::new(reader, config)?;
    let mut tuples = Vec::new();
    while let Some(tuple) = parser.next_tuple()? {
        tuples.push(tuple);
    }
    Ok((tuples, parser.finish()))
}
