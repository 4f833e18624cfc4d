//! Streaming parsers for KG dump formats plus shared filtering (language,
//! relation, weight, exact-duplicate) and per-record rejection accounting.
//! Malformed records are counted and skipped; parsers never abort the stream
//! on data errors, only on I/O failure.

mod atomic_tsv;
mod conceptnet;
mod curation;
mod jsonl;

pub use atomic_tsv::{parse_atomic_tsv, AtomicTsvParser};
pub use conceptnet::{parse_conceptnet_edges, ConceptNetParser};
pub use curation::{apply_conceptnet_curation, CurationRules, Curator};
pub use jsonl::{parse_generic_jsonl, read_kg_jsonl, write_tuples_jsonl, JsonlParser};

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputFormat {
    ConceptnetEdges,
    GenericJsonl,
    AtomicTsv,
}

impl InputFormat {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "conceptnet-edges" | "conceptnet" => Some(InputFormat::ConceptnetEdges),
            "generic-jsonl" | "jsonl" => Some(InputFormat::GenericJsonl),
            "atomic-tsv" | "atomic" => Some(InputFormat::AtomicTsv),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            InputFormat::ConceptnetEdges => "conceptnet-edges",
            InputFormat::GenericJsonl => "generic-jsonl",
            InputFormat::AtomicTsv => "atomic-tsv",
        }
    }
}

/// Why a record was rejected.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RejectReason {
    Malformed,
    NonEnglish,
    LowWeight,
    BlacklistedRelation,
    NotWhitelisted,
    Duplicate,
    /// Curation: relation is on the removal list.
    RemovedRelation,
    /// Curation: tuple matched a drop pattern.
    PatternDropped,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    /// Records consumed: lines for line-oriented formats; candidate tuples
    /// (and malformed cells/rows) for the fan-out TSV format.
    pub read: u64,
    pub kept: u64,
    pub rejected_by: BTreeMap<RejectReason, u64>,
    /// Curation only: tuples emitted unchanged because their relation has no
    /// mapping entry (warning, still counted in `kept`).
    #[serde(default)]
    pub unmapped_kept: u64,
    /// ATOMIC TSV only: "none" placeholder cells. These mark empty tail
    /// lists, not records, so they sit outside the read/kept/rejected
    /// conservation.
    #[serde(default)]
    pub none_tails: u64,
}

impl IngestReport {
    pub(crate) fn reject(&mut self, reason: RejectReason) {
        self.read += 1;
        *self.rejected_by.entry(reason).or_insert(0) += 1;
    }

    pub(crate) fn keep(&mut self) {
        self.read += 1;
        self.kept += 1;
    }

    pub fn total_rejected(&self) -> u64 {
        self.rejected_by.values().sum()
    }

    /// read = kept + Σ rejected, for every parser and any input.
    pub fn is_conserved(&self) -> bool {
        self.read == self.kept + self.total_rejected()
    }

    pub fn merge(&mut self, other: &IngestReport) {
        self.read += other.read;
        self.kept += other.kept;
        for (reason, count) in &other.rejected_by {
            *self.rejected_by.entry(*reason).or_insert(0) += count;
        }
        self.unmapped_kept += other.unmapped_kept;
        self.none_tails += other.none_tails;
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IngestConfig {
    pub format: InputFormat,
    pub english_only: bool,
    /// Weight threshold. Records with weight below it are rejected; records
    /// exactly at it are kept only when `keep_equal_weight` is set
    /// (ConceptNet rejects <= 0.5, TransOMCS keeps >= 0.5).
    pub min_weight: Option<f64>,
    pub keep_equal_weight: bool,
    pub relation_whitelist: Option<BTreeSet<String>>,
    pub relation_blacklist: Option<BTreeSet<String>>,
    pub dedup_exact: bool,
}

impl IngestConfig {
    pub fn new(format: InputFormat) -> Self {
        IngestConfig {
            format,
            english_only: false,
            min_weight: None,
            keep_equal_weight: false,
            relation_whitelist: None,
            relation_blacklist: None,
            dedup_exact: false,
        }
    }

    /// ConceptNet dump preset: English subset, edge weight <= 0.5 rejected,
    /// exact duplicates removed.
    pub fn conceptnet() -> Self {
        IngestConfig {
            english_only: true,
            min_weight: Some(0.5),
            keep_equal_weight: false,
            dedup_exact: true,
            ..IngestConfig::new(InputFormat::ConceptnetEdges)
        }
    }

    /// TransOMCS preset: confidence >= 0.5 kept, exact duplicates removed.
    pub fn transomcs() -> Self {
        IngestConfig {
            min_weight: Some(0.5),
            keep_equal_weight: true,
            dedup_exact: true,
            ..IngestConfig::new(InputFormat::GenericJsonl)
        }
    }

    /// ATOMIC TSV preset: restrict to the nine relation columns and drop
    /// exact duplicates produced by the fan-out.
    pub fn atomic() -> Self {
        let nine = [
            "oEffect", "oReact", "oWant", "xAttr", "xEffect", "xIntent", "xNeed", "xReact",
            "xWant",
        ];
        IngestConfig {
            relation_whitelist: Some(nine.iter().map(|s| s.to_string()).collect()),
            dedup_exact: true,
            ..IngestConfig::new(InputFormat::AtomicTsv)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.relation_whitelist.is_some() && self.relation_blacklist.is_some() {
            return Err(Error::Config(
                "at most one of relation whitelist/blacklist may be set".into(),
            ));
        }
        if let Some(w) = self.min_weight {
            if w.is_nan() || w < 0.0 {
                return Err(Error::Config(format!("min_weight must be >= 0, got {w}")));
            }
        }
        Ok(())
    }

    /// Relation-name filter; `None` means pass.
    pub(crate) fn relation_reject(&self, name: &str) -> Option<RejectReason> {
        if let Some(blacklist) = &self.relation_blacklist {
            if blacklist.contains(name) {
                return Some(RejectReason::BlacklistedRelation);
            }
        }
        if let Some(whitelist) = &self.relation_whitelist {
            if !whitelist.contains(name) {
                return Some(RejectReason::NotWhitelisted);
            }
        }
        None
    }

    /// Weight filter; absent weights fail when a threshold is active.
    pub(crate) fn weight_reject(&self, weight: Option<f64>) -> Option<RejectReason> {
        let threshold = self.min_weight?;
        match weight {
            None => Some(RejectReason::LowWeight),
            Some(w) => {
                let passes = if self.keep_equal_weight {
                    w >= threshold
                } else {
                    w > threshold
                };
                (!passes).then_some(RejectReason::LowWeight)
            }
        }
    }
}

/// Exact-duplicate detector over raw (head, relation, tail) string triples.
#[derive(Debug, Default)]
pub(crate) struct DedupSet {
    seen: HashSet<String>,
}

impl DedupSet {
    pub(crate) fn is_duplicate(&mut self, head: &str, relation: &str, tail: &str) -> bool {
        let key = format!("{head}\u{1f}{relation}\u{1f}{tail}");
        !self.seen.insert(key)
    }
}

/// Open a dump file with gzip transparency (sniffs the magic bytes).
pub fn open_input(path: &Path) -> Result<Box<dyn BufRead + Send>> {
    let mut file = File::open(path)?;
    let mut magic = [0u8; 2];
    let n = file.read(&mut magic)?;
    // reopen to rewind; File::seek would also work but keeps the type simple
    let file = File::open(path)?;
    if n == 2 && magic == [0x1f, 0x8b] {
        Ok(Box::new(BufReader::new(flate2::read::GzDecoder::new(file))))
    } else {
        Ok(Box::new(BufReader::new(file)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_rejects_both_lists() {
        let mut config = IngestConfig::new(InputFormat::GenericJsonl);
        config.relation_whitelist = Some(["a".to_string()].into());
        config.relation_blacklist = Some(["b".to_string()].into());
        assert!(config.validate().is_err());
    }

    #[test]
    fn weight_threshold_direction() {
        // reject <= 0.5
        let cn = IngestConfig::conceptnet();
        assert_eq!(cn.weight_reject(Some(0.5)), Some(RejectReason::LowWeight));
        assert_eq!(cn.weight_reject(Some(0.51)), None);
        // keep >= 0.5
        let to = IngestConfig::transomcs();
        assert_eq!(to.weight_reject(Some(0.5)), None);
        assert_eq!(to.weight_reject(Some(0.49)), Some(RejectReason::LowWeight));
        // absent weight fails an active filter
        assert_eq!(cn.weight_reject(None), Some(RejectReason::LowWeight));
        let none = IngestConfig::new(InputFormat::GenericJsonl);
        assert_eq!(none.weight_reject(None), None);
    }

    #[test]
    fn gzip_transparent_open() {
        use flate2::write::GzEncoder;
        use flate2::Compression;
        use std::io::Write;

        let dir = tempfile::tempdir().unwrap();
        let plain = dir.path().join("plain.txt");
        std::fs::write(&plain, "hello\n").unwrap();
        let gz = dir.path().join("data.gz");
        let mut encoder = GzEncoder::new(File::create(&gz).unwrap(), Compression::default());
        encoder.write_all(b"hello\n").unwrap();
        encoder.finish().unwrap();

        for path in [plain, gz] {
            let mut reader = open_input(&path).unwrap();
            let mut line = String::new();
            reader.read_line(&mut line).unwrap();
            assert_eq!(line, "hello\n");
        }
    }
}
