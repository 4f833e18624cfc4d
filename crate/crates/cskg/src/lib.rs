//! Toolkit for symbolic comparison of commonsense knowledge graphs.
//!
//! The crate covers the full pipeline around (head, relation, tail) tuple
//! collections:
//!
//! - [`kg`] — domain types: tuples, relation registries, cross-KG relation
//!   mappings, and the in-memory graph handle.
//! - [`ingest`] — streaming parsers for ConceptNet assertion dumps, ATOMIC
//!   TSV, and canonical tuple JSONL, plus the ConceptNet curation pass.
//! - [`normalize`] — concept canonicalization (case, punctuation, stopwords,
//!   lemmas, PersonX handling) and normalized-key indexing.
//! - [`compare`] — pairwise coverage precision/recall and per-relation
//!   accuracy breakdowns.
//! - [`split`] — deterministic head-disjoint train/dev/test splits.
//! - [`metrics`] — BLEU, ROUGE-L, METEOR, and CIDEr-D for generated tails.
//! - [`anno`] — HIT sampling, rating aggregation, and Fleiss' kappa.
//! - [`verbalize`] — relation templates, LM training lines, and few-shot
//!   priming blocks.

pub mod anno;
pub mod compare;
pub mod data;
pub mod error;
pub mod ingest;
pub mod kg;
pub mod metrics;
pub mod normalize;
pub mod seed;
pub mod split;
pub mod verbalize;

pub use error::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Crate version embedded in every emitted artifact.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Short hex digest over labelled configuration parts. Reports embed it so
/// that two artifacts produced under the same configuration can be compared.
pub fn config_digest(parts: &[(&str, &str)]) -> String {
    use sha2::{Digest, Sha256};
    let mut hasher = Sha256::new();
    for (key, value) in parts {
        hasher.update(key.as_bytes());
        hasher.update(b"=");
        hasher.update(value.as_bytes());
        hasher.update(b"\n");
    }
    let digest = hasher.finalize();
    let mut out = String::with_capacity(16);
    for byte in &digest[..8] {
        use std::fmt::Write;
        let _ = write!(out, "{byte:02x}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_is_stable_and_order_sensitive() {
        let a = config_digest(&[("k", "v"), ("x", "y")]);
        let b = config_digest(&[("k", "v"), ("x", "y")]);
        let c = config_digest(&[("x", "y"), ("k", "v")]);
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.len(), 16);
    }
}
