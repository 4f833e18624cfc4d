//! Concept canonicalization for cross-KG tuple matching.
//!
//! `normalize_concept` applies, in order: lowercasing, whitespace collapse,
//! punctuation stripping (runs of two or more underscores become a blank
//! placeholder, hyphens inside words become spaces), PersonX handling for the
//! atomic/atomic2020 vocabularies, stopword removal, POS-guided
//! lemmatization, and a final stopword sweep so that lemmas never reintroduce
//! stopwords. The result is a space-joined lowercase token string and the
//! function is idempotent.

mod index;
mod lemma;

pub use index::{build_normalized_index, NormalizedIndex};
pub use lemma::{lemmatize, suffix_strip, LemmaLexicon, PosClass};

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::kg::{KgId, MatchMode, RelationId, RelationMapping, RelationRegistry, Tuple, ATOMIC, ATOMIC2020};
use crate::{Error, Result};

/// Canonical (head-key, mapped-relation, tail-key) form: the unit of
/// cross-KG matching.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NormalizedKey {
    pub head_key: String,
    pub relation: RelationId,
    pub tail_key: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NormalizerConfig {
    stopwords: HashSet<String>,
    lexicon: LemmaLexicon,
    pub person_token: String,
    pub blank_token: String,
    stopword_version: String,
}

impl NormalizerConfig {
    pub fn new(stopwords: HashSet<String>, stopword_version: &str, lexicon: LemmaLexicon) -> Self {
        NormalizerConfig {
            stopwords: stopwords.into_iter().map(|w| w.to_lowercase()).collect(),
            lexicon,
            person_token: "person".to_string(),
            blank_token: "blank".to_string(),
            stopword_version: stopword_version.to_string(),
        }
    }

    /// Parse a stopword list: one lowercase word per line, `#` comments.
    pub fn stopwords_from_text(text: &str) -> (HashSet<String>, String) {
        let version = crate::kg::registry::parse_version(text);
        let words = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| l.to_lowercase())
            .collect();
        (words, version)
    }

    pub fn is_stopword(&self, word: &str) -> bool {
        self.stopwords.contains(word)
    }

    pub fn lexicon(&self) -> &LemmaLexicon {
        &self.lexicon
    }

    /// The replacement and placeholder tokens must survive the pipeline
    /// unchanged, otherwise normalization would not be idempotent.
    pub fn validate(&self) -> Result<()> {
        for (what, token) in [("person_token", &self.person_token), ("blank_token", &self.blank_token)] {
            if token.is_empty() || token.chars().any(|c| !c.is_alphanumeric()) {
                return Err(Error::Config(format!("{what} must be a plain word, got {token:?}")));
            }
            if *token != token.to_lowercase() {
                return Err(Error::Config(format!("{what} must be lowercase")));
            }
            if self.is_stopword(token) {
                return Err(Error::Config(format!("{what} {token:?} is a stopword")));
            }
            for first in [true, false] {
                let lemma = lemmatize(token, first, &self.lexicon);
                if lemma != *token {
                    return Err(Error::Config(format!(
                        "{what} {token:?} is not a lemma fixed point (-> {lemma:?})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Version line recorded in report digests.
    pub fn version_string(&self) -> String {
        format!(
            "stopwords={};lemmas={};person={};blank={}",
            self.stopword_version,
            self.lexicon.version(),
            self.person_token,
            self.blank_token
        )
    }
}

enum Tok {
    Word(String),
    Blank,
}

/// Lowercase, split on punctuation/whitespace, and turn runs of two or more
/// underscores into blank placeholders.
fn tokenize_with_blanks(text: &str) -> Vec<Tok> {
    let lower = text.to_lowercase();
    let mut toks = Vec::new();
    let mut cur = String::new();
    let mut underscores = 0usize;
    let flush = |cur: &mut String, toks: &mut Vec<Tok>| {
        if !cur.is_empty() {
            toks.push(Tok::Word(std::mem::take(cur)));
        }
    };
    for ch in lower.chars() {
        if ch == '_' {
            flush(&mut cur, &mut toks);
            underscores += 1;
            continue;
        }
        if underscores >= 2 {
            toks.push(Tok::Blank);
        }
        underscores = 0;
        if ch.is_alphanumeric() {
            cur.push(ch);
        } else {
            flush(&mut cur, &mut toks);
        }
    }
    flush(&mut cur, &mut toks);
    if underscores >= 2 {
        toks.push(Tok::Blank);
    }
    toks
}

/// Plain metric/tokenizer entry point: lowercase + punctuation-split +
/// whitespace-split, no stopword or lemma handling.
pub fn basic_tokens(text: &str) -> Vec<String> {
    tokenize_with_blanks(text)
        .into_iter()
        .filter_map(|t| match t {
            Tok::Word(w) => Some(w),
            Tok::Blank => None,
        })
        .collect()
}

const PERSON_PLACEHOLDERS: [&str; 3] = ["personx", "persony", "personz"];

fn kg_uses_person_placeholders(kg: &KgId) -> bool {
    matches!(kg.as_str(), ATOMIC | ATOMIC2020)
}

/// Canonicalize one concept string for the given KG vocabulary.
pub fn normalize_concept(text: &str, kg: &KgId, config: &NormalizerConfig) -> String {
    let mut toks = tokenize_with_blanks(text);

    if kg_uses_person_placeholders(kg) {
        if let Some(Tok::Word(w)) = toks.first() {
            if PERSON_PLACEHOLDERS.contains(&w.as_str()) {
                toks.remove(0);
            }
        }
        for tok in toks.iter_mut() {
            if let Tok::Word(w) = tok {
                if PERSON_PLACEHOLDERS.contains(&w.as_str()) {
                    *w = config.person_token.clone();
                }
            }
        }
    }

    toks.retain(|t| match t {
        Tok::Word(w) => !config.is_stopword(w),
        Tok::Blank => true,
    });

    let mut first_content = true;
    for tok in toks.iter_mut() {
        if let Tok::Word(w) = tok {
            *w = lemmatize(w, first_content, &config.lexicon);
            first_content = false;
        }
    }

    toks.retain(|t| match t {
        Tok::Word(w) => !config.is_stopword(w),
        Tok::Blank => true,
    });

    let parts: Vec<&str> = toks
        .iter()
        .map(|t| match t {
            Tok::Word(w) => w.as_str(),
            Tok::Blank => config.blank_token.as_str(),
        })
        .collect();
    parts.join(" ")
}

/// Outcome of normalizing one tuple.
#[derive(Clone, Debug, PartialEq)]
pub struct TupleKeys {
    pub keys: Vec<NormalizedKey>,
    pub status: KeyStatus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KeyStatus {
    Ok,
    /// Relation has no mapping entry; the tuple is unmatchable.
    Unmapped,
    /// Head or tail normalized to the empty string; excluded from matching.
    Degenerate,
}

/// Bundles registry, mapping, mode, and normalizer config for key
/// construction. Pure and cheap to share across threads.
#[derive(Clone, Copy)]
pub struct Normalizer<'a> {
    pub registry: &'a RelationRegistry,
    pub mapping: &'a RelationMapping,
    pub mode: MatchMode,
    pub config: &'a NormalizerConfig,
}

impl<'a> Normalizer<'a> {
    pub fn new(
        registry: &'a RelationRegistry,
        mapping: &'a RelationMapping,
        mode: MatchMode,
        config: &'a NormalizerConfig,
    ) -> Self {
        Normalizer {
            registry,
            mapping,
            mode,
            config,
        }
    }

    pub fn concept_key(&self, text: &str, kg: &KgId) -> String {
        normalize_concept(text, kg, self.config)
    }

    /// Normalized head key of a tuple (the split-disjointness identity).
    pub fn head_key(&self, tuple: &Tuple) -> String {
        self.concept_key(&tuple.head, tuple.relation.kg())
    }

    /// One key per mapped target relation; empty with a status for unmapped
    /// relations or degenerate (empty head/tail key) tuples.
    pub fn tuple_keys(&self, tuple: &Tuple) -> TupleKeys {
        let relation = self
            .registry
            .resolve(tuple.relation.kg().as_str(), tuple.relation.name())
            .unwrap_or_else(|| tuple.relation.clone());
        let targets = self.mapping.targets(&relation, self.mode);
        if targets.is_empty() {
            return TupleKeys {
                keys: Vec::new(),
                status: KeyStatus::Unmapped,
            };
        }
        let head_key = self.concept_key(&tuple.head, tuple.relation.kg());
        let tail_key = self.concept_key(&tuple.tail, tuple.relation.kg());
        if head_key.is_empty() || tail_key.is_empty() {
            return TupleKeys {
                keys: Vec::new(),
                status: KeyStatus::Degenerate,
            };
        }
        let keys = targets
            .iter()
            .map(|target| NormalizedKey {
                head_key: head_key.clone(),
                relation: target.clone(),
                tail_key: tail_key.clone(),
            })
            .collect();
        TupleKeys {
            keys,
            status: KeyStatus::Ok,
        }
    }

    /// Digest over every version knob that changes matching behaviour.
    pub fn digest(&self) -> String {
        crate::config_digest(&[
            ("tool", crate::TOOL_VERSION),
            ("registry", self.registry.version()),
            ("mapping", self.mapping.version()),
            ("normalizer", &self.config.version_string()),
            ("mode", self.mode.as_str()),
        ])
    }
}
