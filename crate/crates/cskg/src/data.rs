//! Shipped data files (relation registry, mapping, templates, stopwords,
//! lemma lexicon, curation rules, cognate groups), parsed once on first use.
//! Set `CSKG_DATA_DIR` to a directory containing same-named files to override
//! any of them.

use std::borrow::Cow;
use std::path::PathBuf;

use once_cell::sync::Lazy;

use crate::compare::CognateGroups;
use crate::ingest::CurationRules;
use crate::kg::{RelationMapping, RelationRegistry};
use crate::normalize::{LemmaLexicon, NormalizerConfig};
use crate::verbalize::TemplateTable;

pub const DATA_DIR_ENV: &str = "CSKG_DATA_DIR";

fn load(name: &str, embedded: &'static str) -> Cow<'static, str> {
    if let Ok(dir) = std::env::var(DATA_DIR_ENV) {
        let path = PathBuf::from(dir).join(name);
        if path.is_file() {
            match std::fs::read_to_string(&path) {
                Ok(text) => return Cow::Owned(text),
                Err(err) => panic!("{}: {err}", path.display()),
            }
        }
    }
    Cow::Borrowed(embedded)
}

static REGISTRY: Lazy<RelationRegistry> = Lazy::new(|| {
    let text = load("relations.tsv", include_str!("../data/relations.tsv"));
    RelationRegistry::from_tsv(&text, "relations.tsv").expect("shipped registry parses")
});

static MAPPING: Lazy<RelationMapping> = Lazy::new(|| {
    let text = load("mapping.tsv", include_str!("../data/mapping.tsv"));
    RelationMapping::from_tsv(&text, "mapping.tsv").expect("shipped mapping parses")
});

static TEMPLATES: Lazy<TemplateTable> = Lazy::new(|| {
    let text = load("templates.tsv", include_str!("../data/templates.tsv"));
    TemplateTable::from_tsv(&text, "templates.tsv").expect("shipped templates parse")
});

static NORMALIZER: Lazy<NormalizerConfig> = Lazy::new(|| {
    let stopword_text = load("stopwords.txt", include_str!("../data/stopwords.txt"));
    let (stopwords, version) = NormalizerConfig::stopwords_from_text(&stopword_text);
    let lemma_text = load("lemmas.tsv", include_str!("../data/lemmas.tsv"));
    let lexicon = LemmaLexicon::from_tsv(&lemma_text, "lemmas.tsv").expect("shipped lemmas parse");
    let config = NormalizerConfig::new(stopwords, &version, lexicon);
    config.validate().expect("shipped normalizer config is valid");
    config
});

static CURATION: Lazy<CurationRules> = Lazy::new(|| {
    let text = load("curation.tsv", include_str!("../data/curation.tsv"));
    CurationRules::from_tsv(&text, "curation.tsv").expect("shipped curation rules parse")
});

static COGNATES: Lazy<CognateGroups> = Lazy::new(|| {
    let text = load("cognates.tsv", include_str!("../data/cognates.tsv"));
    CognateGroups::from_tsv(&text, "cognates.tsv").expect("shipped cognate groups parse")
});

pub fn default_registry() -> &'static RelationRegistry {
    &REGISTRY
}

pub fn default_mapping() -> &'static RelationMapping {
    &MAPPING
}

pub fn default_templates() -> &'static TemplateTable {
    &TEMPLATES
}

pub fn default_normalizer() -> &'static NormalizerConfig {
    &NORMALIZER
}

pub fn default_curation() -> &'static CurationRules {
    &CURATION
}

pub fn default_cognates() -> &'static CognateGroups {
    &COGNATES
}

#[cfg(test)]
mod tests {
    use crate::kg::validate_mapping;

    #[test]
    fn shipped_data_is_consistent() {
        let registry = super::default_registry();
        let mapping = super::default_mapping();
        assert!(validate_mapping(mapping, registry).is_empty());
        // every cognate-group member resolves
        for relation in super::default_cognates().members() {
            assert!(registry.contains(relation), "unknown cognate member {relation}");
        }
        // every template name resolves in at least one KG
        let templates = super::default_templates();
        for name in templates.names() {
            let resolves = registry
                .kgs()
                .any(|kg| registry.resolve(kg.as_str(), name).is_some());
            assert!(resolves, "template name {name:?} resolves nowhere");
        }
    }
}
