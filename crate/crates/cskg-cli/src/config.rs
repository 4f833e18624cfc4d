//! TOML configuration: one file of key-value defaults per subcommand, every
//! key overridable by a flag. The `pipeline` command executes the stages
//! named in `run` using the same sections.

use std::path::{Path, PathBuf};

use serde::Deserialize;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub data_dir: Option<PathBuf>,
    pub mapping: Option<PathBuf>,
    pub mode: Option<String>,
    pub format: Option<String>,
    /// Stages executed by `cskg pipeline`, in order.
    #[serde(default)]
    pub run: Vec<String>,
    #[serde(default)]
    pub ingest: toml::Table,
    #[serde(default)]
    pub normalize: toml::Table,
    #[serde(default)]
    pub compare: toml::Table,
    #[serde(default)]
    pub split: toml::Table,
    #[serde(default)]
    pub score: toml::Table,
    #[serde(default, rename = "sample-hits")]
    pub sample_hits: toml::Table,
    #[serde(default, rename = "aggregate-votes")]
    pub aggregate_votes: toml::Table,
    #[serde(default, rename = "export-training")]
    pub export_training: toml::Table,
    #[serde(default, rename = "export-prompts")]
    pub export_prompts: toml::Table,
    #[serde(default)]
    pub stats: toml::Table,
}

impl FileConfig {
    pub fn section(&self, name: &str) -> &toml::Table {
        match name {
            "ingest" => &self.ingest,
            "normalize" => &self.normalize,
            "compare" => &self.compare,
            "split" => &self.split,
            "score" => &self.score,
            "sample-hits" => &self.sample_hits,
            "aggregate-votes" => &self.aggregate_votes,
            "export-training" => &self.export_training,
            "export-prompts" => &self.export_prompts,
            "stats" => &self.stats,
            _ => {
                static EMPTY: once_lock::OnceTable = once_lock::OnceTable::new();
                EMPTY.get()
            }
        }
    }
}

mod once_lock {
    use std::sync::OnceLock;

    pub struct OnceTable(OnceLock<toml::Table>);

    impl OnceTable {
        pub const fn new() -> Self {
            OnceTable(OnceLock::new())
        }

        pub fn get(&self) -> &toml::Table {
            self.0.get_or_init(toml::Table::new)
        }
    }
}

pub fn load(path: Option<&Path>) -> anyhow::Result<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
    let config: FileConfig =
        toml::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
    Ok(config)
}

/// Typed accessors over a TOML section, used when the pipeline runs a stage
/// or a flag was omitted.
pub fn get_str(table: &toml::Table, key: &str) -> Option<String> {
    table.get(key).and_then(|v| v.as_str()).map(str::to_string)
}

pub fn get_path(table: &toml::Table, key: &str) -> Option<PathBuf> {
    get_str(table, key).map(PathBuf::from)
}

pub fn get_f64(table: &toml::Table, key: &str) -> Option<f64> {
    table.get(key).and_then(toml::Value::as_float)
}

pub fn get_u64(table: &toml::Table, key: &str) -> Option<u64> {
    table.get(key).and_then(toml::Value::as_integer).map(|v| v as u64)
}

pub fn get_bool(table: &toml::Table, key: &str) -> Option<bool> {
    table.get(key).and_then(toml::Value::as_bool)
}
