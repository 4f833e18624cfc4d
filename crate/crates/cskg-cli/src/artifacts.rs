//! Artifact emission: every output carries the tool version, config digest,
//! and seed — inline for JSON reports, as `#` header lines for TSV, and as a
//! `<file>.meta.json` sidecar for text/JSONL exports.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub tool_version: String,
    pub config_digest: String,
    pub seed: u64,
    pub command: String,
}

impl Meta {
    pub fn new(command: &str, config_digest: String, seed: u64) -> Self {
        Meta {
            tool_version: cskg::TOOL_VERSION.to_string(),
            config_digest,
            seed,
            command: command.to_string(),
        }
    }

    pub fn tsv_header(&self) -> String {
        format!(
            "# tool: cskg {}\n# command: {}\n# config-digest: {}\n# seed: {}\n",
            self.tool_version, self.command, self.config_digest, self.seed
        )
    }
}

/// JSON report with the meta block inline.
pub fn write_json_report<T: Serialize>(
    path: &Path,
    meta: &Meta,
    body_key: &str,
    body: &T,
) -> anyhow::Result<()> {
    let mut obj = serde_json::Map::new();
    obj.insert("meta".into(), serde_json::to_value(meta)?);
    obj.insert(body_key.into(), serde_json::to_value(body)?);
    let mut file = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut file, &serde_json::Value::Object(obj))?;
    file.write_all(b"\n")?;
    Ok(())
}

/// Text artifact plus its meta sidecar.
pub fn write_text_artifact(path: &Path, meta: &Meta, content: &str) -> anyhow::Result<()> {
    std::fs::write(path, content)?;
    write_sidecar(path, meta, None)?;
    Ok(())
}

/// Sidecar with optional extra fields (e.g. few-shot decoding hints).
pub fn write_sidecar(
    path: &Path,
    meta: &Meta,
    extra: Option<serde_json::Value>,
) -> anyhow::Result<()> {
    let sidecar = path.with_extension(match path.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{ext}.meta.json"),
        None => "meta.json".to_string(),
    });
    let mut obj = serde_json::Map::new();
    obj.insert("meta".into(), serde_json::to_value(meta)?);
    if let Some(serde_json::Value::Object(extra)) = extra {
        for (key, value) in extra {
            obj.insert(key, value);
        }
    }
    let text = serde_json::to_string_pretty(&serde_json::Value::Object(obj))?;
    std::fs::write(sidecar, text + "\n")?;
    Ok(())
}
