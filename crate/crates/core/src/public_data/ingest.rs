//! Dataset ingestion: CSV or JSON rows plus a column mapping become
//! entity-keyed paragraphs, stored as JSONL.

use std::io::Write;
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use super::{serialize_entity, Domain, EntityDoc};
use crate::kg::normalize_key;

/// Which column keys an entity and how columns become attributes.
///
/// ```toml
/// key = "title"
///
/// [[attributes]]
/// column = "title"
///
/// [[attributes]]
/// column = "cast"
/// name = "lead actors"
/// split = "|"
/// ```
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IngestMapping {
    pub key: String,
    pub attributes: Vec<AttributeMapping>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttributeMapping {
    pub column: String,
    /// Attribute name in the paragraph; defaults to the column name.
    #[serde(default)]
    pub name: Option<String>,
    /// Split a text cell into a list on this separator.
    #[serde(default)]
    pub split: Option<String>,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {detail}")]
    Format { path: PathBuf, detail: String },
    #[error("invalid mapping: {0}")]
    Mapping(String),
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> IngestError + '_ {
    move |source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn format_err(path: &Path, detail: impl std::fmt::Display) -> IngestError {
    IngestError::Format {
        path: path.to_path_buf(),
        detail: detail.to_string(),
    }
}

impl IngestMapping {
    pub fn from_toml_str(text: &str) -> Result<Self, IngestError> {
        let m: IngestMapping = toml::from_str(text).map_err(|e| IngestError::Mapping(e.to_string()))?;
        if m.attributes.is_empty() {
            return Err(IngestError::Mapping("at least one attribute is required".into()));
        }
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self, IngestError> {
        Self::from_toml_str(&std::fs::read_to_string(path).map_err(io(path))?)
    }
}

fn cell_text(v: &Value) -> Option<String> {
    match v {
        Value::Null => None,
        Value::String(s) => Some(s.clone()),
        other => Some(other.to_string()),
    }
}

/// Build one doc per distinct key; the first row for a key wins. Rows with
/// an empty key or no non-empty attribute are skipped.
pub fn ingest(domain: Domain, rows: &[Map<String, Value>], mapping: &IngestMapping) -> Vec<EntityDoc> {
    let mut docs: Vec<EntityDoc> = Vec::new();
    for row in rows {
        let key = normalize_key(&row.get(&mapping.key).and_then(cell_text).unwrap_or_default());
        if key.is_empty() {
            continue;
        }
        if docs.iter().any(|d| d.key == key) {
            log::warn!("duplicate entity key `{key}` ignored");
            continue;
        }
        let mut attrs: IndexMap<String, Value> = IndexMap::new();
        for a in &mapping.attributes {
            let value = match (row.get(&a.column), &a.split) {
                (Some(Value::String(s)), Some(sep)) => Value::Array(
                    s.split(sep.as_str())
                        .map(str::trim)
                        .filter(|x| !x.is_empty())
                        .map(|x| Value::String(x.to_string()))
                        .collect(),
                ),
                (Some(v), _) => v.clone(),
                (None, _) => Value::Null,
            };
            let empty = match &value {
                Value::Null => true,
                Value::String(s) => s.trim().is_empty(),
                Value::Array(xs) => xs.is_empty(),
                _ => false,
            };
            if !empty {
                attrs.insert(a.name.clone().unwrap_or_else(|| a.column.clone()), value);
            }
        }
        if attrs.is_empty() {
            continue;
        }
        docs.push(EntityDoc {
            domain,
            key,
            paragraph: serialize_entity(&attrs),
        });
    }
    docs
}

fn read_rows(path: &Path) -> Result<Vec<Map<String, Value>>, IngestError> {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_lowercase();
    let text = std::fs::read_to_string(path).map_err(io(path))?;
    match ext.as_str() {
        "csv" => {
            let mut reader = csv::Reader::from_reader(text.as_bytes());
            let headers = reader.headers().map_err(|e| format_err(path, e))?.clone();
            let mut rows = Vec::new();
            for record in reader.records() {
                let record = record.map_err(|e| format_err(path, e))?;
                rows.push(
                    headers
                        .iter()
                        .zip(record.iter())
                        .map(|(h, v)| (h.to_string(), Value::String(v.to_string())))
                        .collect(),
                );
            }
            Ok(rows)
        }
        "json" => serde_json::from_str(&text).map_err(|e| format_err(path, e)),
        "jsonl" => text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| serde_json::from_str(l).map_err(|e| format_err(path, format!("line {}: {e}", i + 1))))
            .collect(),
        _ => Err(format_err(path, "expected a .csv, .json or .jsonl file")),
    }
}

pub fn ingest_file(domain: Domain, input: &Path, mapping: &IngestMapping) -> Result<Vec<EntityDoc>, IngestError> {
    Ok(ingest(domain, &read_rows(input)?, mapping))
}

/// Write docs as JSONL through a temporary file so a failed write leaves
/// no partial index behind.
pub fn write_index(path: &Path, docs: &[EntityDoc]) -> Result<(), IngestError> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io(path))?;
    for d in docs {
        serde_json::to_writer(&mut tmp, d).map_err(|e| format_err(path, e))?;
        tmp.write_all(b"\n").map_err(io(path))?;
    }
    tmp.persist(path).map_err(|e| io(path)(e.error))?;
    Ok(())
}

pub fn load_index(path: &Path) -> Result<Vec<EntityDoc>, IngestError> {
    let text = std::fs::read_to_string(path).map_err(io(path))?;
    let mut docs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let doc: EntityDoc =
            serde_json::from_str(line).map_err(|e| format_err(path, format!("line {}: {e}", i + 1)))?;
        if doc.paragraph.trim().is_empty() {
            return Err(format_err(path, format!("line {}: empty paragraph", i + 1)));
        }
        docs.push(doc);
    }
    Ok(docs)
}
