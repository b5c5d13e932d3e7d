//! Per-sample labels, predictions and display assets.
//!
//! Metadata is joined onto NAPs after clustering; it never influences which
//! samples end up together.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{bail, NapError, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleMetadata {
    pub sample_id: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prediction: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_ref: Option<String>,
}

impl SampleMetadata {
    pub fn new(sample_id: usize) -> Self {
        Self {
            sample_id,
            label: None,
            prediction: None,
            image_ref: None,
        }
    }

    /// True only when both label and prediction are present and differ.
    pub fn is_mispredicted(&self) -> bool {
        matches!((&self.label, &self.prediction), (Some(l), Some(p)) if l != p)
    }
}

/// Metadata keyed by sample id. At most one record per id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MetadataTable {
    records: BTreeMap<usize, SampleMetadata>,
}

impl MetadataTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_records(records: impl IntoIterator<Item = SampleMetadata>) -> Result<Self> {
        let mut table = Self::new();
        for r in records {
            table.insert(r)?;
        }
        Ok(table)
    }

    pub fn insert(&mut self, record: SampleMetadata) -> Result<()> {
        if self.records.contains_key(&record.sample_id) {
            bail!(Data, "duplicate metadata for sample {}", record.sample_id);
        }
        self.records.insert(record.sample_id, record);
        Ok(())
    }

    pub fn get(&self, sample_id: usize) -> Option<&SampleMetadata> {
        self.records.get(&sample_id)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &SampleMetadata> {
        self.records.values()
    }

    pub fn has_labels(&self) -> bool {
        self.records.values().any(|r| r.label.is_some())
    }

    /// Re-key a subset: record for old id `ids[i]` becomes sample `i`.
    pub fn select(&self, ids: &[usize]) -> Self {
        let records = ids
            .iter()
            .enumerate()
            .filter_map(|(new, old)| {
                self.records.get(old).map(|r| {
                    let mut r = r.clone();
                    r.sample_id = new;
                    (new, r)
                })
            })
            .collect();
        Self { records }
    }

    pub fn parse_jsonl(text: &str) -> Result<Self> {
        const KNOWN: [&str; 4] = ["sample_id", "label", "prediction", "image_ref"];
        let mut table = Self::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let value: Value = serde_json::from_str(line)
                .map_err(|e| NapError::Format(format!("metadata line {}: {e}", lineno + 1)))?;
            let Value::Object(mut obj) = value else {
                bail!(Format, "metadata line {} is not an object", lineno + 1);
            };
            let unknown: Vec<String> = obj
                .keys()
                .filter(|k| !KNOWN.contains(&k.as_str()))
                .cloned()
                .collect();
            for key in unknown {
                tracing::warn!(line = lineno + 1, field = %key, "ignoring unknown metadata field");
                obj.remove(&key);
            }
            let record: SampleMetadata = serde_json::from_value(Value::Object(obj))
                .map_err(|e| NapError::Format(format!("metadata line {}: {e}", lineno + 1)))?;
            table.insert(record)?;
        }
        Ok(table)
    }

    /// One record per line, ordered by sample id.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in self.records.values() {
            out.push_str(&serde_json::to_string(r).expect("metadata serializes"));
            out.push('\n');
        }
        out
    }
}

pub fn load_metadata(path: impl AsRef<Path>) -> Result<MetadataTable> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| NapError::io(path.display().to_string(), e))?;
    MetadataTable::parse_jsonl(&text)
}
