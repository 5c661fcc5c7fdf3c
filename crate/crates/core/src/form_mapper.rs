//! Compiles a validated summary into a [`FillPlan`]: the ordered
//! `(field_id, value)` list the browser extension writes into the EHR form.
//!
//! Which summary key lands in which form input is data, not code: a
//! versioned JSON mapping file per EHR interface version.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::digest::ContentDigest;
use crate::summarizer::{is_fallback, MedicalSummary, SummaryField};

pub const DEFAULT_MAPPING_JSON: &str = include_str!("../config/mapping.default.json");

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MappingError {
    #[error("mapping config does not parse: {0}")]
    ConfigParseError(String),
    #[error("summary key '{0}' is mapped more than once")]
    DuplicateKey(String),
    #[error("form field id '{0}' is used more than once")]
    DuplicateFieldId(String),
    #[error("'{0}' is not a summary key")]
    UnknownSummaryKey(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMappingConfig {
    version: String,
    target_form: String,
    entries: Vec<RawEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEntry {
    summary_key: String,
    field_id: String,
    #[serde(default)]
    required: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MappingEntry {
    pub summary_key: SummaryField,
    pub field_id: String,
    pub required: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FieldMapping {
    pub version: String,
    pub target_form: String,
    pub entries: Vec<MappingEntry>,
}

impl FieldMapping {
    /// The shipped mapping with placeholder `anamnesis_*` field ids.
    pub fn default_mapping() -> Self {
        load_mapping(DEFAULT_MAPPING_JSON).expect("shipped default mapping is valid")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("mapping serializes")
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn without(mut self, key: SummaryField) -> Self {
        self.entries.retain(|e| e.summary_key != key);
        self
    }
}

pub fn load_mapping(config_text: &str) -> Result<FieldMapping, MappingError> {
    let raw: RawMappingConfig =
        serde_json::from_str(config_text).map_err(|e| MappingError::ConfigParseError(e.to_string()))?;
    if raw.version.trim().is_empty() {
        return Err(MappingError::ConfigParseError("version must not be empty".into()));
    }

    let mut keys = HashSet::new();
    let mut field_ids = HashSet::new();
    let mut entries = Vec::with_capacity(raw.entries.len());
    for entry in raw.entries {
        let summary_key = SummaryField::from_key(&entry.summary_key)
            .ok_or_else(|| MappingError::UnknownSummaryKey(entry.summary_key.clone()))?;
        if entry.field_id.trim().is_empty() {
            return Err(MappingError::ConfigParseError(format!(
                "empty field_id for '{}'",
                entry.summary_key
            )));
        }
        if !keys.insert(summary_key) {
            return Err(MappingError::DuplicateKey(entry.summary_key));
        }
        if !field_ids.insert(entry.field_id.clone()) {
            return Err(MappingError::DuplicateFieldId(entry.field_id));
        }
        entries.push(MappingEntry {
            summary_key,
            field_id: entry.field_id,
            required: entry.required,
        });
    }
    Ok(FieldMapping {
        version: raw.version,
        target_form: raw.target_form,
        entries,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FillEntry {
    pub field_id: String,
    pub value: String,
}

/// Wire document consumed by the browser extension.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FillPlan {
    pub summary_digest: ContentDigest,
    pub entries: Vec<FillEntry>,
    pub warnings: Vec<String>,
}

impl FillPlan {
    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("fill plan serializes")
    }
}

/// One entry per mapped key in mapping order, values copied verbatim.
///
/// Warnings: `fallback:<key>` for each required entry whose value is the
/// fallback phrase (the entry is still emitted), then `unmapped:<key>` for
/// each summary key the mapping leaves out, in summary key order.
pub fn build_fill_plan(summary: &MedicalSummary, mapping: &FieldMapping) -> FillPlan {
    let mut entries = Vec::with_capacity(mapping.entries.len());
    let mut warnings = Vec::new();
    for entry in &mapping.entries {
        let value = summary.get(entry.summary_key);
        if entry.required && is_fallback(value) {
            warnings.push(format!("fallback:{}", entry.summary_key));
        }
        entries.push(FillEntry {
            field_id: entry.field_id.clone(),
            value: value.to_string(),
        });
    }
    for field in SummaryField::ALL {
        if !mapping.entries.iter().any(|e| e.summary_key == field) {
            warnings.push(format!("unmapped:{field}"));
        }
    }
    FillPlan {
        summary_digest: summary.digest(),
        entries,
        warnings,
    }
}
