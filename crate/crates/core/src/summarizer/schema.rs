use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::digest::ContentDigest;

/// Inserted when a consultation yielded nothing for a field.
pub const FALLBACK_PHRASE: &str = "Informasi tidak tersedia";

/// The eight anamnesis fields, in form order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SummaryField {
    ChiefComplaint,
    AdditionalComplaint,
    HistoryOfPresentIllness,
    PastMedicalHistory,
    FamilyHistory,
    RecommendedMedicationTherapy,
    RecommendedNonMedicationTherapy,
    Education,
}

impl SummaryField {
    pub const ALL: [SummaryField; 8] = [
        SummaryField::ChiefComplaint,
        SummaryField::AdditionalComplaint,
        SummaryField::HistoryOfPresentIllness,
        SummaryField::PastMedicalHistory,
        SummaryField::FamilyHistory,
        SummaryField::RecommendedMedicationTherapy,
        SummaryField::RecommendedNonMedicationTherapy,
        SummaryField::Education,
    ];

    pub fn key(self) -> &'static str {
        match self {
            SummaryField::ChiefComplaint => "chief_complaint",
            SummaryField::AdditionalComplaint => "additional_complaint",
            SummaryField::HistoryOfPresentIllness => "history_of_present_illness",
            SummaryField::PastMedicalHistory => "past_medical_history",
            SummaryField::FamilyHistory => "family_history",
            SummaryField::RecommendedMedicationTherapy => "recommended_medication_therapy",
            SummaryField::RecommendedNonMedicationTherapy => "recommended_non_medication_therapy",
            SummaryField::Education => "education",
        }
    }

    pub fn from_key(key: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.key() == key)
    }
}

impl fmt::Display for SummaryField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MedicalSummary {
    pub chief_complaint: String,
    pub additional_complaint: String,
    pub history_of_present_illness: String,
    pub past_medical_history: String,
    pub family_history: String,
    pub recommended_medication_therapy: String,
    pub recommended_non_medication_therapy: String,
    pub education: String,
}

impl MedicalSummary {
    pub fn get(&self, field: SummaryField) -> &str {
        match field {
            SummaryField::ChiefComplaint => &self.chief_complaint,
            SummaryField::AdditionalComplaint => &self.additional_complaint,
            SummaryField::HistoryOfPresentIllness => &self.history_of_present_illness,
            SummaryField::PastMedicalHistory => &self.past_medical_history,
            SummaryField::FamilyHistory => &self.family_history,
            SummaryField::RecommendedMedicationTherapy => &self.recommended_medication_therapy,
            SummaryField::RecommendedNonMedicationTherapy => &self.recommended_non_medication_therapy,
            SummaryField::Education => &self.education,
        }
    }

    fn slot(&mut self, field: SummaryField) -> &mut String {
        match field {
            SummaryField::ChiefComplaint => &mut self.chief_complaint,
            SummaryField::AdditionalComplaint => &mut self.additional_complaint,
            SummaryField::HistoryOfPresentIllness => &mut self.history_of_present_illness,
            SummaryField::PastMedicalHistory => &mut self.past_medical_history,
            SummaryField::FamilyHistory => &mut self.family_history,
            SummaryField::RecommendedMedicationTherapy => &mut self.recommended_medication_therapy,
            SummaryField::RecommendedNonMedicationTherapy => &mut self.recommended_non_medication_therapy,
            SummaryField::Education => &mut self.education,
        }
    }

    pub fn fields(&self) -> impl Iterator<Item = (SummaryField, &str)> {
        SummaryField::ALL.into_iter().map(move |f| (f, self.get(f)))
    }

    /// Pretty JSON with the eight keys in declaration order. This is the
    /// `summary.json` artifact.
    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }

    /// Digest of the compact canonical JSON rendering.
    pub fn digest(&self) -> ContentDigest {
        ContentDigest::of_text(&serde_json::to_string(self).expect("summary serializes"))
    }
}

/// True when `value` is the fallback phrase, ignoring surrounding whitespace,
/// a trailing full stop and letter case.
pub fn is_fallback(value: &str) -> bool {
    let trimmed = value.trim();
    let trimmed = trimmed.strip_suffix('.').unwrap_or(trimmed).trim_end();
    trimmed.eq_ignore_ascii_case(FALLBACK_PHRASE)
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SchemaError {
    #[error("summary is not a JSON object: {0}")]
    ParseFailure(String),
    #[error("summary is missing key '{0}'")]
    MissingKey(String),
    #[error("summary has unexpected key '{0}'")]
    UnexpectedKey(String),
    #[error("summary value for '{0}' is not text")]
    NonTextValue(String),
}

impl SchemaError {
    pub fn code(&self) -> &'static str {
        match self {
            SchemaError::ParseFailure(_) => "parse_failure",
            SchemaError::MissingKey(_) => "missing_key",
            SchemaError::UnexpectedKey(_) => "unexpected_key",
            SchemaError::NonTextValue(_) => "non_text_value",
        }
    }
}

/// Strictly validates a JSON object against the eight-key schema. Blank
/// values become the fallback phrase.
///
/// Checks run in a fixed order: parse, then each expected key in declaration
/// order (missing, then non-text), then any key outside the schema.
pub fn validate_summary(json_text: &str) -> Result<MedicalSummary, SchemaError> {
    let value: serde_json::Value =
        serde_json::from_str(json_text).map_err(|e| SchemaError::ParseFailure(e.to_string()))?;
    let serde_json::Value::Object(map) = value else {
        return Err(SchemaError::ParseFailure("top-level value is not an object".into()));
    };

    let mut summary = MedicalSummary {
        chief_complaint: String::new(),
        additional_complaint: String::new(),
        history_of_present_illness: String::new(),
        past_medical_history: String::new(),
        family_history: String::new(),
        recommended_medication_therapy: String::new(),
        recommended_non_medication_therapy: String::new(),
        education: String::new(),
    };
    for field in SummaryField::ALL {
        let value = map
            .get(field.key())
            .ok_or_else(|| SchemaError::MissingKey(field.key().to_string()))?;
        let text = value
            .as_str()
            .ok_or_else(|| SchemaError::NonTextValue(field.key().to_string()))?;
        *summary.slot(field) = if text.trim().is_empty() {
            FALLBACK_PHRASE.to_string()
        } else {
            text.to_string()
        };
    }
    if let Some(extra) = map.keys().find(|k| SummaryField::from_key(k).is_none()) {
        return Err(SchemaError::UnexpectedKey(extra.clone()));
    }
    Ok(summary)
}
