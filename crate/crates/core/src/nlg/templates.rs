//! Template table: `PREDICATE.VERBOSITY` keys mapped to sentence templates
//! with `{slot}` placeholders.

use std::collections::BTreeMap;

use serde_json::Value;
use thiserror::Error;

use super::Verbosity;
use crate::road::Tag;

const DEFAULT_TEMPLATES: &str = include_str!("../../data/templates.json");

/// Predicates realized per verbosity level.
pub const SENTENCE_KEYS: [&str; 11] = [
    "HANDOVER_REQUEST",
    "TIME_BUDGET",
    "HAZARD_FOG",
    "HAZARD_TUNNEL",
    "HAZARD_CONSTRUCTION",
    "HAZARD_ICE",
    "HAZARD_SENSOR_DEAD_ZONE",
    "HAZARDS",
    "OBSTACLE",
    "SENSOR_LOSS",
    "ACTION_ADVICE",
];

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("template table is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("template table must be a JSON object of strings")]
    Shape,
    #[error("missing template `{0}`")]
    Missing(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemplateTable {
    entries: BTreeMap<String, String>,
}

impl TemplateTable {
    /// Builds a table without checking completeness.
    pub fn from_map(entries: BTreeMap<String, String>) -> Self {
        Self { entries }
    }

    /// Parses a table and checks that every sentence key exists at every
    /// verbosity, along with the compact core and one noun per tag.
    pub fn parse(text: &str) -> Result<Self, TemplateError> {
        let doc: Value = serde_json::from_str(text)?;
        let obj = doc.as_object().ok_or(TemplateError::Shape)?;
        let mut entries = BTreeMap::new();
        for (k, v) in obj {
            entries.insert(k.clone(), v.as_str().ok_or(TemplateError::Shape)?.to_string());
        }
        let table = Self { entries };
        let mut required: Vec<String> = SENTENCE_KEYS
            .iter()
            .flat_map(|k| Verbosity::ALL.iter().map(move |v| format!("{k}.{}", v.as_str())))
            .collect();
        required.push("CORE.COMPACT".into());
        required.extend(Tag::ALL.iter().map(|t| format!("NOUN.{}", t.as_str())));
        if let Some(missing) = required.into_iter().find(|k| !table.entries.contains_key(k)) {
            return Err(TemplateError::Missing(missing));
        }
        Ok(table)
    }

    pub fn default_table() -> Self {
        Self::parse(DEFAULT_TEMPLATES).expect("shipped templates are complete")
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn sentence(&self, predicate: &str, verbosity: Verbosity) -> Option<&str> {
        self.get(&format!("{predicate}.{}", verbosity.as_str()))
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

/// Replaces every `{name}` with its value from `slots`; unknown slots are
/// left as written.
pub fn fill(template: &str, slots: &[(&str, String)]) -> String {
    let mut out = template.to_string();
    for (name, value) in slots {
        out = out.replace(&format!("{{{name}}}"), value);
    }
    out
}
