//! Query catalogs: named temporal queries with a severity and weight.
//!
//! Text format, one entry per line, `#` starts a comment:
//!
//! ```text
//! NAME : SEVERITY : WEIGHT : FORMULA
//! ```

use std::collections::HashSet;

use thiserror::Error;

use super::abstraction::Proposition;
use super::ast::Formula;
use super::parser::{parse_query, ParseError};

const DEFAULT_CATALOG: &str = include_str!("../../data/default_catalog.tql");

#[derive(Debug, Clone, PartialEq)]
pub struct CatalogEntry {
    pub name: String,
    /// 1 (minor) to 5 (severe).
    pub severity: u8,
    pub weight: f64,
    pub formula: Formula<Proposition>,
}

impl CatalogEntry {
    pub fn contribution(&self) -> f64 {
        f64::from(self.severity) * self.weight
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CatalogError {
    #[error("line {line}: expected `NAME : SEVERITY : WEIGHT : FORMULA`")]
    Shape { line: usize },
    #[error("line {line}: invalid name `{name}`")]
    InvalidName { line: usize, name: String },
    #[error("line {line}: duplicate query name `{name}`")]
    DuplicateName { line: usize, name: String },
    #[error("line {line}: severity `{value}` must be an integer in 1..=5")]
    Severity { line: usize, value: String },
    #[error("line {line}: weight `{value}` must be a positive number")]
    Weight { line: usize, value: String },
    #[error("line {line}, column {column}: {source}")]
    Formula {
        line: usize,
        column: usize,
        source: ParseError,
    },
    #[error("line {line}: unknown atom `{atom}`")]
    UnknownAtom { line: usize, atom: String },
}

impl CatalogError {
    pub fn line(&self) -> usize {
        match self {
            CatalogError::Shape { line }
            | CatalogError::InvalidName { line, .. }
            | CatalogError::DuplicateName { line, .. }
            | CatalogError::Severity { line, .. }
            | CatalogError::Weight { line, .. }
            | CatalogError::Formula { line, .. }
            | CatalogError::UnknownAtom { line, .. } => *line,
        }
    }
}

/// An immutable, validated list of queries. Order is significant: it is the
/// tie-break order for message content.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryCatalog {
    entries: Vec<CatalogEntry>,
}

fn valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    chars.next().is_some_and(|c| c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl QueryCatalog {
    /// Builds a catalog from already-resolved entries, enforcing unique
    /// names, severities in 1..=5 and positive weights.
    pub fn new(entries: Vec<CatalogEntry>) -> Result<Self, CatalogError> {
        let mut seen = HashSet::new();
        for (i, e) in entries.iter().enumerate() {
            let line = i + 1;
            if !seen.insert(e.name.clone()) {
                return Err(CatalogError::DuplicateName {
                    line,
                    name: e.name.clone(),
                });
            }
            if !(1..=5).contains(&e.severity) {
                return Err(CatalogError::Severity {
                    line,
                    value: e.severity.to_string(),
                });
            }
            if !(e.weight.is_finite() && e.weight > 0.0) {
                return Err(CatalogError::Weight {
                    line,
                    value: e.weight.to_string(),
                });
            }
        }
        Ok(Self { entries })
    }

    pub fn parse(text: &str) -> Result<Self, CatalogError> {
        let mut entries = Vec::new();
        let mut seen = HashSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("");
            if content.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = content.splitn(4, ':').collect();
            if parts.len() != 4 {
                return Err(CatalogError::Shape { line });
            }
            let name = parts[0].trim();
            if !valid_name(name) {
                return Err(CatalogError::InvalidName {
                    line,
                    name: name.to_string(),
                });
            }
            if !seen.insert(name.to_string()) {
                return Err(CatalogError::DuplicateName {
                    line,
                    name: name.to_string(),
                });
            }
            let sev_text = parts[1].trim();
            let severity = sev_text
                .parse::<u8>()
                .ok()
                .filter(|s| (1..=5).contains(s))
                .ok_or_else(|| CatalogError::Severity {
                    line,
                    value: sev_text.to_string(),
                })?;
            let weight_text = parts[2].trim();
            let weight = weight_text
                .parse::<f64>()
                .ok()
                .filter(|w| w.is_finite() && *w > 0.0)
                .ok_or_else(|| CatalogError::Weight {
                    line,
                    value: weight_text.to_string(),
                })?;
            // column of the formula text within the raw line, 1-based
            let formula_offset = parts[..3].iter().map(|p| p.len() + 1).sum::<usize>();
            let parsed = parse_query(parts[3]).map_err(|source| CatalogError::Formula {
                line,
                column: formula_offset + source.position() + 1,
                source,
            })?;
            let formula = parsed
                .resolve()
                .map_err(|atom| CatalogError::UnknownAtom { line, atom })?;
            entries.push(CatalogEntry {
                name: name.to_string(),
                severity,
                weight,
                formula,
            });
        }
        Ok(Self { entries })
    }

    /// The shipped catalog of the four handover situations.
    pub fn default_catalog() -> Self {
        Self::parse(DEFAULT_CATALOG).expect("shipped catalog is valid")
    }

    pub fn entries(&self) -> &[CatalogEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&CatalogEntry> {
        self.entries.iter().find(|e| e.name == name)
    }
}
