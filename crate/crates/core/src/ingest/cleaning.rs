use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use thiserror::Error;

use super::{PersonRecord, Schema};
use crate::UNKNOWN;

pub const DEFAULT_CLEANING: &str = include_str!("../../assets/default.clean");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CasePolicy {
    Lower,
    Keep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WhitespacePolicy {
    /// Strip leading and trailing whitespace.
    Trim,
    /// Trim, then replace every internal whitespace run by one space.
    Collapse,
    Keep,
}

/// Settings for the three cleaning passes.
#[derive(Debug, Clone, PartialEq)]
pub struct CleaningConfig {
    pub case: CasePolicy,
    pub whitespace: WhitespacePolicy,
    /// Standardized values replaced by `unknown`.
    pub irrelevant_markers: BTreeSet<String>,
    /// Standardized misspelling to canonical value.
    pub typo_dictionary: BTreeMap<String, String>,
}

#[derive(Debug, Error)]
pub enum CleaningConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("typo `{key}` maps to `{value}`, which no attribute accepts")]
    InvalidCorrection { key: String, value: String },
    #[error("typo key `{0}` is itself a valid value")]
    AmbiguousTypo(String),
    #[error("irrelevant marker `{0}` is a valid value")]
    AmbiguousMarker(String),
    #[error("cannot read cleaning config: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("attribute `{attribute}`: value `{value}` is invalid after cleaning")]
pub struct CleaningError {
    pub attribute: String,
    pub value: String,
}

impl Default for CleaningConfig {
    fn default() -> Self {
        CleaningConfig {
            case: CasePolicy::Lower,
            whitespace: WhitespacePolicy::Trim,
            irrelevant_markers: BTreeSet::new(),
            typo_dictionary: BTreeMap::new(),
        }
    }
}

impl CleaningConfig {
    pub fn default_config() -> CleaningConfig {
        CleaningConfig::parse(DEFAULT_CLEANING).expect("shipped cleaning config is valid")
    }

    /// Parses `key: value` lines: `case`, `whitespace`, `irrelevant` (comma
    /// list, may repeat) and `typo` (`wrong -> right`, may repeat). Keys and
    /// markers are stored standardized.
    pub fn parse(text: &str) -> Result<CleaningConfig, CleaningConfigError> {
        let mut cfg = CleaningConfig::default();
        let mut markers = Vec::new();
        let mut typos = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split_once('#').map_or(raw, |(h, _)| h).trim();
            if content.is_empty() {
                continue;
            }
            let err = |message: String| CleaningConfigError::Syntax { line, message };
            let (key, value) = content
                .split_once(':')
                .ok_or_else(|| err(format!("expected `key: value`, found `{content}`")))?;
            let value = value.trim();
            match key.trim() {
                "case" => {
                    cfg.case = match value {
                        "lower" => CasePolicy::Lower,
                        "keep" => CasePolicy::Keep,
                        v => return Err(err(format!("case must be lower or keep, found `{v}`"))),
                    }
                }
                "whitespace" => {
                    cfg.whitespace = match value {
                        "trim" => WhitespacePolicy::Trim,
                        "collapse" => WhitespacePolicy::Collapse,
                        "keep" => WhitespacePolicy::Keep,
                        v => {
                            return Err(err(format!(
                                "whitespace must be trim, collapse or keep, found `{v}`"
                            )))
                        }
                    }
                }
                "irrelevant" => markers.extend(value.split(',').map(str::to_string)),
                "typo" => {
                    let (wrong, right) = value
                        .split_once("->")
                        .ok_or_else(|| err(format!("expected `wrong -> right`, found `{value}`")))?;
                    typos.push((line, wrong.to_string(), right.trim().to_string()));
                }
                k => return Err(err(format!("unknown key `{k}`"))),
            }
        }
        for m in markers {
            cfg.irrelevant_markers.insert(cfg.standardize(&m));
        }
        for (line, wrong, right) in typos {
            let key = cfg.standardize(&wrong);
            if cfg.typo_dictionary.insert(key.clone(), right).is_some() {
                return Err(CleaningConfigError::Syntax {
                    line,
                    message: format!("typo `{key}` listed twice"),
                });
            }
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<CleaningConfig, CleaningConfigError> {
        CleaningConfig::parse(&std::fs::read_to_string(path)?)
    }

    /// Checks the config against a schema: every correction must be a valid,
    /// standardized value for some attribute, and no typo key or marker may
    /// itself be a valid value (which would make cleaning non-idempotent).
    pub fn validate(&self, schema: &Schema) -> Result<(), CleaningConfigError> {
        let valid_somewhere = |v: &str| schema.attributes().iter().any(|a| a.accepts(v));
        for (key, value) in &self.typo_dictionary {
            if !valid_somewhere(value) || self.standardize(value) != *value {
                return Err(CleaningConfigError::InvalidCorrection {
                    key: key.clone(),
                    value: value.clone(),
                });
            }
            if valid_somewhere(key) {
                return Err(CleaningConfigError::AmbiguousTypo(key.clone()));
            }
        }
        if let Some(m) = self
            .irrelevant_markers
            .iter()
            .find(|m| m.as_str() != UNKNOWN && valid_somewhere(m))
        {
            return Err(CleaningConfigError::AmbiguousMarker(m.clone()));
        }
        Ok(())
    }

    pub fn standardize(&self, value: &str) -> String {
        let spaced = match self.whitespace {
            WhitespacePolicy::Keep => value.to_string(),
            WhitespacePolicy::Trim => value.trim().to_string(),
            WhitespacePolicy::Collapse => value.split_whitespace().collect::<Vec<_>>().join(" "),
        };
        match self.case {
            CasePolicy::Lower => spaced.to_lowercase(),
            CasePolicy::Keep => spaced,
        }
    }

    /// Runs the three passes on one value: standardize, typo-fix, then
    /// irrelevant-drop.
    pub fn clean_value(&self, value: &str) -> String {
        let standardized = self.standardize(value);
        let fixed = match self.typo_dictionary.get(&standardized) {
            Some(right) => right.clone(),
            None => standardized,
        };
        if fixed.is_empty() || self.irrelevant_markers.contains(&fixed) {
            UNKNOWN.to_string()
        } else {
            fixed
        }
    }
}

pub fn clean_record(
    record: &PersonRecord,
    cfg: &CleaningConfig,
    schema: &Schema,
) -> Result<PersonRecord, CleaningError> {
    let values = record
        .values
        .iter()
        .zip(schema.attributes())
        .map(|(value, spec)| {
            let cleaned = cfg.clean_value(value);
            if spec.accepts(&cleaned) {
                Ok(cleaned)
            } else {
                Err(CleaningError {
                    attribute: spec.name.clone(),
                    value: cleaned,
                })
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PersonRecord {
        values,
        label: record.label,
    })
}
