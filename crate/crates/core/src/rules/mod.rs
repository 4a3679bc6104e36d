//! Semantic transformation rules.
//!
//! Every questionnaire attribute has one rule that maps its cleaned value to
//! a short sequence of incidence weights in `[0, 1]`. The weights fill the
//! leading word slots of the attribute's row in the raw semantic matrix.

mod lexer;
mod parser;

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use thiserror::Error;

use crate::ingest::{AttributeKind, PersonRecord, Schema};
use crate::{Category, Theme, RAW_ROWS, UNKNOWN, WIDTH};

/// Rules shipped with the crate, written against the default schema.
pub const DEFAULT_RULES: &str = include_str!("../../assets/default.rules");

#[derive(Debug, Clone, PartialEq)]
pub struct CategoricalArm {
    pub value: String,
    pub weights: Vec<f64>,
}

/// Matches values in the half-open interval `[lo, hi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericArm {
    pub lo: f64,
    pub hi: f64,
    pub weights: Vec<f64>,
}

impl NumericArm {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x < self.hi
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Mapping {
    Categorical(Vec<CategoricalArm>),
    /// Arms sorted by lower bound, pairwise disjoint.
    Numeric(Vec<NumericArm>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub name: String,
    pub attribute: String,
    /// Filled from the schema once the rule is part of a [`RuleSet`].
    pub category: Option<Category>,
    pub theme: Option<Theme>,
    pub mapping: Mapping,
    pub default: Vec<f64>,
}

impl Rule {
    /// Number of word slots this rule can emit: the longest weight sequence
    /// among its arms and default.
    pub fn width(&self) -> usize {
        let arms = match &self.mapping {
            Mapping::Categorical(arms) => arms.iter().map(|a| a.weights.len()).max(),
            Mapping::Numeric(arms) => arms.iter().map(|a| a.weights.len()).max(),
        };
        arms.unwrap_or(0).max(self.default.len())
    }

    /// Weights for one cleaned value. `unknown` yields the zero vector; a
    /// value no arm matches yields the default arm.
    pub fn apply(&self, value: &str) -> Result<WeightVector, ValueParseError> {
        if value == UNKNOWN {
            return Ok(WeightVector::zeros());
        }
        let weights = match &self.mapping {
            Mapping::Categorical(arms) => arms.iter().find(|a| a.value == value).map(|a| &a.weights),
            Mapping::Numeric(arms) => {
                let x = value
                    .trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|x| !x.is_nan())
                    .ok_or_else(|| ValueParseError {
                        attribute: self.attribute.clone(),
                        value: value.to_string(),
                    })?;
                arms.iter().find(|a| a.contains(x)).map(|a| &a.weights)
            }
        };
        Ok(WeightVector::from_slice(weights.unwrap_or(&self.default)))
    }
}

pub fn apply_rule(rule: &Rule, value: &str) -> Result<WeightVector, ValueParseError> {
    rule.apply(value)
}

/// Thirteen word slots, right-padded with zeros.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightVector(pub [f64; WIDTH]);

impl WeightVector {
    pub fn zeros() -> WeightVector {
        WeightVector([0.0; WIDTH])
    }

    fn from_slice(weights: &[f64]) -> WeightVector {
        let mut v = [0.0; WIDTH];
        v[..weights.len()].copy_from_slice(weights);
        WeightVector(v)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("attribute `{attribute}`: `{value}` is not a number")]
pub struct ValueParseError {
    pub attribute: String,
    pub value: String,
}

/// One rule per schema attribute, in schema order.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleSet {
    rules: Vec<Rule>,
}

impl RuleSet {
    pub fn default_rules(schema: &Schema) -> RuleSet {
        parse_ruleset(DEFAULT_RULES, schema).expect("shipped rules are valid")
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Weight vectors for every attribute of a cleaned record.
    pub fn evaluate(&self, record: &PersonRecord) -> Result<Vec<WeightVector>, ValueParseError> {
        self.rules
            .iter()
            .zip(&record.values)
            .map(|(rule, value)| rule.apply(value))
            .collect()
    }
}

pub fn evaluate(rules: &RuleSet, record: &PersonRecord) -> Result<Vec<WeightVector>, ValueParseError> {
    rules.evaluate(record)
}

/// A problem found in rule text, anchored at a 1-based line and column.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub line: usize,
    pub col: usize,
    pub kind: DiagnosticKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DiagnosticKind {
    Lexical(String),
    Syntax { expected: String, found: String },
    UnknownName(String),
    DuplicateField(String),
    MissingField(String),
    MixedArms,
    DuplicateArm(String),
    WeightRange(f64),
    WeightCount(usize),
    EmptyInterval { lo: f64, hi: f64 },
    OverlappingIntervals { first: (f64, f64), second: (f64, f64) },
    UnknownAttribute(String),
    DuplicateRule(String),
    Coverage(Vec<String>),
    KindMismatch(String),
    UnknownValue { attribute: String, value: String },
    SchemaMismatch(String),
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}:{}: {}", self.line, self.col, self.kind)
    }
}

impl fmt::Display for DiagnosticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiagnosticKind::Lexical(m) => write!(f, "{m}"),
            DiagnosticKind::Syntax { expected, found } => {
                write!(f, "syntax error: expected {expected}, found {found}")
            }
            DiagnosticKind::UnknownName(what) => write!(f, "unknown {what}"),
            DiagnosticKind::DuplicateField(name) => write!(f, "field `{name}` given twice"),
            DiagnosticKind::MissingField(name) => write!(f, "rule lacks `{name}`"),
            DiagnosticKind::MixedArms => write!(f, "map mixes quoted values and intervals"),
            DiagnosticKind::DuplicateArm(v) => write!(f, "value \"{v}\" mapped twice"),
            DiagnosticKind::WeightRange(w) => write!(f, "weight {w} outside [0, 1]"),
            DiagnosticKind::WeightCount(n) => {
                write!(f, "{n} weights exceed the {WIDTH} word slots of a row")
            }
            DiagnosticKind::EmptyInterval { lo, hi } => write!(f, "empty interval [{lo}, {hi})"),
            DiagnosticKind::OverlappingIntervals { first, second } => write!(
                f,
                "overlapping intervals [{}, {}) and [{}, {})",
                first.0, first.1, second.0, second.1
            ),
            DiagnosticKind::UnknownAttribute(name) => write!(f, "unknown attribute `{name}`"),
            DiagnosticKind::DuplicateRule(name) => {
                write!(f, "duplicate rule for attribute `{name}`")
            }
            DiagnosticKind::Coverage(missing) => {
                write!(f, "no rule for attributes: {}", missing.join(", "))
            }
            DiagnosticKind::KindMismatch(m) => write!(f, "{m}"),
            DiagnosticKind::UnknownValue { attribute, value } => {
                write!(f, "attribute `{attribute}` has no value \"{value}\"")
            }
            DiagnosticKind::SchemaMismatch(m) => write!(f, "{m}"),
        }
    }
}

/// All diagnostics from a rejected rule file.
#[derive(Debug, Clone, PartialEq, Error)]
pub struct RuleErrors(pub Vec<Diagnostic>);

impl fmt::Display for RuleErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

/// Parses rule text without a schema. Checks syntax, weight ranges and
/// lengths, and interval disjointness; numeric arms come back sorted.
pub fn parse_rules(text: &str) -> Result<Vec<Rule>, RuleErrors> {
    let (rules, diagnostics) = parse_with_lines(text);
    if diagnostics.is_empty() {
        Ok(rules.into_iter().map(|r| r.rule).collect())
    } else {
        Err(RuleErrors(diagnostics))
    }
}

fn parse_with_lines(text: &str) -> (Vec<parser::ParsedRule>, Vec<Diagnostic>) {
    let (tokens, mut diagnostics) = lexer::tokenize(text);
    let (rules, more) = parser::parse_tokens(&tokens);
    diagnostics.extend(more);
    diagnostics.sort_by_key(|d| (d.line, d.col));
    (rules, diagnostics)
}

/// Parses rule text and binds it to a schema: exactly one rule per
/// attribute, value kinds and categorical values consistent with the schema.
/// Parsing is total; every rejection carries line-anchored diagnostics.
pub fn parse_ruleset(text: &str, schema: &Schema) -> Result<RuleSet, RuleErrors> {
    let (parsed, mut diagnostics) = parse_with_lines(text);
    let eof_line = text.lines().count().max(1);

    let mut slots: Vec<Option<Rule>> = vec![None; schema.attributes().len()];
    let mut seen: HashMap<usize, usize> = HashMap::new();
    for p in parsed {
        let report = |d: &mut Vec<Diagnostic>, line: usize, kind| d.push(Diagnostic { line, col: 1, kind });
        let Some(index) = schema.index_of(&p.rule.attribute) else {
            report(
                &mut diagnostics,
                p.attribute_line,
                DiagnosticKind::UnknownAttribute(p.rule.attribute.clone()),
            );
            continue;
        };
        if seen.insert(index, p.line).is_some() {
            report(&mut diagnostics, p.line, DiagnosticKind::DuplicateRule(p.rule.attribute.clone()));
            continue;
        }
        let spec = &schema.attributes()[index];
        let before = diagnostics.len();
        if let Some((c, line)) = p.category.filter(|(c, _)| *c != spec.category) {
            report(
                &mut diagnostics,
                line,
                DiagnosticKind::SchemaMismatch(format!(
                    "rule says category {c}, schema has {} for `{}`",
                    spec.category, spec.name
                )),
            );
        }
        if let Some((t, line)) = p.theme.filter(|(t, _)| *t != spec.theme) {
            report(
                &mut diagnostics,
                line,
                DiagnosticKind::SchemaMismatch(format!(
                    "rule says theme {t}, schema has {} for `{}`",
                    spec.theme, spec.name
                )),
            );
        }
        match (&p.rule.mapping, &spec.kind) {
            (Mapping::Categorical(arms), AttributeKind::Categorical { values }) => {
                for (arm, &line) in arms.iter().zip(&p.arm_lines) {
                    if !values.contains(&arm.value) {
                        report(
                            &mut diagnostics,
                            line,
                            DiagnosticKind::UnknownValue {
                                attribute: spec.name.clone(),
                                value: arm.value.clone(),
                            },
                        );
                    }
                }
            }
            (Mapping::Numeric(_), AttributeKind::Numeric { .. }) => {}
            (Mapping::Categorical(_), AttributeKind::Numeric { .. }) => report(
                &mut diagnostics,
                p.attribute_line,
                DiagnosticKind::KindMismatch(format!(
                    "numeric attribute `{}` needs interval arms",
                    spec.name
                )),
            ),
            (Mapping::Numeric(_), AttributeKind::Categorical { .. }) => report(
                &mut diagnostics,
                p.attribute_line,
                DiagnosticKind::KindMismatch(format!(
                    "categorical attribute `{}` needs quoted-value arms",
                    spec.name
                )),
            ),
        }
        if diagnostics.len() == before {
            let mut rule = p.rule;
            rule.category = Some(spec.category);
            rule.theme = Some(spec.theme);
            slots[index] = Some(rule);
        }
    }

    let missing: Vec<String> = schema
        .attributes()
        .iter()
        .enumerate()
        .filter(|(i, _)| !seen.contains_key(i))
        .map(|(_, a)| a.name.clone())
        .collect();
    if !missing.is_empty() {
        diagnostics.push(Diagnostic {
            line: eof_line,
            col: 1,
            kind: DiagnosticKind::Coverage(missing),
        });
    }
    if !diagnostics.is_empty() {
        diagnostics.sort_by_key(|d| (d.line, d.col));
        return Err(RuleErrors(diagnostics));
    }
    let rules: Vec<Rule> = slots.into_iter().map(|r| r.expect("every slot filled")).collect();
    debug_assert_eq!(rules.len(), RAW_ROWS);
    Ok(RuleSet { rules })
}

pub fn load_ruleset(path: impl AsRef<Path>, schema: &Schema) -> Result<RuleSet, LoadRulesError> {
    let text = std::fs::read_to_string(path)?;
    Ok(parse_ruleset(&text, schema)?)
}

#[derive(Debug, Error)]
pub enum LoadRulesError {
    #[error("cannot read rules: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Invalid(#[from] RuleErrors),
}

fn write_weights(f: &mut fmt::Formatter<'_>, weights: &[f64]) -> fmt::Result {
    for (i, w) in weights.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{w}")?;
    }
    Ok(())
}

fn write_quoted(f: &mut fmt::Formatter<'_>, s: &str) -> fmt::Result {
    f.write_str("\"")?;
    for c in s.chars() {
        match c {
            '"' => f.write_str("\\\"")?,
            '\\' => f.write_str("\\\\")?,
            '\n' => f.write_str("\\n")?,
            c => write!(f, "{c}")?,
        }
    }
    f.write_str("\"")
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "rule {} {{", self.name)?;
        writeln!(f, "  attribute: {};", self.attribute)?;
        if let Some(c) = self.category {
            writeln!(f, "  category: {c};")?;
        }
        if let Some(t) = self.theme {
            writeln!(f, "  theme: {t};")?;
        }
        f.write_str("  map:")?;
        match &self.mapping {
            Mapping::Categorical(arms) => {
                for (i, arm) in arms.iter().enumerate() {
                    f.write_str(if i == 0 { " " } else { ";\n       " })?;
                    write_quoted(f, &arm.value)?;
                    f.write_str(" -> ")?;
                    write_weights(f, &arm.weights)?;
                }
            }
            Mapping::Numeric(arms) => {
                for (i, arm) in arms.iter().enumerate() {
                    f.write_str(if i == 0 { " " } else { ";\n       " })?;
                    write!(f, "[{}, {}) -> ", arm.lo, arm.hi)?;
                    write_weights(f, &arm.weights)?;
                }
            }
        }
        f.write_str(";\n  default -> ")?;
        write_weights(f, &self.default)?;
        f.write_str("\n}\n")
    }
}

impl fmt::Display for RuleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, rule) in self.rules.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{rule}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests;
