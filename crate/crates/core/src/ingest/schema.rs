use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use thiserror::Error;

use crate::{Category, Theme, RAW_ROWS, REDUCED_ROWS, UNKNOWN, WIDTH};

/// Schema shipped with the crate.
pub const DEFAULT_SCHEMA: &str = include_str!("../../assets/default.schema");

#[derive(Debug, Error)]
pub enum SchemaError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: duplicate attribute name `{name}`")]
    DuplicateName { line: usize, name: String },
    #[error("attribute count: expected {expected}, found {found}")]
    AttributeCount { expected: usize, found: usize },
    #[error("line {line}: band violation: {category} attribute `{attribute}` placed in group {group}")]
    BandViolation {
        line: usize,
        attribute: String,
        category: Category,
        group: usize,
    },
    #[error("group {group} is empty")]
    EmptyGroup { group: usize },
    #[error("group {group} holds {count} attributes, more than {WIDTH}")]
    GroupOverflow { group: usize, count: usize },
    #[error("line {line}: attribute `{attribute}` has theme {found}, group {group} has theme {expected}")]
    ThemeMismatch {
        line: usize,
        attribute: String,
        group: usize,
        expected: Theme,
        found: Theme,
    },
    #[error("cannot read schema: {0}")]
    Io(#[from] std::io::Error),
}

/// Value domain of an attribute.
#[derive(Debug, Clone, PartialEq)]
pub enum AttributeKind {
    Categorical { values: Vec<String> },
    /// Inclusive numeric range.
    Numeric { min: f64, max: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttributeSpec {
    pub name: String,
    pub kind: AttributeKind,
    pub category: Category,
    pub theme: Theme,
    pub group: usize,
}

impl AttributeSpec {
    /// Whether `value` (already standardized) is acceptable for this attribute.
    pub fn accepts(&self, value: &str) -> bool {
        if value == UNKNOWN {
            return true;
        }
        match &self.kind {
            AttributeKind::Categorical { values } => values.iter().any(|v| v == value),
            AttributeKind::Numeric { min, max } => match value.parse::<f64>() {
                Ok(x) => x.is_finite() && x >= *min && x <= *max,
                Err(_) => false,
            },
        }
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self.kind, AttributeKind::Numeric { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupSpec {
    pub index: usize,
    pub category: Category,
    pub theme: Theme,
    /// Member attribute indices, in schema order.
    pub members: Vec<usize>,
}

/// The 31-attribute questionnaire layout and its 18-group organization.
#[derive(Debug, Clone, PartialEq)]
pub struct Schema {
    attributes: Vec<AttributeSpec>,
    groups: Vec<GroupSpec>,
}

impl Schema {
    pub fn default_schema() -> Schema {
        Schema::parse(DEFAULT_SCHEMA).expect("shipped schema is valid")
    }

    pub fn attributes(&self) -> &[AttributeSpec] {
        &self.attributes
    }

    pub fn groups(&self) -> &[GroupSpec] {
        &self.groups
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }

    pub fn attribute(&self, name: &str) -> Option<&AttributeSpec> {
        self.attributes.iter().find(|a| a.name == name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.attributes.iter().map(|a| a.name.as_str())
    }

    /// Parses the block-structured schema text.
    ///
    /// Each block opens with `attribute <name>` and is followed by indented
    /// `key: value` lines for `kind`, `values` or `range`, `category`, `theme`
    /// and `group`. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Schema, SchemaError> {
        let mut blocks: Vec<Block> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = strip_comment(raw).trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix("attribute") {
                let name = rest.trim();
                if !rest.starts_with(char::is_whitespace) || !is_identifier(name) {
                    return Err(syntax(line, format!("expected `attribute <name>`, found `{content}`")));
                }
                blocks.push(Block {
                    line,
                    name: name.to_string(),
                    fields: Vec::new(),
                });
                continue;
            }
            let Some((key, value)) = content.split_once(':') else {
                return Err(syntax(line, format!("expected `key: value`, found `{content}`")));
            };
            let Some(block) = blocks.last_mut() else {
                return Err(syntax(line, "field outside of an attribute block".into()));
            };
            block.fields.push((line, key.trim().to_string(), value.trim().to_string()));
        }

        let mut attributes = Vec::with_capacity(blocks.len());
        let mut lines = Vec::with_capacity(blocks.len());
        let mut seen: HashMap<String, usize> = HashMap::new();
        for block in blocks {
            if seen.insert(block.name.clone(), block.line).is_some() {
                return Err(SchemaError::DuplicateName {
                    line: block.line,
                    name: block.name,
                });
            }
            lines.push(block.line);
            attributes.push(block.into_spec()?);
        }
        Schema::from_attributes_at(attributes, &lines)
    }

    pub fn from_attributes(attributes: Vec<AttributeSpec>) -> Result<Schema, SchemaError> {
        let lines = vec![0; attributes.len()];
        Schema::from_attributes_at(attributes, &lines)
    }

    fn from_attributes_at(
        attributes: Vec<AttributeSpec>,
        lines: &[usize],
    ) -> Result<Schema, SchemaError> {
        if attributes.len() != RAW_ROWS {
            return Err(SchemaError::AttributeCount {
                expected: RAW_ROWS,
                found: attributes.len(),
            });
        }
        let mut names = HashMap::new();
        for (a, &line) in attributes.iter().zip(lines) {
            if names.insert(a.name.as_str(), ()).is_some() {
                return Err(SchemaError::DuplicateName {
                    line,
                    name: a.name.clone(),
                });
            }
        }
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); REDUCED_ROWS];
        for (i, (a, &line)) in attributes.iter().zip(lines).enumerate() {
            let band_ok = a.group < REDUCED_ROWS && Category::of_group(a.group) == Some(a.category);
            if !band_ok {
                return Err(SchemaError::BandViolation {
                    line,
                    attribute: a.name.clone(),
                    category: a.category,
                    group: a.group,
                });
            }
            members[a.group].push(i);
        }
        let mut groups = Vec::with_capacity(REDUCED_ROWS);
        for (index, members) in members.into_iter().enumerate() {
            let Some(&first) = members.first() else {
                return Err(SchemaError::EmptyGroup { group: index });
            };
            if members.len() > WIDTH {
                return Err(SchemaError::GroupOverflow {
                    group: index,
                    count: members.len(),
                });
            }
            let theme = attributes[first].theme;
            if let Some(&bad) = members.iter().find(|&&m| attributes[m].theme != theme) {
                return Err(SchemaError::ThemeMismatch {
                    line: lines[bad],
                    attribute: attributes[bad].name.clone(),
                    group: index,
                    expected: theme,
                    found: attributes[bad].theme,
                });
            }
            groups.push(GroupSpec {
                index,
                category: attributes[first].category,
                theme,
                members,
            });
        }
        Ok(Schema { attributes, groups })
    }
}

impl fmt::Display for Schema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, a) in self.attributes.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            writeln!(f, "attribute {}", a.name)?;
            match &a.kind {
                AttributeKind::Categorical { values } => {
                    writeln!(f, "  kind: categorical")?;
                    writeln!(f, "  values: {}", values.join(", "))?;
                }
                AttributeKind::Numeric { min, max } => {
                    writeln!(f, "  kind: numeric")?;
                    writeln!(f, "  range: {min}, {max}")?;
                }
            }
            writeln!(f, "  category: {}", a.category)?;
            writeln!(f, "  theme: {}", a.theme)?;
            writeln!(f, "  group: {}", a.group)?;
        }
        Ok(())
    }
}

pub fn load_schema(path: impl AsRef<Path>) -> Result<Schema, SchemaError> {
    let text = std::fs::read_to_string(path)?;
    Schema::parse(&text)
}

struct Block {
    line: usize,
    name: String,
    fields: Vec<(usize, String, String)>,
}

impl Block {
    fn into_spec(self) -> Result<AttributeSpec, SchemaError> {
        let mut kind = None;
        let mut values = None;
        let mut range = None;
        let mut category = None;
        let mut theme = None;
        let mut group = None;
        for (line, key, value) in &self.fields {
            let line = *line;
            let dup = match key.as_str() {
                "kind" => kind.replace((line, value.as_str())).is_some(),
                "values" => values.replace((line, value.as_str())).is_some(),
                "range" => range.replace((line, value.as_str())).is_some(),
                "category" => {
                    let c = Category::parse(value)
                        .ok_or_else(|| syntax(line, format!("unknown category `{value}`")))?;
                    category.replace(c).is_some()
                }
                "theme" => {
                    let t = Theme::parse(value)
                        .ok_or_else(|| syntax(line, format!("unknown theme `{value}`")))?;
                    theme.replace(t).is_some()
                }
                "group" => {
                    let g = value
                        .parse::<usize>()
                        .map_err(|_| syntax(line, format!("group must be an integer, found `{value}`")))?;
                    group.replace(g).is_some()
                }
                other => return Err(syntax(line, format!("unknown field `{other}`"))),
            };
            if dup {
                return Err(syntax(line, format!("field `{key}` given twice")));
            }
        }
        let missing = |field: &str| syntax(self.line, format!("attribute `{}` lacks `{field}`", self.name));
        let kind = match kind.ok_or_else(|| missing("kind"))? {
            (_, "categorical") => {
                let (line, list) = values.ok_or_else(|| missing("values"))?;
                let values: Vec<String> = list.split(',').map(|v| v.trim().to_string()).collect();
                if let Some(bad) = values.iter().find(|v| v.is_empty() || v.as_str() == UNKNOWN) {
                    return Err(syntax(line, format!("invalid categorical value `{bad}`")));
                }
                for (i, v) in values.iter().enumerate() {
                    if values[..i].contains(v) {
                        return Err(syntax(line, format!("value `{v}` listed twice")));
                    }
                }
                AttributeKind::Categorical { values }
            }
            (_, "numeric") => {
                let (line, text) = range.ok_or_else(|| missing("range"))?;
                let bounds: Vec<Option<f64>> = text
                    .split(',')
                    .map(|b| b.trim().parse::<f64>().ok().filter(|x| x.is_finite()))
                    .collect();
                match bounds.as_slice() {
                    [Some(min), Some(max)] if min <= max => AttributeKind::Numeric {
                        min: *min,
                        max: *max,
                    },
                    _ => return Err(syntax(line, format!("range must be `min, max`, found `{text}`"))),
                }
            }
            (line, other) => return Err(syntax(line, format!("unknown kind `{other}`"))),
        };
        Ok(AttributeSpec {
            category: category.ok_or_else(|| missing("category"))?,
            theme: theme.ok_or_else(|| missing("theme"))?,
            group: group.ok_or_else(|| missing("group"))?,
            name: self.name,
            kind,
        })
    }
}

fn syntax(line: usize, message: String) -> SchemaError {
    SchemaError::Syntax { line, message }
}

fn strip_comment(line: &str) -> &str {
    line.split_once('#').map_or(line, |(head, _)| head)
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_schema_counts() {
        let schema = Schema::default_schema();
        assert_eq!(schema.attributes().len(), 31);
        assert_eq!(schema.groups().len(), 18);
        let bands: Vec<usize> = Category::ALL
            .iter()
            .map(|c| schema.groups().iter().filter(|g| g.category == *c).count())
            .collect();
        assert_eq!(bands, vec![5, 6, 7]);
        let per_category: Vec<usize> = Category::ALL
            .iter()
            .map(|c| schema.attributes().iter().filter(|a| a.category == *c).count())
            .collect();
        assert_eq!(per_category, vec![8, 12, 11]);
        let themes: std::collections::BTreeSet<_> = schema.attributes().iter().map(|a| a.theme).collect();
        assert_eq!(themes.len(), 6);
    }

    #[test]
    fn thirty_attributes_rejected() {
        let schema = Schema::default_schema();
        let mut attrs = schema.attributes().to_vec();
        // fatigue is the only member of group 17
        attrs.retain(|a| a.name != "hoarseness");
        let err = Schema::from_attributes(attrs).unwrap_err();
        assert!(matches!(err, SchemaError::AttributeCount { found: 30, .. }));
        assert!(err.to_string().contains("attribute count"));
    }

    #[test]
    fn symptom_in_minor_band_rejected() {
        let text = DEFAULT_SCHEMA.replace(
            "attribute fatigue\n  kind: categorical\n  values: no, yes\n  category: symptom\n  theme: thoracic_signs\n  group: 17",
            "attribute fatigue\n  kind: categorical\n  values: no, yes\n  category: symptom\n  theme: thoracic_signs\n  group: 2",
        );
        assert_ne!(text, DEFAULT_SCHEMA);
        let err = Schema::parse(&text).unwrap_err();
        assert!(matches!(err, SchemaError::BandViolation { group: 2, .. }), "{err}");
        assert!(err.to_string().contains("band violation"));
    }

    #[test]
    fn duplicate_name_reports_line() {
        let text = DEFAULT_SCHEMA.replacen("attribute gender", "attribute age", 1);
        match Schema::parse(&text).unwrap_err() {
            SchemaError::DuplicateName { line, name } => {
                assert_eq!(name, "age");
                assert_eq!(text.lines().nth(line - 1).unwrap(), "attribute age");
                assert!(line > 7);
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn display_reparses() {
        let schema = Schema::default_schema();
        assert_eq!(Schema::parse(&schema.to_string()).unwrap(), schema);
    }

    #[test]
    fn accepts_values() {
        let schema = Schema::default_schema();
        let age = schema.attribute("age").unwrap();
        assert!(age.accepts("55"));
        assert!(age.accepts("unknown"));
        assert!(!age.accepts("121"));
        assert!(!age.accepts("old"));
        let gender = schema.attribute("gender").unwrap();
        assert!(gender.accepts("male"));
        assert!(!gender.accepts("Male"));
    }

    #[test]
    fn syntax_errors_carry_lines() {
        let err = Schema::parse("attribute age\n  kind numeric\n").unwrap_err();
        assert!(matches!(err, SchemaError::Syntax { line: 2, .. }));
        let err = Schema::parse("kind: numeric\n").unwrap_err();
        assert!(matches!(err, SchemaError::Syntax { line: 1, .. }));
    }
}
