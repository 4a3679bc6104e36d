use std::fmt;
use std::io::Write;
use std::path::Path;

use thiserror::Error;

use super::Schema;
use crate::RAW_ROWS;

/// Name of the optional trailing label column.
pub const LABEL_COLUMN: &str = "label";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Affected,
    Unaffected,
}

impl Label {
    /// Output slot of this class in a two-way prediction.
    pub fn index(self) -> usize {
        match self {
            Label::Affected => 0,
            Label::Unaffected => 1,
        }
    }

    pub fn is_affected(self) -> bool {
        self == Label::Affected
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Affected => "affected",
            Label::Unaffected => "unaffected",
        }
    }

    pub fn parse(s: &str) -> Option<Label> {
        match s {
            "affected" => Some(Label::Affected),
            "unaffected" => Some(Label::Unaffected),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One individual's answers, aligned with the schema's attribute order.
#[derive(Debug, Clone, PartialEq)]
pub struct PersonRecord {
    pub values: Vec<String>,
    pub label: Option<Label>,
}

impl PersonRecord {
    pub fn new(values: Vec<String>, label: Option<Label>) -> PersonRecord {
        PersonRecord { values, label }
    }

    /// A record whose every answer is `unknown`.
    pub fn unknown(label: Option<Label>) -> PersonRecord {
        PersonRecord {
            values: vec![crate::UNKNOWN.to_string(); RAW_ROWS],
            label,
        }
    }

    pub fn value(&self, schema: &Schema, name: &str) -> Option<&str> {
        schema.index_of(name).map(|i| self.values[i].as_str())
    }

    pub fn set(&mut self, schema: &Schema, name: &str, value: impl Into<String>) {
        let i = schema
            .index_of(name)
            .unwrap_or_else(|| panic!("no attribute `{name}`"));
        self.values[i] = value.into();
    }
}

/// A data row that could not become a record.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseIssue {
    pub line: u64,
    pub message: String,
}

impl fmt::Display for ParseIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("cannot read records: {0}")]
    Io(#[from] std::io::Error),
    #[error("header mismatch: {0}")]
    HeaderMismatch(String),
    #[error("malformed csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Parses comma-separated records. Rows with the wrong number of fields or
/// an unrecognized label become [`ParseIssue`]s.
pub fn parse_records_str(
    text: &str,
    schema: &Schema,
) -> Result<(Vec<PersonRecord>, Vec<ParseIssue>), RecordError> {
    parse_reader(text.as_bytes(), schema)
}

pub fn parse_records(
    path: impl AsRef<Path>,
    schema: &Schema,
) -> Result<(Vec<PersonRecord>, Vec<ParseIssue>), RecordError> {
    let file = std::fs::File::open(path)?;
    parse_reader(std::io::BufReader::new(file), schema)
}

fn parse_reader<R: std::io::Read>(
    reader: R,
    schema: &Schema,
) -> Result<(Vec<PersonRecord>, Vec<ParseIssue>), RecordError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut rows = rdr.records();
    let header = match rows.next() {
        Some(row) => row?,
        None => return Err(RecordError::HeaderMismatch("empty file".into())),
    };
    let names: Vec<&str> = schema.names().collect();
    let with_label = match header.len() {
        n if n == names.len() => false,
        n if n == names.len() + 1 && &header[n - 1] == LABEL_COLUMN => true,
        n => {
            return Err(RecordError::HeaderMismatch(format!(
                "expected {} attribute columns, found {n} columns",
                names.len()
            )))
        }
    };
    for (i, (found, expected)) in header.iter().zip(&names).enumerate() {
        if found.trim() != *expected {
            return Err(RecordError::HeaderMismatch(format!(
                "column {}: expected `{expected}`, found `{found}`",
                i + 1
            )));
        }
    }
    let arity = header.len();

    let mut records = Vec::new();
    let mut issues = Vec::new();
    for row in rows {
        let row = match row {
            Ok(row) => row,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                issues.push(ParseIssue {
                    line,
                    message: e.to_string(),
                });
                continue;
            }
        };
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != arity {
            issues.push(ParseIssue {
                line,
                message: format!("expected {arity} fields, found {}", row.len()),
            });
            continue;
        }
        let values: Vec<String> = row.iter().take(names.len()).map(str::to_string).collect();
        let label = if with_label {
            let text = row[arity - 1].trim();
            if text.is_empty() {
                None
            } else if let Some(label) = Label::parse(text) {
                Some(label)
            } else {
                issues.push(ParseIssue {
                    line,
                    message: format!("unrecognized label `{text}`"),
                });
                continue;
            }
        } else {
            None
        };
        records.push(PersonRecord { values, label });
    }
    Ok((records, issues))
}

/// Serializes records in the same format [`parse_records`] reads. A label
/// column is written when any record carries a label.
pub fn write_records<W: Write>(
    out: W,
    records: &[PersonRecord],
    schema: &Schema,
) -> Result<(), RecordError> {
    let with_label = records.iter().any(|r| r.label.is_some());
    let mut wtr = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = schema.names().collect();
    if with_label {
        header.push(LABEL_COLUMN);
    }
    wtr.write_record(&header)?;
    for record in records {
        let mut row: Vec<&str> = record.values.iter().map(String::as_str).collect();
        if with_label {
            row.push(record.label.map_or("", Label::as_str));
        }
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn records_to_string(records: &[PersonRecord], schema: &Schema) -> String {
    let mut buf = Vec::new();
    write_records(&mut buf, records, schema).expect("writing to memory");
    String::from_utf8(buf).expect("csv output is utf-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header(schema: &Schema, label: bool) -> String {
        let mut h: Vec<&str> = schema.names().collect();
        if label {
            h.push("label");
        }
        h.join(",")
    }

    fn row(n: usize, value: &str, label: Option<&str>) -> String {
        let mut r = vec![value; n];
        if let Some(l) = label {
            r.push(l);
        }
        r.join(",")
    }

    #[test]
    fn two_valid_rows() {
        let schema = Schema::default_schema();
        let text = format!(
            "{}\n{}\n{}\n",
            header(&schema, true),
            row(31, "unknown", Some("affected")),
            row(31, "unknown", Some("unaffected"))
        );
        let (records, issues) = parse_records_str(&text, &schema).unwrap();
        assert_eq!(records.len(), 2);
        assert!(issues.is_empty());
        assert_eq!(records[0].label, Some(Label::Affected));
        assert_eq!(records[1].label, Some(Label::Unaffected));
    }

    #[test]
    fn short_row_becomes_issue() {
        let schema = Schema::default_schema();
        let text = format!("{}\n{}\n", header(&schema, false), row(30, "unknown", None));
        let (records, issues) = parse_records_str(&text, &schema).unwrap();
        assert!(records.is_empty());
        assert_eq!(issues.len(), 1);
        assert_eq!(issues[0].line, 2);
    }

    #[test]
    fn unlabeled_file() {
        let schema = Schema::default_schema();
        let text = format!("{}\n{}\n", header(&schema, false), row(31, "x", None));
        let (records, _) = parse_records_str(&text, &schema).unwrap();
        assert_eq!(records[0].label, None);
        assert_eq!(records[0].values.len(), 31);
    }

    #[test]
    fn header_mismatch() {
        let schema = Schema::default_schema();
        let text = header(&schema, false).replace("gender", "sex");
        assert!(matches!(
            parse_records_str(&text, &schema),
            Err(RecordError::HeaderMismatch(_))
        ));
        assert!(matches!(
            parse_records_str("", &schema),
            Err(RecordError::HeaderMismatch(_))
        ));
    }

    #[test]
    fn bad_label_is_issue() {
        let schema = Schema::default_schema();
        let text = format!("{}\n{}\n", header(&schema, true), row(31, "unknown", Some("sick")));
        let (records, issues) = parse_records_str(&text, &schema).unwrap();
        assert!(records.is_empty());
        assert!(issues[0].message.contains("sick"));
    }

    #[test]
    fn quoted_values_survive_round_trip() {
        let schema = Schema::default_schema();
        let mut r = PersonRecord::unknown(Some(Label::Affected));
        r.values[3] = "a, \"quoted\" value".into();
        let text = records_to_string(std::slice::from_ref(&r), &schema);
        let (back, issues) = parse_records_str(&text, &schema).unwrap();
        assert!(issues.is_empty());
        assert_eq!(back, vec![r]);
    }
}
