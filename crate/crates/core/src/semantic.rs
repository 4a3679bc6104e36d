//! Raw and reduced semantic matrices.
//!
//! The raw matrix has one row per attribute. Reduction concatenates the
//! emitted weights of every attribute in a group into that group's row, at
//! column offsets fixed by the rules' declared widths, so the layout does not
//! depend on the record and no weight is lost.

use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::ingest::{PersonRecord, Schema};
use crate::rules::{RuleSet, ValueParseError};
use crate::{Category, RAW_ROWS, REDUCED_ROWS, WIDTH};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Value(#[from] ValueParseError),
    #[error("group {group} needs {needed} slots, more than {WIDTH}")]
    PlanOverflow { group: usize, needed: usize },
    #[error("shape error: {0}")]
    Shape(String),
    #[error("plan line {line}: {message}")]
    PlanSyntax { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Form {
    Raw,
    Reduced,
}

/// Origin of a reduced-matrix cell in the raw matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellSource {
    pub row: usize,
    pub col: usize,
    pub attribute: usize,
    pub slot: usize,
}

/// Dense row-major matrix with 13 columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SemanticMatrix {
    form: Form,
    rows: usize,
    data: Vec<f64>,
    /// Reduced form only: one entry per nonzero cell, in row-major order.
    provenance: Vec<CellSource>,
}

impl SemanticMatrix {
    pub fn zeros(form: Form) -> SemanticMatrix {
        let rows = match form {
            Form::Raw => RAW_ROWS,
            Form::Reduced => REDUCED_ROWS,
        };
        SemanticMatrix {
            form,
            rows,
            data: vec![0.0; rows * WIDTH],
            provenance: Vec::new(),
        }
    }

    /// Builds a reduced-form matrix from plain data, without provenance.
    /// Used for model inputs read from dumps or built in tests.
    pub fn reduced_from_rows(rows: &[[f64; WIDTH]]) -> Result<SemanticMatrix, PipelineError> {
        if rows.len() != REDUCED_ROWS {
            return Err(PipelineError::Shape(format!(
                "expected {REDUCED_ROWS} rows, found {}",
                rows.len()
            )));
        }
        Ok(SemanticMatrix {
            form: Form::Reduced,
            rows: REDUCED_ROWS,
            data: rows.iter().flatten().copied().collect(),
            provenance: Vec::new(),
        })
    }

    pub fn form(&self) -> Form {
        self.form
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        WIDTH
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * WIDTH + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * WIDTH..(row + 1) * WIDTH]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn provenance(&self) -> &[CellSource] {
        &self.provenance
    }

    /// Nonzero entries, sorted by value (total order).
    pub fn nonzero_multiset(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.data.iter().copied().filter(|&x| x != 0.0).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    /// Text grid: one row per line, six fractional digits.
    pub fn dump(&self) -> String {
        self.to_string()
    }

    /// Reads a dump back. Provenance is not part of the dump.
    pub fn parse_dump(text: &str) -> Result<SemanticMatrix, PipelineError> {
        let mut data = Vec::new();
        let mut rows = 0;
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let vals: Result<Vec<f64>, _> = line.split_whitespace().map(str::parse::<f64>).collect();
            let vals = vals.map_err(|e| PipelineError::Shape(format!("line {}: {e}", i + 1)))?;
            if vals.len() != WIDTH {
                return Err(PipelineError::Shape(format!(
                    "line {}: expected {WIDTH} entries, found {}",
                    i + 1,
                    vals.len()
                )));
            }
            data.extend(vals);
            rows += 1;
        }
        let form = match rows {
            RAW_ROWS => Form::Raw,
            REDUCED_ROWS => Form::Reduced,
            n => return Err(PipelineError::Shape(format!("{n} rows is neither raw nor reduced"))),
        };
        Ok(SemanticMatrix {
            form,
            rows,
            data,
            provenance: Vec::new(),
        })
    }
}

impl fmt::Display for SemanticMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.rows {
            let row: Vec<String> = self.row(r).iter().map(|x| format!("{x:.6}")).collect();
            writeln!(f, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

/// Placement of one attribute inside its group's reduced row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Placement {
    pub attribute: usize,
    pub offset: usize,
    pub width: usize,
}

/// Column layout of the reduced matrix: for each group, its members in
/// schema order and their offsets.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupingPlan {
    groups: Vec<Vec<Placement>>,
    categories: Vec<Category>,
}

impl GroupingPlan {
    /// Consecutive offsets from the rules' declared widths.
    pub fn new(schema: &Schema, rules: &RuleSet) -> Result<GroupingPlan, PipelineError> {
        let mut groups = Vec::with_capacity(REDUCED_ROWS);
        for g in schema.groups() {
            let mut offset = 0;
            let mut row = Vec::with_capacity(g.members.len());
            for &attribute in &g.members {
                let width = rules.rules()[attribute].width();
                row.push(Placement {
                    attribute,
                    offset,
                    width,
                });
                offset += width;
            }
            if offset > WIDTH {
                return Err(PipelineError::PlanOverflow {
                    group: g.index,
                    needed: offset,
                });
            }
            groups.push(row);
        }
        Ok(GroupingPlan {
            groups,
            categories: schema.groups().iter().map(|g| g.category).collect(),
        })
    }

    pub fn groups(&self) -> &[Vec<Placement>] {
        &self.groups
    }

    pub fn category_of_row(&self, row: usize) -> Category {
        self.categories[row]
    }

    /// Parses a plan file with lines `<group>: <attribute>@<offset> ...`.
    /// The plan must place every attribute of each group (in schema order)
    /// at non-overlapping offsets within the 13 slots.
    pub fn parse(text: &str, schema: &Schema, rules: &RuleSet) -> Result<GroupingPlan, PipelineError> {
        let mut groups: Vec<Option<Vec<Placement>>> = vec![None; REDUCED_ROWS];
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split_once('#').map_or(raw, |(h, _)| h).trim();
            if content.is_empty() {
                continue;
            }
            let err = |message: String| PipelineError::PlanSyntax { line, message };
            let (head, tail) = content
                .split_once(':')
                .ok_or_else(|| err("expected `<group>: <attribute>@<offset> ...`".into()))?;
            let group: usize = head
                .trim()
                .parse()
                .ok()
                .filter(|g| *g < REDUCED_ROWS)
                .ok_or_else(|| err(format!("bad group index `{}`", head.trim())))?;
            if groups[group].is_some() {
                return Err(err(format!("group {group} listed twice")));
            }
            let spec = &schema.groups()[group];
            let mut row = Vec::new();
            for item in tail.split_whitespace() {
                let (name, off) = item
                    .split_once('@')
                    .ok_or_else(|| err(format!("expected `<attribute>@<offset>`, found `{item}`")))?;
                let attribute = schema
                    .index_of(name)
                    .ok_or_else(|| err(format!("unknown attribute `{name}`")))?;
                let offset: usize = off.parse().map_err(|_| err(format!("bad offset `{off}`")))?;
                row.push(Placement {
                    attribute,
                    offset,
                    width: rules.rules()[attribute].width(),
                });
            }
            let members: Vec<usize> = row.iter().map(|p| p.attribute).collect();
            if members != spec.members {
                return Err(err(format!("group {group} must list its members in schema order")));
            }
            let mut spans: Vec<(usize, usize)> = row.iter().map(|p| (p.offset, p.offset + p.width)).collect();
            spans.sort_unstable();
            if let Some(end) = spans.last().map(|s| s.1).filter(|&e| e > WIDTH) {
                return Err(PipelineError::PlanOverflow { group, needed: end });
            }
            if spans.windows(2).any(|w| w[0].1 > w[1].0) {
                return Err(err(format!("group {group} has overlapping offsets")));
            }
            groups[group] = Some(row);
        }
        let groups = groups
            .into_iter()
            .enumerate()
            .map(|(g, row)| {
                row.ok_or_else(|| PipelineError::PlanSyntax {
                    line: text.lines().count().max(1),
                    message: format!("group {g} missing"),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(GroupingPlan {
            groups,
            categories: schema.groups().iter().map(|g| g.category).collect(),
        })
    }
}

impl GroupingPlan {
    /// Plan text in the format [`GroupingPlan::parse`] reads.
    pub fn render(&self, schema: &Schema) -> String {
        let mut out = String::new();
        for (g, row) in self.groups.iter().enumerate() {
            let items: Vec<String> = row
                .iter()
                .map(|p| format!("{}@{}", schema.attributes()[p.attribute].name, p.offset))
                .collect();
            out.push_str(&format!("{g}: {}\n", items.join(" ")));
        }
        out
    }
}

pub fn build_raw_matrix(
    record: &PersonRecord,
    rules: &RuleSet,
    schema: &Schema,
) -> Result<SemanticMatrix, PipelineError> {
    if record.values.len() != schema.attributes().len() {
        return Err(PipelineError::Shape(format!(
            "record has {} values, schema {}",
            record.values.len(),
            schema.attributes().len()
        )));
    }
    let vectors = rules.evaluate(record)?;
    let mut m = SemanticMatrix::zeros(Form::Raw);
    for (r, v) in vectors.iter().enumerate() {
        m.data[r * WIDTH..(r + 1) * WIDTH].copy_from_slice(v.as_slice());
    }
    Ok(m)
}

/// Copies each attribute's emitted weights into its group row.
pub fn reduce(raw: &SemanticMatrix, plan: &GroupingPlan) -> Result<SemanticMatrix, PipelineError> {
    if raw.form != Form::Raw {
        return Err(PipelineError::Shape("reduce expects a raw matrix".into()));
    }
    let mut out = SemanticMatrix::zeros(Form::Reduced);
    for (row, placements) in plan.groups.iter().enumerate() {
        for p in placements {
            if p.offset + p.width > WIDTH {
                return Err(PipelineError::PlanOverflow {
                    group: row,
                    needed: p.offset + p.width,
                });
            }
            if let Some(stray) = (p.width..WIDTH).find(|&s| raw.get(p.attribute, s) != 0.0) {
                return Err(PipelineError::Shape(format!(
                    "attribute {} has a weight in slot {stray}, beyond its width {}",
                    p.attribute, p.width
                )));
            }
            for slot in 0..p.width {
                out.data[row * WIDTH + p.offset + slot] = raw.get(p.attribute, slot);
            }
        }
    }
    let mut provenance = Vec::new();
    for (row, placements) in plan.groups.iter().enumerate() {
        for p in placements {
            for slot in 0..p.width {
                let col = p.offset + slot;
                if out.get(row, col) != 0.0 {
                    provenance.push(CellSource {
                        row,
                        col,
                        attribute: p.attribute,
                        slot,
                    });
                }
            }
        }
    }
    provenance.sort_by_key(|c| (c.row, c.col));
    out.provenance = provenance;
    Ok(out)
}

/// Reconstructs the raw matrix from a reduced matrix's provenance.
pub fn unreduce(reduced: &SemanticMatrix) -> Result<SemanticMatrix, PipelineError> {
    if reduced.form != Form::Reduced {
        return Err(PipelineError::Shape("unreduce expects a reduced matrix".into()));
    }
    let mut raw = SemanticMatrix::zeros(Form::Raw);
    for c in &reduced.provenance {
        raw.data[c.attribute * WIDTH + c.slot] = reduced.get(c.row, c.col);
    }
    Ok(raw)
}

pub fn transform(
    record: &PersonRecord,
    rules: &RuleSet,
    schema: &Schema,
    plan: &GroupingPlan,
) -> Result<SemanticMatrix, PipelineError> {
    reduce(&build_raw_matrix(record, rules, schema)?, plan)
}

/// Transforms records in parallel, preserving order.
pub fn transform_batch(
    records: &[PersonRecord],
    rules: &RuleSet,
    schema: &Schema,
    plan: &GroupingPlan,
) -> Result<Vec<SemanticMatrix>, PipelineError> {
    records
        .par_iter()
        .map(|r| transform(r, rules, schema, plan))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (Schema, RuleSet, GroupingPlan) {
        let schema = Schema::default_schema();
        let rules = RuleSet::default_rules(&schema);
        let plan = GroupingPlan::new(&schema, &rules).unwrap();
        (schema, rules, plan)
    }

    #[test]
    fn unknown_record_gives_zero_matrices() {
        let (schema, rules, plan) = setup();
        let raw = build_raw_matrix(&PersonRecord::unknown(None), &rules, &schema).unwrap();
        assert_eq!((raw.rows(), raw.cols()), (31, 13));
        assert!(raw.as_slice().iter().all(|&x| x == 0.0));
        let red = reduce(&raw, &plan).unwrap();
        assert_eq!((red.rows(), red.cols()), (18, 13));
        assert!(red.as_slice().iter().all(|&x| x == 0.0));
        assert!(red.provenance().is_empty());
    }

    #[test]
    fn single_known_attribute() {
        let (schema, rules, _) = setup();
        let mut r = PersonRecord::unknown(None);
        r.set(&schema, "gender", "male");
        let raw = build_raw_matrix(&r, &rules, &schema).unwrap();
        let nonzero: Vec<(usize, usize)> = (0..31)
            .flat_map(|i| (0..13).map(move |j| (i, j)))
            .filter(|&(i, j)| raw.get(i, j) != 0.0)
            .collect();
        assert_eq!(nonzero, vec![(schema.index_of("gender").unwrap(), 0)]);
    }

    #[test]
    fn group_zero_concatenates_age_then_gender() {
        let (schema, rules, plan) = setup();
        let mut r = PersonRecord::unknown(None);
        r.set(&schema, "age", "55");
        r.set(&schema, "gender", "male");
        let red = transform(&r, &rules, &schema, &plan).unwrap();
        assert_eq!(red.row(0)[..3], [0.4, 0.65, 0.0]);
    }

    #[test]
    fn default_plan_offsets() {
        let (schema, _, plan) = setup();
        let g5: Vec<(usize, usize)> = plan.groups()[5].iter().map(|p| (p.offset, p.width)).collect();
        // smoking_status emits two slots
        assert_eq!(g5, vec![(0, 2), (2, 1)]);
        let text = plan.render(&schema);
        let rules = RuleSet::default_rules(&schema);
        assert_eq!(GroupingPlan::parse(&text, &schema, &rules).unwrap(), plan);
    }

    #[test]
    fn overflowing_group_is_rejected() {
        let schema = Schema::default_schema();
        let wide = vec!["0.1"; 13].join(", ");
        let text = crate::rules::DEFAULT_RULES.replace(
            r#""smoker" -> 0.9, 0.8"#,
            &format!(r#""smoker" -> {wide}"#),
        );
        let rules = crate::rules::parse_ruleset(&text, &schema).unwrap();
        assert!(matches!(
            GroupingPlan::new(&schema, &rules),
            Err(PipelineError::PlanOverflow { group: 5, needed: 14 })
        ));
    }

    #[test]
    fn plan_file_may_leave_gaps() {
        let (schema, rules, plan) = setup();
        let text = plan.render(&schema).replace("0: age@0 gender@1", "0: age@4 gender@0");
        let custom = GroupingPlan::parse(&text, &schema, &rules).unwrap();
        let mut r = PersonRecord::unknown(None);
        r.set(&schema, "age", "70");
        r.set(&schema, "gender", "female");
        let red = transform(&r, &rules, &schema, &custom).unwrap();
        assert_eq!(red.row(0)[..5], [0.35, 0.0, 0.0, 0.0, 0.7]);
        let bad = plan.render(&schema).replace("0: age@0 gender@1", "0: age@0 gender@0");
        assert!(GroupingPlan::parse(&bad, &schema, &rules).is_err());
    }

    #[test]
    fn dump_round_trip() {
        let (schema, rules, plan) = setup();
        let mut r = PersonRecord::unknown(None);
        r.set(&schema, "smoking_status", "smoker");
        let red = transform(&r, &rules, &schema, &plan).unwrap();
        let back = SemanticMatrix::parse_dump(&red.dump()).unwrap();
        assert_eq!(back.as_slice(), red.as_slice());
        assert_eq!(back.form(), Form::Reduced);
        assert!(red.dump().lines().next().unwrap().starts_with("0.000000 "));
    }
}
