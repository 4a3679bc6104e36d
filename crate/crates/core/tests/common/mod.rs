#![allow(dead_code)]

use std::path::PathBuf;

use deeplcp_core::ingest::AttributeKind;
use deeplcp_core::{GroupingPlan, Label, PersonRecord, RuleSet, Schema, SemanticMatrix, UNKNOWN, WIDTH};
use rand::Rng;

pub fn setup() -> (Schema, RuleSet, GroupingPlan) {
    let schema = Schema::default_schema();
    let rules = RuleSet::default_rules(&schema);
    let plan = GroupingPlan::new(&schema, &rules).unwrap();
    (schema, rules, plan)
}

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// A schema-valid record; roughly one answer in five is `unknown`.
pub fn random_record<R: Rng>(schema: &Schema, rng: &mut R) -> PersonRecord {
    let values = schema
        .attributes()
        .iter()
        .map(|a| {
            if rng.random_bool(0.2) {
                return UNKNOWN.to_string();
            }
            match &a.kind {
                AttributeKind::Categorical { values } => values[rng.random_range(0..values.len())].clone(),
                AttributeKind::Numeric { min, max } => {
                    let x = rng.random_range(*min..=*max);
                    format!("{}", (x * 4.0).round() / 4.0)
                }
            }
        })
        .collect();
    let label = if rng.random_bool(0.5) { Label::Affected } else { Label::Unaffected };
    PersonRecord::new(values, Some(label))
}

pub fn random_reduced<R: Rng>(rng: &mut R) -> SemanticMatrix {
    let mut rows = [[0.0; WIDTH]; 18];
    for row in rows.iter_mut() {
        for x in row.iter_mut() {
            *x = rng.random_range(0.0..1.0);
        }
    }
    SemanticMatrix::reduced_from_rows(&rows).unwrap()
}
