//! Questionnaire schema, record files and the three cleaning passes.

mod cleaning;
mod records;
mod schema;

pub use cleaning::{
    clean_record, CasePolicy, CleaningConfig, CleaningConfigError, CleaningError,
    WhitespacePolicy, DEFAULT_CLEANING,
};
pub use records::{
    parse_records, parse_records_str, records_to_string, write_records, Label, ParseIssue,
    PersonRecord, RecordError, LABEL_COLUMN,
};
pub use schema::{
    load_schema, AttributeKind, AttributeSpec, GroupSpec, Schema, SchemaError, DEFAULT_SCHEMA,
};
