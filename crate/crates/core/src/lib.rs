//! DeepLCP: lung cancer risk prediction from questionnaire records.
//!
//! The pipeline runs in two stages. Preprocessing cleans each questionnaire
//! record, evaluates one transformation rule per attribute to obtain a raw
//! 31×13 semantic matrix, and losslessly reduces it to an 18×13 matrix whose
//! rows are organized into three category bands (minor risk factors, major
//! risk factors, symptoms). Deep processing classifies the reduced matrix with
//! a small text-style CNN: full-width filters of heights 5, 6 and 7, max-over-time
//! pooling and a dense softmax head.
//!
//! Four classical baselines (KNN, CART, random forest, a dropout ANN), an
//! evaluation suite (accuracy, confusion counts, ROC, AUC) and a synthetic data
//! generator with a planted logistic signal complete the comparison workflow.

pub mod baselines;
pub mod ingest;
pub mod metrics;
pub mod nn;
pub mod pipeline;
pub mod rules;
pub mod semantic;
pub mod synth;

pub use ingest::{
    clean_record, load_schema, parse_records, CleaningConfig, Label, PersonRecord, Schema,
};
pub use metrics::{EvalReport, LabeledSet};
pub use nn::{CnnModel, Prediction, TrainConfig, TrainHistory};
pub use rules::{parse_ruleset, RuleSet, WeightVector};
pub use semantic::{GroupingPlan, SemanticMatrix};

/// Number of questionnaire attributes (rows of the raw matrix).
pub const RAW_ROWS: usize = 31;
/// Number of attribute groups (rows of the reduced matrix).
pub const REDUCED_ROWS: usize = 18;
/// Word slots per row.
pub const WIDTH: usize = 13;
/// Reserved value for missing or irrelevant answers.
pub const UNKNOWN: &str = "unknown";

/// Risk category of an attribute, and of the reduced-matrix band holding it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Category {
    MinorRisk,
    MajorRisk,
    Symptom,
}

impl Category {
    pub const ALL: [Category; 3] = [Category::MinorRisk, Category::MajorRisk, Category::Symptom];

    /// Reduced-matrix rows belonging to this band.
    pub fn band(self) -> std::ops::Range<usize> {
        match self {
            Category::MinorRisk => 0..5,
            Category::MajorRisk => 5..11,
            Category::Symptom => 11..18,
        }
    }

    pub fn of_group(group: usize) -> Option<Category> {
        Category::ALL.into_iter().find(|c| c.band().contains(&group))
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Category::MinorRisk => "minor_risk",
            Category::MajorRisk => "major_risk",
            Category::Symptom => "symptom",
        }
    }

    pub fn parse(s: &str) -> Option<Category> {
        Category::ALL.into_iter().find(|c| c.as_str() == s)
    }
}

impl std::fmt::Display for Category {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Questionnaire theme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Theme {
    ThoracicSigns,
    Cough,
    Feeding,
    Consumer,
    PersonalHistory,
    Residence,
}

impl Theme {
    pub const ALL: [Theme; 6] = [
        Theme::ThoracicSigns,
        Theme::Cough,
        Theme::Feeding,
        Theme::Consumer,
        Theme::PersonalHistory,
        Theme::Residence,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Theme::ThoracicSigns => "thoracic_signs",
            Theme::Cough => "cough",
            Theme::Feeding => "feeding",
            Theme::Consumer => "consumer",
            Theme::PersonalHistory => "personal_history",
            Theme::Residence => "residence",
        }
    }

    pub fn parse(s: &str) -> Option<Theme> {
        Theme::ALL.into_iter().find(|t| t.as_str() == s)
    }
}

impl std::fmt::Display for Theme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}
