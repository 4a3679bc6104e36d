//! End-to-end benchmark: synthesize, split 490/111, transform, train the CNN
//! and the four baselines, and evaluate everything on the held-out split.

use std::fmt::Write;

use thiserror::Error;

use crate::baselines::{featurize, fit_and_score, Algo, BaselineError, FeatureVector18};
use crate::ingest::{Label, Schema};
use crate::metrics::{evaluate, split_indices, EvalReport, MetricsError};
use crate::nn::{train, CnnModel, NnError, TrainConfig, TrainHistory};
use crate::rules::RuleSet;
use crate::semantic::{transform_batch, GroupingPlan, PipelineError, SemanticMatrix};
use crate::synth::{generate, ground_truth_prob, SynthConfig, SynthError};

/// Figures reported for the original hospital cohort. They cannot be
/// reproduced without that data and appear in the report header only.
pub const REFERENCE_FIGURES: [(&str, &str); 9] = [
    ("reference.cnn_validation_accuracy", "0.9459"),
    ("reference.cnn_train_accuracy", "0.9388"),
    ("reference.cnn_validation_loss", "0.1699"),
    ("reference.cnn_train_loss", "0.1773"),
    ("reference.cnn_auc", "0.99"),
    ("reference.knn_accuracy", "0.8648"),
    ("reference.tree_accuracy", "0.9369"),
    ("reference.forest_accuracy", "0.9189"),
    ("reference.ann_accuracy", "0.8559"),
];

pub const TRAIN_RECORDS: usize = 490;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkConfig {
    pub synth: SynthConfig,
    pub train: TrainConfig,
    /// Fraction of records used for training; 490/601 by default.
    pub train_frac: f64,
    pub baselines: bool,
}

impl BenchmarkConfig {
    /// The reference-scale benchmark with every random choice derived from `seed`.
    pub fn reference_scale(seed: u64) -> BenchmarkConfig {
        let synth = SynthConfig::reference_scale(seed);
        let train_frac = TRAIN_RECORDS as f64 / synth.n as f64;
        BenchmarkConfig {
            synth,
            train: TrainConfig { seed, ..TrainConfig::default() },
            train_frac,
            baselines: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchmarkReport {
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub intercept: f64,
    /// AUC of the noise-free generating probabilities on the test split.
    pub bayes_auc: f64,
    pub cnn: EvalReport,
    pub cnn_train: EvalReport,
    pub history: TrainHistory,
    pub model: CnnModel,
    pub baselines: Vec<(&'static str, EvalReport)>,
}

impl BenchmarkReport {
    /// `key=value` lines: reference figures, run facts, then one block per
    /// classifier.
    pub fn render(&self) -> String {
        let mut out = String::new();
        writeln!(out, "reference.reproducible=false").unwrap();
        for (k, v) in REFERENCE_FIGURES {
            writeln!(out, "{k}={v}").unwrap();
        }
        writeln!(out, "seed={}", self.seed).unwrap();
        writeln!(out, "n_train={}", self.n_train).unwrap();
        writeln!(out, "n_test={}", self.n_test).unwrap();
        writeln!(out, "synth.intercept={:.6}", self.intercept).unwrap();
        writeln!(out, "synth.bayes_auc={:.6}", self.bayes_auc).unwrap();
        if let Some(last) = self.history.last() {
            writeln!(out, "cnn.final_train_loss={:.6}", last.train_loss).unwrap();
        }
        out.push_str(&self.cnn_train.render("cnn.train."));
        out.push_str(&self.cnn.render("cnn.test."));
        for (name, report) in &self.baselines {
            out.push_str(&report.render(&format!("{name}.test.")));
        }
        out
    }
}

/// Runs the whole benchmark. Deterministic for a given configuration.
pub fn run_benchmark(
    cfg: &BenchmarkConfig,
    schema: &Schema,
    rules: &RuleSet,
    plan: &GroupingPlan,
) -> Result<BenchmarkReport, RunError> {
    let set = generate(&cfg.synth, schema, rules, plan)?;
    let labels: Vec<Label> = set.records.iter().map(|r| r.label.expect("generated records are labeled")).collect();
    let matrices = transform_batch(&set.records, rules, schema, plan)?;
    let features: Vec<FeatureVector18> = matrices.iter().map(featurize).collect::<Result<_, _>>()?;
    let (train_idx, test_idx) = split_indices(set.records.len(), None, cfg.synth.seed, cfg.train_frac)?;

    let pick = |idx: &[usize]| -> Vec<(SemanticMatrix, Label)> { idx.iter().map(|&i| (matrices[i].clone(), labels[i])).collect() };
    let train_set = pick(&train_idx);
    let test_set = pick(&test_idx);
    let test_labels: Vec<Label> = test_idx.iter().map(|&i| labels[i]).collect();
    let train_labels: Vec<Label> = train_idx.iter().map(|&i| labels[i]).collect();

    let truth: Vec<f64> = test_idx
        .iter()
        .map(|&i| ground_truth_prob(&cfg.synth, set.intercept, &features[i]))
        .collect();
    let bayes_auc = evaluate(&truth, &test_labels)?.auc;

    let (model, history) = train(&cfg.train, &train_set, &test_set)?;
    let score = |set: &[(SemanticMatrix, Label)]| -> Result<Vec<f64>, NnError> {
        set.iter().map(|(m, _)| model.predict(m).map(|p| p.p_affected)).collect()
    };
    let cnn = evaluate(&score(&test_set)?, &test_labels)?;
    let cnn_train = evaluate(&score(&train_set)?, &train_labels)?;

    let mut baselines = Vec::new();
    if cfg.baselines {
        let train_f: Vec<(FeatureVector18, Label)> = train_idx.iter().map(|&i| (features[i], labels[i])).collect();
        let test_f: Vec<FeatureVector18> = test_idx.iter().map(|&i| features[i]).collect();
        for algo in Algo::defaults(cfg.synth.seed) {
            let scores = fit_and_score(&algo, &train_f, &test_f)?;
            baselines.push((algo.name(), evaluate(&scores, &test_labels)?));
        }
    }

    Ok(BenchmarkReport {
        seed: cfg.synth.seed,
        n_train: train_idx.len(),
        n_test: test_idx.len(),
        intercept: set.intercept,
        bayes_auc,
        cnn,
        cnn_train,
        history,
        model,
        baselines,
    })
}
