//! Synthetic questionnaire records with a planted logistic risk model over
//! the 18 row-sum features.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::baselines::{featurize, FeatureVector18};
use crate::ingest::{AttributeKind, Label, PersonRecord, Schema};
use crate::rules::RuleSet;
use crate::semantic::{transform, GroupingPlan, PipelineError};
use crate::{Category, REDUCED_ROWS};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synth config: {0}")]
    Config(String),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n: usize,
    /// Target share of affected records; used only when `intercept` is unset.
    pub prevalence: f64,
    /// Standard deviation of the Gaussian noise added to each logit.
    pub noise: f64,
    pub seed: u64,
    pub coefficients: [f64; REDUCED_ROWS],
    /// Fixed intercept. `None` calibrates it so the expected prevalence of
    /// the generated set equals `prevalence`.
    pub intercept: Option<f64>,
}

impl SynthConfig {
    /// 601 records at 355/601 prevalence. Smoking history and blood in the
    /// sputum carry most of the signal, every other group a little, so the
    /// ground-truth probabilities separate the classes with an AUC near 0.99.
    pub fn reference_scale(seed: u64) -> SynthConfig {
        let coefficients = [
            // minor risk
            0.5, 0.5, 0.5, 0.5, 0.5,
            // major risk
            10.0, 8.0, 1.0, 2.0, 2.0, 1.0,
            // symptoms
            1.0, 8.0, 1.0, 1.0, 1.0, 1.0, 1.0,
        ];
        SynthConfig {
            n: 601,
            prevalence: 355.0 / 601.0,
            noise: 0.25,
            seed,
            coefficients,
            intercept: None,
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if self.n == 0 {
            return Err(SynthError::Config("record count must be positive".into()));
        }
        if !(self.prevalence > 0.0 && self.prevalence < 1.0) {
            return Err(SynthError::Config(format!("prevalence must be in (0, 1), got {}", self.prevalence)));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(SynthError::Config(format!("noise must be finite and non-negative, got {}", self.noise)));
        }
        if self.coefficients.iter().any(|c| !c.is_finite()) || self.intercept.is_some_and(|b| !b.is_finite()) {
            return Err(SynthError::Config("coefficients and intercept must be finite".into()));
        }
        if !Category::MajorRisk.band().any(|g| self.coefficients[g] > 0.0) {
            return Err(SynthError::Config(
                "at least one major-risk coefficient must be strictly positive".into(),
            ));
        }
        Ok(())
    }

    /// Parses `key: value` lines: n, prevalence, noise, seed, intercept
    /// (a number or `auto`) and `coefficients` (18 comma-separated numbers).
    /// Unset keys keep their reference-scale values.
    pub fn parse(text: &str) -> Result<SynthConfig, SynthError> {
        let mut cfg = SynthConfig::reference_scale(0);
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: &str| SynthError::Config(format!("line {}: {msg}", i + 1));
            let (key, value) = line.split_once(':').ok_or_else(|| err("expected `key: value`"))?;
            let (key, value) = (key.trim(), value.trim());
            let num = |v: &str| v.parse::<f64>().map_err(|_| err(&format!("bad number {v:?}")));
            match key {
                "n" => cfg.n = value.parse().map_err(|_| err("bad record count"))?,
                "seed" => cfg.seed = value.parse().map_err(|_| err("bad seed"))?,
                "prevalence" => cfg.prevalence = num(value)?,
                "noise" => cfg.noise = num(value)?,
                "intercept" => cfg.intercept = if value == "auto" { None } else { Some(num(value)?) },
                "coefficients" => {
                    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
                    if parts.len() != REDUCED_ROWS {
                        return Err(err(&format!("expected {REDUCED_ROWS} coefficients, found {}", parts.len())));
                    }
                    for (c, p) in cfg.coefficients.iter_mut().zip(parts) {
                        *c = num(p)?;
                    }
                }
                other => return Err(err(&format!("unknown key {other:?}"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// A generated set and the intercept used to label it.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSet {
    pub records: Vec<PersonRecord>,
    pub intercept: f64,
}

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn linear(coefficients: &[f64; REDUCED_ROWS], features: &FeatureVector18) -> f64 {
    coefficients.iter().zip(features.0.iter()).map(|(c, f)| c * f).sum()
}

/// Noise-free probability of the affected label.
pub fn ground_truth_prob(cfg: &SynthConfig, intercept: f64, features: &FeatureVector18) -> f64 {
    logistic(intercept + linear(&cfg.coefficients, features))
}

/// Draws one answer per attribute: uniform over the allowed values, or a
/// uniform integer within a numeric range.
fn draw_record<R: Rng>(schema: &Schema, rng: &mut R) -> PersonRecord {
    let values = schema
        .attributes()
        .iter()
        .map(|a| match &a.kind {
            AttributeKind::Categorical { values } => values[rng.random_range(0..values.len())].clone(),
            AttributeKind::Numeric { min, max } => {
                let (lo, hi) = (min.ceil() as i64, max.floor() as i64);
                rng.random_range(lo..=hi).to_string()
            }
        })
        .collect();
    PersonRecord::new(values, None)
}

/// Generates `cfg.n` labeled records from one seeded stream: all answers and
/// logit noise first, then the intercept (calibrated if unset), then one
/// uniform draw per label.
pub fn generate(cfg: &SynthConfig, schema: &Schema, rules: &RuleSet, plan: &GroupingPlan) -> Result<SynthSet, SynthError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let normal = Normal::new(0.0, cfg.noise).map_err(|e| SynthError::Config(e.to_string()))?;
    let mut records = Vec::with_capacity(cfg.n);
    let mut logits = Vec::with_capacity(cfg.n);
    for _ in 0..cfg.n {
        let record = draw_record(schema, &mut rng);
        let features = featurize(&transform(&record, rules, schema, plan)?)
            .map_err(|e| SynthError::Config(e.to_string()))?;
        logits.push(linear(&cfg.coefficients, &features) + normal.sample(&mut rng));
        records.push(record);
    }
    let intercept = match cfg.intercept {
        Some(b) => b,
        None => calibrate_intercept(&logits, cfg.prevalence),
    };
    for (record, z) in records.iter_mut().zip(&logits) {
        let p = logistic(intercept + z);
        record.label = Some(if rng.random::<f64>() < p { Label::Affected } else { Label::Unaffected });
    }
    Ok(SynthSet { records, intercept })
}

/// Bisection for `b` with `mean(logistic(b + z_i)) = target`.
fn calibrate_intercept(logits: &[f64], target: f64) -> f64 {
    let mean = |b: f64| logits.iter().map(|z| logistic(b + z)).sum::<f64>() / logits.len() as f64;
    let (mut lo, mut hi) = (-1e3, 1e3);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
