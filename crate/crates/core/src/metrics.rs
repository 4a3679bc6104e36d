//! Dataset splitting and evaluation: accuracy, loss, confusion counts, ROC
//! and AUC.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::ingest::Label;
use crate::nn::PROB_FLOOR;

/// Items paired with their labels.
pub type LabeledSet<T> = Vec<(T, Label)>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("need at least 2 records to split, found {0}")]
    TooFewRecords(usize),
    #[error("train fraction must lie strictly between 0 and 1, got {0}")]
    BadFraction(f64),
    #[error("{scores} scores but {labels} labels")]
    LengthMismatch { scores: usize, labels: usize },
    #[error("cannot evaluate an empty set")]
    Empty,
    #[error("AUC is undefined when only one class is present")]
    SingleClassAuc,
    #[error("score {0} is not a number")]
    InvalidScore(f64),
}

/// Seeded train/test split of `n` items. With `labels`, each class is split
/// separately so label proportions are kept within one example. Returned
/// index lists are sorted.
pub fn split_indices(
    n: usize,
    labels: Option<&[Label]>,
    seed: u64,
    train_frac: f64,
) -> Result<(Vec<usize>, Vec<usize>), MetricsError> {
    if n < 2 {
        return Err(MetricsError::TooFewRecords(n));
    }
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(MetricsError::BadFraction(train_frac));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let take = |count: usize| ((train_frac * count as f64).round() as usize).min(count);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    match labels {
        None => {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(&mut rng);
            let k = take(n).clamp(1, n - 1);
            train.extend_from_slice(&idx[..k]);
            test.extend_from_slice(&idx[k..]);
        }
        Some(labels) => {
            assert_eq!(labels.len(), n, "one label per item");
            for class in [Label::Affected, Label::Unaffected] {
                let mut idx: Vec<usize> = (0..n).filter(|&i| labels[i] == class).collect();
                idx.shuffle(&mut rng);
                let k = take(idx.len());
                train.extend_from_slice(&idx[..k]);
                test.extend_from_slice(&idx[k..]);
            }
        }
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

pub fn split<T: Clone>(items: &[T], seed: u64, train_frac: f64) -> Result<(Vec<T>, Vec<T>), MetricsError> {
    let (a, b) = split_indices(items.len(), None, seed, train_frac)?;
    Ok((pick(items, &a), pick(items, &b)))
}

pub fn split_stratified<T: Clone>(
    items: &LabeledSet<T>,
    seed: u64,
    train_frac: f64,
) -> Result<(LabeledSet<T>, LabeledSet<T>), MetricsError> {
    let labels: Vec<Label> = items.iter().map(|(_, l)| *l).collect();
    let (a, b) = split_indices(items.len(), Some(&labels), seed, train_frac)?;
    Ok((pick(items, &a), pick(items, &b)))
}

fn pick<T: Clone>(items: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|&i| items[i].clone()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Evaluation of `p_affected` scores against labels.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub accuracy: f64,
    pub mean_loss: f64,
    pub confusion: Confusion,
    /// `(fpr, tpr)` from `(0, 0)` to `(1, 1)`.
    pub roc: Vec<(f64, f64)>,
    pub auc: f64,
}

impl EvalReport {
    pub fn error_rate(&self) -> f64 {
        let c = &self.confusion;
        (c.fp + c.fn_) as f64 / c.total() as f64
    }

    /// `key=value` lines, each key prefixed with `prefix`.
    pub fn render(&self, prefix: &str) -> String {
        let c = &self.confusion;
        let mut out = String::new();
        for (k, v) in [
            ("n", c.total().to_string()),
            ("accuracy", format!("{:.6}", self.accuracy)),
            ("error_rate", format!("{:.6}", self.error_rate())),
            ("loss", format!("{:.6}", self.mean_loss)),
            ("auc", format!("{:.6}", self.auc)),
            ("tp", c.tp.to_string()),
            ("fp", c.fp.to_string()),
            ("tn", c.tn.to_string()),
            ("fn", c.fn_.to_string()),
        ] {
            writeln!(out, "{prefix}{k}={v}").unwrap();
        }
        out
    }

    /// ROC points as two whitespace-separated columns.
    pub fn roc_text(&self) -> String {
        self.roc.iter().map(|(f, t)| format!("{f:.6} {t:.6}\n")).collect()
    }
}

fn check(scores: &[f64], labels: &[Label]) -> Result<(), MetricsError> {
    if scores.len() != labels.len() {
        return Err(MetricsError::LengthMismatch {
            scores: scores.len(),
            labels: labels.len(),
        });
    }
    if scores.is_empty() {
        return Err(MetricsError::Empty);
    }
    if let Some(&s) = scores.iter().find(|s| s.is_nan()) {
        return Err(MetricsError::InvalidScore(s));
    }
    Ok(())
}

/// Accuracy at threshold 0.5 (ties count as affected), cross-entropy loss,
/// confusion counts, ROC and trapezoidal AUC.
pub fn evaluate(scores: &[f64], labels: &[Label]) -> Result<EvalReport, MetricsError> {
    check(scores, labels)?;
    let mut c = Confusion::default();
    let mut loss = 0.0;
    for (&s, &l) in scores.iter().zip(labels) {
        let predicted = s >= 0.5;
        match (predicted, l.is_affected()) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
        let p_true = if l.is_affected() { s } else { 1.0 - s };
        loss -= p_true.max(PROB_FLOOR).ln();
    }
    let n = scores.len() as f64;
    let roc = roc_curve(scores, labels)?;
    let auc = auc_trapezoid(scores, labels)?;
    Ok(EvalReport {
        accuracy: (c.tp + c.tn) as f64 / n,
        mean_loss: loss / n,
        confusion: c,
        roc,
        auc,
    })
}

/// Cumulative (false, true) positive counts after each distinct threshold,
/// highest score first, starting from (0, 0).
fn roc_counts(scores: &[f64], labels: &[Label]) -> (Vec<(usize, usize)>, usize, usize) {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let pos = labels.iter().filter(|l| l.is_affected()).count();
    let neg = labels.len() - pos;
    let mut points = vec![(0, 0)];
    let (mut fp, mut tp) = (0, 0);
    let mut i = 0;
    while i < idx.len() {
        let s = scores[idx[i]];
        while i < idx.len() && scores[idx[i]] == s {
            if labels[idx[i]].is_affected() {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp, tp));
    }
    (points, pos, neg)
}

pub fn roc_curve(scores: &[f64], labels: &[Label]) -> Result<Vec<(f64, f64)>, MetricsError> {
    check(scores, labels)?;
    let (points, pos, neg) = roc_counts(scores, labels);
    if pos == 0 || neg == 0 {
        return Err(MetricsError::SingleClassAuc);
    }
    Ok(points
        .into_iter()
        .map(|(fp, tp)| (fp as f64 / neg as f64, tp as f64 / pos as f64))
        .collect())
}

/// Area under the ROC curve by the trapezoidal rule, accumulated in integer
/// counts and normalized once.
pub fn auc_trapezoid(scores: &[f64], labels: &[Label]) -> Result<f64, MetricsError> {
    check(scores, labels)?;
    let (points, pos, neg) = roc_counts(scores, labels);
    if pos == 0 || neg == 0 {
        return Err(MetricsError::SingleClassAuc);
    }
    // twice the area in units of (1/neg)(1/pos)
    let twice: u128 = points
        .windows(2)
        .map(|w| ((w[1].0 - w[0].0) * (w[0].1 + w[1].1)) as u128)
        .sum();
    Ok(twice as f64 / (2.0 * pos as f64 * neg as f64))
}

/// Direct O(n²) Mann-Whitney statistic: the fraction of (affected,
/// unaffected) pairs where the affected example scores higher, ties ½.
pub fn auc_pairwise(scores: &[f64], labels: &[Label]) -> Result<f64, MetricsError> {
    check(scores, labels)?;
    let pos: Vec<f64> = scores.iter().zip(labels).filter(|(_, l)| l.is_affected()).map(|(s, _)| *s).collect();
    let neg: Vec<f64> = scores.iter().zip(labels).filter(|(_, l)| !l.is_affected()).map(|(s, _)| *s).collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(MetricsError::SingleClassAuc);
    }
    let mut twice_wins = 0u64;
    for p in &pos {
        for q in &neg {
            twice_wins += match p.partial_cmp(q) {
                Some(std::cmp::Ordering::Greater) => 2,
                Some(std::cmp::Ordering::Equal) => 1,
                _ => 0,
            };
        }
    }
    Ok(twice_wins as f64 / (2.0 * pos.len() as f64 * neg.len() as f64))
}
