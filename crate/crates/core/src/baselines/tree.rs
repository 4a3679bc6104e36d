use std::cmp::Ordering;

use super::{check_dims, BaselineError};
use crate::ingest::Label;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: 6,
            min_leaf: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Leaf {
        affected: usize,
        unaffected: usize,
    },
    /// Samples with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    /// Leaf label (ties to affected) and the leaf's affected fraction.
    pub fn predict(&self, x: &[f64]) -> (Label, f64) {
        match self {
            TreeNode::Leaf { affected, unaffected } => {
                let p = *affected as f64 / (affected + unaffected) as f64;
                let label = if affected >= unaffected { Label::Affected } else { Label::Unaffected };
                (label, p)
            }
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                if x[*feature] <= *threshold {
                    left.predict(x)
                } else {
                    right.predict(x)
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn leaves(&self) -> Vec<(usize, usize)> {
        match self {
            TreeNode::Leaf { affected, unaffected } => vec![(*affected, *unaffected)],
            TreeNode::Split { left, right, .. } => {
                let mut v = left.leaves();
                v.extend(right.leaves());
                v
            }
        }
    }
}

/// Purity score `Σ_children (a² + u²) / n_child` as an exact fraction.
/// Weighted Gini impurity is `1 - score / n`, so a larger score means a
/// purer split.
#[derive(Debug, Clone, Copy)]
struct Purity {
    num: u128,
    den: u128,
}

impl Purity {
    fn of(a: usize, u: usize) -> Purity {
        Purity {
            num: (a * a + u * u) as u128,
            den: (a + u) as u128,
        }
    }

    fn add(self, other: Purity) -> Purity {
        Purity {
            num: self.num * other.den + other.num * self.den,
            den: self.den * other.den,
        }
    }

    fn cmp(&self, other: &Purity) -> Ordering {
        (self.num * other.den).cmp(&(other.num * self.den))
    }
}

/// Chooses the features examined at each split.
pub(crate) trait FeatureSampler {
    fn features(&mut self, dim: usize) -> Vec<usize>;
}

struct AllFeatures;

impl FeatureSampler for AllFeatures {
    fn features(&mut self, dim: usize) -> Vec<usize> {
        (0..dim).collect()
    }
}

/// Greedy CART on Gini impurity. Thresholds are midpoints between adjacent
/// distinct values; equal-impurity candidates resolve to the lowest
/// (feature, threshold).
pub fn tree_fit<F: AsRef<[f64]>>(data: &[(F, Label)], params: &TreeParams) -> Result<TreeNode, BaselineError> {
    let idx: Vec<usize> = (0..data.len()).collect();
    fit_indices(data, &idx, params, &mut AllFeatures)
}

pub(crate) fn fit_indices<F: AsRef<[f64]>>(
    data: &[(F, Label)],
    idx: &[usize],
    params: &TreeParams,
    sampler: &mut dyn FeatureSampler,
) -> Result<TreeNode, BaselineError> {
    let dim = check_dims(data)?;
    if idx.is_empty() {
        return Err(BaselineError::EmptyData);
    }
    if params.min_leaf == 0 {
        return Err(BaselineError::Config("min_leaf must be at least 1".into()));
    }
    Ok(grow(data, idx.to_vec(), 0, dim, params, sampler))
}

fn counts<F>(data: &[(F, Label)], idx: &[usize]) -> (usize, usize) {
    let a = idx.iter().filter(|&&i| data[i].1.is_affected()).count();
    (a, idx.len() - a)
}

fn grow<F: AsRef<[f64]>>(
    data: &[(F, Label)],
    idx: Vec<usize>,
    depth: usize,
    dim: usize,
    params: &TreeParams,
    sampler: &mut dyn FeatureSampler,
) -> TreeNode {
    let (a, u) = counts(data, &idx);
    let leaf = TreeNode::Leaf {
        affected: a,
        unaffected: u,
    };
    if depth >= params.max_depth || a == 0 || u == 0 || idx.len() < 2 * params.min_leaf {
        return leaf;
    }
    let parent = Purity::of(a, u);
    let mut best: Option<(Purity, usize, f64)> = None;
    for feature in sampler.features(dim) {
        let mut order = idx.clone();
        order.sort_by(|&i, &j| data[i].0.as_ref()[feature].total_cmp(&data[j].0.as_ref()[feature]));
        let (mut la, mut lu) = (0usize, 0usize);
        for k in 0..order.len() - 1 {
            if data[order[k]].1.is_affected() {
                la += 1;
            } else {
                lu += 1;
            }
            let here = data[order[k]].0.as_ref()[feature];
            let next = data[order[k + 1]].0.as_ref()[feature];
            let n_left = k + 1;
            if here == next || n_left < params.min_leaf || order.len() - n_left < params.min_leaf {
                continue;
            }
            let score = Purity::of(la, lu).add(Purity::of(a - la, u - lu));
            if best.as_ref().is_none_or(|b| score.cmp(&b.0) == Ordering::Greater) {
                best = Some((score, feature, here + (next - here) / 2.0));
            }
        }
    }
    match best {
        Some((score, feature, threshold)) if score.cmp(&parent) == Ordering::Greater => {
            let (left, right): (Vec<usize>, Vec<usize>) =
                idx.iter().partition(|&&i| data[i].0.as_ref()[feature] <= threshold);
            TreeNode::Split {
                feature,
                threshold,
                left: Box::new(grow(data, left, depth + 1, dim, params, sampler)),
                right: Box::new(grow(data, right, depth + 1, dim, params, sampler)),
            }
        }
        _ => leaf,
    }
}
