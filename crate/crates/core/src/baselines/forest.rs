use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::tree::{fit_indices, FeatureSampler};
use super::{check_dims, BaselineError, TreeNode, TreeParams};
use crate::ingest::Label;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Fraction of features examined at each split, rounded up.
    pub feature_frac: f64,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 101,
            max_depth: 8,
            min_leaf: 1,
            feature_frac: 0.25,
            bootstrap: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    pub trees: Vec<TreeNode>,
}

impl Forest {
    /// Majority vote of the trees (ties to unaffected) and the fraction of
    /// trees voting affected.
    pub fn predict(&self, x: &[f64]) -> (Label, f64) {
        let votes = self.trees.iter().filter(|t| t.predict(x).0.is_affected()).count();
        let label = if 2 * votes > self.trees.len() { Label::Affected } else { Label::Unaffected };
        (label, votes as f64 / self.trees.len() as f64)
    }
}

struct RandomSubset<'a> {
    rng: &'a mut ChaCha8Rng,
    frac: f64,
}

impl FeatureSampler for RandomSubset<'_> {
    fn features(&mut self, dim: usize) -> Vec<usize> {
        let m = ((self.frac * dim as f64).ceil() as usize).clamp(1, dim);
        let mut f = sample(self.rng, dim, m).into_vec();
        f.sort_unstable();
        f
    }
}

/// Random forest of CART trees. Tree `t` draws its bootstrap sample and its
/// per-split feature subsets from a generator seeded with `seed + t`, so the
/// result does not depend on thread scheduling.
pub fn forest_fit<F: AsRef<[f64]> + Sync>(data: &[(F, Label)], params: &ForestParams) -> Result<Forest, BaselineError> {
    check_dims(data)?;
    if params.n_trees == 0 {
        return Err(BaselineError::Config("n_trees must be positive".into()));
    }
    if !(params.feature_frac > 0.0 && params.feature_frac <= 1.0) {
        return Err(BaselineError::Config(format!(
            "feature_frac must be in (0, 1], got {}",
            params.feature_frac
        )));
    }
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_leaf: params.min_leaf,
    };
    let n = data.len();
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed.wrapping_add(t as u64));
            let idx: Vec<usize> = if params.bootstrap {
                let mut idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                idx.sort_unstable();
                idx
            } else {
                (0..n).collect()
            };
            let mut sampler = RandomSubset {
                rng: &mut rng,
                frac: params.feature_frac,
            };
            fit_indices(data, &idx, &tree_params, &mut sampler)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Forest { trees })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::tree_fit;
    use Label::{Affected as A, Unaffected as U};

    fn noisy_data() -> Vec<(Vec<f64>, Label)> {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        (0..120)
            .map(|_| {
                let x: Vec<f64> = (0..4).map(|_| rng.random_range(0.0..1.0)).collect();
                let label = if x[0] + 0.5 * x[2] + rng.random_range(-0.2..0.2) > 0.75 { A } else { U };
                (x, label)
            })
            .collect()
    }

    #[test]
    fn degenerate_forest_is_a_tree() {
        let data = noisy_data();
        let p = ForestParams {
            n_trees: 1,
            max_depth: 5,
            min_leaf: 2,
            feature_frac: 1.0,
            bootstrap: false,
            seed: 3,
        };
        let forest = forest_fit(&data, &p).unwrap();
        let tree = tree_fit(&data, &TreeParams { max_depth: 5, min_leaf: 2 }).unwrap();
        assert_eq!(forest.trees[0], tree);
    }

    #[test]
    fn deterministic_per_seed() {
        let data = noisy_data();
        let p = ForestParams { n_trees: 15, seed: 9, ..ForestParams::default() };
        assert_eq!(forest_fit(&data, &p).unwrap(), forest_fit(&data, &p).unwrap());
        let q = ForestParams { seed: 10, ..p };
        assert_ne!(forest_fit(&data, &p).unwrap(), forest_fit(&data, &q).unwrap());
    }

    #[test]
    fn vote_fraction_and_ties() {
        let leaf = |a, u| TreeNode::Leaf { affected: a, unaffected: u };
        let f = Forest { trees: vec![leaf(1, 0), leaf(0, 1)] };
        assert_eq!(f.predict(&[0.0]), (U, 0.5));
        let f = Forest { trees: vec![leaf(1, 0), leaf(0, 1), leaf(2, 1)] };
        let (l, s) = f.predict(&[0.0]);
        assert_eq!(l, A);
        assert!((s - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_params() {
        let data = noisy_data();
        for p in [
            ForestParams { n_trees: 0, ..ForestParams::default() },
            ForestParams { feature_frac: 0.0, ..ForestParams::default() },
            ForestParams { feature_frac: 1.5, ..ForestParams::default() },
        ] {
            assert!(matches!(forest_fit(&data, &p), Err(BaselineError::Config(_))));
        }
    }
}
