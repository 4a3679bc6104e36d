//! Classical comparison classifiers over an 18-dimensional feature vector:
//! the row sums of the reduced semantic matrix.

mod ann;
mod forest;
mod knn;
mod tree;

use thiserror::Error;

pub use ann::{ann_fit, AnnCache, AnnConfig, AnnModel, AnnParams, HIDDEN_UNITS};
pub use forest::{forest_fit, Forest, ForestParams};
pub use knn::{KnnIndex, KnnVote};
pub use tree::{tree_fit, TreeNode, TreeParams};

use crate::ingest::Label;
use crate::semantic::{Form, SemanticMatrix};
use crate::REDUCED_ROWS;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BaselineError {
    #[error("index is empty")]
    EmptyIndex,
    #[error("k = {k} exceeds the {n} stored points")]
    KTooLarge { k: usize, n: usize },
    #[error("k must be odd and at least 1, got {0}")]
    InvalidK(usize),
    #[error("training data is empty")]
    EmptyData,
    #[error("feature vectors must all have dimension {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("shape error: {0}")]
    Shape(String),
}

/// One entry per reduced-matrix row: the sum of that row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector18(pub [f64; REDUCED_ROWS]);

impl AsRef<[f64]> for FeatureVector18 {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

pub fn featurize(reduced: &SemanticMatrix) -> Result<FeatureVector18, BaselineError> {
    if reduced.form() != Form::Reduced {
        return Err(BaselineError::Shape("featurize expects a reduced matrix".into()));
    }
    let mut f = [0.0; REDUCED_ROWS];
    for (r, x) in f.iter_mut().enumerate() {
        *x = reduced.row(r).iter().sum();
    }
    Ok(FeatureVector18(f))
}

pub(crate) fn check_dims<F: AsRef<[f64]>>(data: &[(F, Label)]) -> Result<usize, BaselineError> {
    let dim = data.first().ok_or(BaselineError::EmptyData)?.0.as_ref().len();
    if let Some((f, _)) = data.iter().find(|(f, _)| f.as_ref().len() != dim) {
        return Err(BaselineError::Dimension {
            expected: dim,
            found: f.as_ref().len(),
        });
    }
    Ok(dim)
}

/// A baseline algorithm with its hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Algo {
    Knn { k: usize },
    Tree(TreeParams),
    Forest(ForestParams),
    Ann(AnnConfig),
}

impl Algo {
    pub fn name(&self) -> &'static str {
        match self {
            Algo::Knn { .. } => "knn",
            Algo::Tree(_) => "tree",
            Algo::Forest(_) => "forest",
            Algo::Ann(_) => "ann",
        }
    }

    /// Default settings: k = 5, unpruned-ish tree, 101-tree forest, the
    /// 18-10-2 ANN with dropout 0.75 for 200 epochs.
    pub fn defaults(seed: u64) -> Vec<Algo> {
        vec![
            Algo::Knn { k: 5 },
            Algo::Tree(TreeParams::default()),
            Algo::Forest(ForestParams { seed, ..ForestParams::default() }),
            Algo::Ann(AnnConfig { seed, ..AnnConfig::default() }),
        ]
    }
}

/// Fits on `train` and returns a `p_affected` score for every test vector.
pub fn fit_and_score<F: AsRef<[f64]> + Sync>(
    algo: &Algo,
    train: &[(F, Label)],
    test: &[F],
) -> Result<Vec<f64>, BaselineError> {
    match algo {
        Algo::Knn { k } => {
            let index = KnnIndex::new(train)?;
            test.iter()
                .map(|q| index.predict(q.as_ref(), *k).map(|v| v.score))
                .collect()
        }
        Algo::Tree(p) => {
            let tree = tree_fit(train, p)?;
            Ok(test.iter().map(|q| tree.predict(q.as_ref()).1).collect())
        }
        Algo::Forest(p) => {
            let forest = forest_fit(train, p)?;
            Ok(test.iter().map(|q| forest.predict(q.as_ref()).1).collect())
        }
        Algo::Ann(c) => {
            let model = ann_fit(train, c)?;
            Ok(test.iter().map(|q| model.predict(q.as_ref()).p_affected).collect())
        }
    }
}
