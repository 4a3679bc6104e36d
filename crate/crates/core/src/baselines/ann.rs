use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_dims, BaselineError};
use crate::ingest::Label;
use crate::nn::{relu, softmax, softmax_cross_entropy_grad, Dense, Optimizer, OptimizerKind, Parameters, Prediction};

pub const HIDDEN_UNITS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnConfig {
    pub epochs: usize,
    /// Probability of dropping a hidden unit during training.
    pub dropout: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub optimizer: OptimizerKind,
    pub seed: u64,
}

impl Default for AnnConfig {
    fn default() -> Self {
        AnnConfig {
            epochs: 200,
            dropout: 0.75,
            learning_rate: 1e-2,
            batch_size: 16,
            optimizer: OptimizerKind::Adam,
            seed: 0,
        }
    }
}

impl AnnConfig {
    pub fn validate(&self) -> Result<(), BaselineError> {
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(BaselineError::Config(format!("dropout must be in [0, 1), got {}", self.dropout)));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(BaselineError::Config("learning rate must be positive".into()));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(BaselineError::Config("epochs and batch size must be positive".into()));
        }
        Ok(())
    }
}

/// `inputs → HIDDEN_UNITS` ReLU layer followed by a softmax output layer.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnParams {
    pub hidden: Dense,
    pub output: Dense,
}

impl AnnParams {
    pub fn zeros(inputs: usize) -> AnnParams {
        AnnParams {
            hidden: Dense::zeros(inputs, HIDDEN_UNITS),
            output: Dense::zeros(HIDDEN_UNITS, 2),
        }
    }

    pub fn init<R: Rng>(inputs: usize, rng: &mut R) -> AnnParams {
        AnnParams {
            hidden: Dense::glorot(inputs, HIDDEN_UNITS, rng),
            output: Dense::glorot(HIDDEN_UNITS, 2, rng),
        }
    }
}

impl Parameters for AnnParams {
    fn tensors(&self) -> Vec<&[f64]> {
        let mut t = self.hidden.tensors();
        t.extend(self.output.tensors());
        t
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut t = self.hidden.tensors_mut();
        t.extend(self.output.tensors_mut());
        t
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnCache {
    pub input: Vec<f64>,
    pub pre_activation: Vec<f64>,
    /// Hidden output after ReLU and dropout scaling.
    pub hidden: Vec<f64>,
    /// Per-unit multiplier: 0 for dropped units, `1 / keep` for kept ones.
    pub mask: Vec<f64>,
    pub probs: Vec<f64>,
}

impl AnnParams {
    /// Forward pass with an explicit dropout mask. `keep[j] == false` drops
    /// hidden unit j; kept units are scaled by `1 / keep_prob` (inverted
    /// dropout). `None` is the inference pass.
    pub fn forward_with_mask(&self, x: &[f64], keep: Option<&[bool]>, keep_prob: f64) -> AnnCache {
        let pre = self.hidden.forward(x);
        let mask: Vec<f64> = match keep {
            Some(k) => k.iter().map(|&kept| if kept { 1.0 / keep_prob } else { 0.0 }).collect(),
            None => vec![1.0; HIDDEN_UNITS],
        };
        let hidden: Vec<f64> = pre.iter().zip(&mask).map(|(z, m)| relu(*z) * m).collect();
        let probs = softmax(&self.output.forward(&hidden));
        AnnCache {
            input: x.to_vec(),
            pre_activation: pre,
            hidden,
            mask,
            probs,
        }
    }

    /// Cross-entropy gradient for one example, accumulated into `grad`.
    pub fn backward(&self, cache: &AnnCache, label: Label, grad: &mut AnnParams) {
        let dz = softmax_cross_entropy_grad(&cache.probs, label);
        let dh = self.output.backward(&cache.hidden, &dz, &mut grad.output);
        let dpre: Vec<f64> = dh
            .iter()
            .zip(&cache.pre_activation)
            .zip(&cache.mask)
            .map(|((g, z), m)| if *z > 0.0 { g * m } else { 0.0 })
            .collect();
        self.hidden.backward(&cache.input, &dpre, &mut grad.hidden);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnModel {
    pub params: AnnParams,
}

impl AnnModel {
    pub fn predict(&self, x: &[f64]) -> Prediction {
        Prediction::from_probs(&self.params.forward_with_mask(x, None, 1.0).probs)
    }
}

/// Mini-batch training with dropout on the hidden layer. A single generator
/// seeded from `config.seed` drives initialization, shuffling and masks.
pub fn ann_fit<F: AsRef<[f64]>>(data: &[(F, Label)], config: &AnnConfig) -> Result<AnnModel, BaselineError> {
    config.validate()?;
    let dim = check_dims(data)?;
    let keep_prob = 1.0 - config.dropout;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params = AnnParams::init(dim, &mut rng);
    let mut optimizer = Optimizer::new(config.optimizer, config.learning_rate);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut keep = vec![true; HIDDEN_UNITS];
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            let mut grad = AnnParams::zeros(dim);
            for &i in batch {
                for k in keep.iter_mut() {
                    *k = rng.random_bool(keep_prob);
                }
                let cache = params.forward_with_mask(data[i].0.as_ref(), Some(&keep), keep_prob);
                params.backward(&cache, data[i].1, &mut grad);
            }
            let scale = 1.0 / batch.len() as f64;
            for t in grad.tensors_mut() {
                t.iter_mut().for_each(|g| *g *= scale);
            }
            optimizer.step(&mut params, &grad);
        }
    }
    Ok(AnnModel { params })
}
