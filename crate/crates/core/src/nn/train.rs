use std::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::cnn::{accumulate_gradients, forward_params, loss, CnnModel, CnnParams, Grid};
use super::optim::{Optimizer, OptimizerKind};
use super::{NnError, Parameters};
use crate::ingest::Label;
use crate::semantic::SemanticMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: OptimizerKind,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            epochs: 200,
            batch_size: 16,
            optimizer: OptimizerKind::Adam,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NnError> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(NnError::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(NnError::Config("epochs must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(NnError::Config("batch size must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub val_loss: Option<f64>,
    pub val_accuracy: Option<f64>,
}

/// Per-epoch loss and accuracy on the training and validation sets.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainHistory {
    pub epochs: Vec<EpochStats>,
}

impl TrainHistory {
    pub fn train_loss(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.train_loss).collect()
    }

    pub fn last(&self) -> Option<&EpochStats> {
        self.epochs.last()
    }
}

pub type Example = (SemanticMatrix, Label);

/// Trains a freshly initialized model.
pub fn train(config: &TrainConfig, train_set: &[Example], val_set: &[Example]) -> Result<(CnnModel, TrainHistory), NnError> {
    config.validate()?;
    train_model(CnnModel::new(config.clone()), train_set, val_set)
}

/// Mini-batch training from the model's current parameters, using its config.
///
/// Examples are first put in a canonical content order, then visited in a
/// seed-derived shuffle per epoch, so the result depends only on the seed
/// and the multiset of examples.
pub fn train_model(mut model: CnnModel, train_set: &[Example], val_set: &[Example]) -> Result<(CnnModel, TrainHistory), NnError> {
    let config = model.config.clone();
    config.validate()?;
    if train_set.is_empty() {
        return Err(NnError::Config("training set is empty".into()));
    }
    let train_grids: Vec<(Grid, Label)> = train_set
        .iter()
        .map(|(m, l)| Grid::reduced(m).map(|g| (g, *l)))
        .collect::<Result<_, _>>()?;
    let val_grids: Vec<(Grid, Label)> = val_set
        .iter()
        .map(|(m, l)| Grid::reduced(m).map(|g| (g, *l)))
        .collect::<Result<_, _>>()?;

    let mut canonical: Vec<usize> = (0..train_grids.len()).collect();
    canonical.sort_by(|&a, &b| compare_examples(&train_grids[a], &train_grids[b]));
    let train_grids: Vec<(Grid, Label)> = canonical.iter().map(|&i| train_grids[i]).collect();

    let mut optimizer = Optimizer::new(config.optimizer, config.learning_rate);
    let mut history = TrainHistory::default();
    let mut order: Vec<usize> = (0..train_grids.len()).collect();
    for epoch in 0..config.epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(epoch as u64 + 1);
        order.sort_unstable();
        order.shuffle(&mut rng);

        for batch in order.chunks(config.batch_size) {
            let mut grads = CnnParams::zeros();
            for &i in batch {
                let (input, label) = &train_grids[i];
                let (_, cache) = forward_params(&model.params, input)?;
                accumulate_gradients(&model.params, &cache, *label, &mut grads);
            }
            let scale = 1.0 / batch.len() as f64;
            for t in grads.tensors_mut() {
                t.iter_mut().for_each(|g| *g *= scale);
            }
            optimizer.step(&mut model.params, &grads);
        }

        let (train_loss, train_accuracy) = loss_and_accuracy(&model.params, &train_grids)?;
        let val = if val_grids.is_empty() {
            None
        } else {
            Some(loss_and_accuracy(&model.params, &val_grids)?)
        };
        history.epochs.push(EpochStats {
            train_loss,
            train_accuracy,
            val_loss: val.map(|v| v.0),
            val_accuracy: val.map(|v| v.1),
        });
    }
    Ok((model, history))
}

fn loss_and_accuracy(params: &CnnParams, set: &[(Grid, Label)]) -> Result<(f64, f64), NnError> {
    let mut total = 0.0;
    let mut correct = 0usize;
    for (input, label) in set {
        let (pred, _) = forward_params(params, input)?;
        total += loss(&pred, *label);
        if pred.label() == *label {
            correct += 1;
        }
    }
    let n = set.len() as f64;
    Ok((total / n, correct as f64 / n))
}

fn compare_examples(a: &(Grid, Label), b: &(Grid, Label)) -> Ordering {
    a.1.index().cmp(&b.1.index()).then_with(|| {
        a.0.data
            .iter()
            .zip(b.0.data)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::WIDTH;

    fn matrix(fill: impl Fn(usize, usize) -> f64) -> SemanticMatrix {
        let mut rows = [[0.0; WIDTH]; 18];
        for (r, row) in rows.iter_mut().enumerate() {
            for (c, x) in row.iter_mut().enumerate() {
                *x = fill(r, c);
            }
        }
        SemanticMatrix::reduced_from_rows(&rows).unwrap()
    }

    #[test]
    fn config_errors() {
        let m = matrix(|_, _| 0.1);
        let set = vec![(m, Label::Affected)];
        for bad in [
            TrainConfig { learning_rate: 0.0, ..TrainConfig::default() },
            TrainConfig { learning_rate: -1.0, ..TrainConfig::default() },
            TrainConfig { epochs: 0, ..TrainConfig::default() },
        ] {
            assert!(matches!(train(&bad, &set, &[]), Err(NnError::Config(_))));
        }
        assert!(matches!(train(&TrainConfig::default(), &[], &[]), Err(NnError::Config(_))));
    }

    #[test]
    fn memorizes_one_example() {
        let m = matrix(|r, c| if c < 3 { 0.2 + 0.03 * r as f64 } else { 0.0 });
        let config = TrainConfig {
            learning_rate: 0.1,
            epochs: 200,
            batch_size: 1,
            optimizer: OptimizerKind::Sgd,
            seed: 3,
        };
        let (_, history) = train(&config, &[(m, Label::Affected)], &[]).unwrap();
        let last = history.last().unwrap();
        assert!(last.train_loss < 0.01, "loss {}", last.train_loss);
        assert_eq!(history.epochs.len(), 200);
    }

    #[test]
    fn history_lengths_and_validation() {
        let a = matrix(|r, _| if r >= 11 { 0.8 } else { 0.1 });
        let b = matrix(|_, _| 0.1);
        let set = vec![(a.clone(), Label::Affected), (b.clone(), Label::Unaffected)];
        let config = TrainConfig { epochs: 7, ..TrainConfig::default() };
        let (_, h) = train(&config, &set, &set).unwrap();
        assert_eq!(h.epochs.len(), 7);
        assert!(h.epochs.iter().all(|e| e.val_loss.is_some()));
        let (_, h) = train(&config, &set, &[]).unwrap();
        assert!(h.epochs.iter().all(|e| e.val_loss.is_none()));
    }
}
