use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::layers::{cross_entropy, glorot_limit, relu, softmax, softmax_cross_entropy_grad, Dense};
use super::{NnError, Parameters, TrainConfig};
use crate::ingest::Label;
use crate::semantic::{Form, SemanticMatrix};
use crate::{REDUCED_ROWS, WIDTH};

/// Filter heights; each height gets [`FILTERS_PER_HEIGHT`] filters.
pub const FILTER_HEIGHTS: [usize; 3] = [5, 6, 7];
pub const FILTERS_PER_HEIGHT: usize = 2;
pub const NUM_FILTERS: usize = FILTER_HEIGHTS.len() * FILTERS_PER_HEIGHT;
pub const NUM_CLASSES: usize = 2;

/// Read-only row-major grid.
#[derive(Debug, Clone, Copy)]
pub struct Grid<'a> {
    pub rows: usize,
    pub cols: usize,
    pub data: &'a [f64],
}

impl<'a> Grid<'a> {
    pub fn new(rows: usize, cols: usize, data: &'a [f64]) -> Result<Grid<'a>, NnError> {
        if data.len() != rows * cols {
            return Err(NnError::Shape(format!(
                "{} values cannot form a {rows}x{cols} grid",
                data.len()
            )));
        }
        Ok(Grid { rows, cols, data })
    }

    /// The reduced matrix as model input; rejects anything but 18×13.
    pub fn reduced(m: &'a SemanticMatrix) -> Result<Grid<'a>, NnError> {
        if m.form() != Form::Reduced || m.rows() != REDUCED_ROWS || m.cols() != WIDTH {
            return Err(NnError::Shape(format!(
                "model input must be a reduced {REDUCED_ROWS}x{WIDTH} matrix, found {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        Ok(Grid {
            rows: m.rows(),
            cols: m.cols(),
            data: m.as_slice(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Relu,
}

/// Full-width convolution kernel: spans every input column and slides
/// vertically with stride 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvFilter {
    pub height: usize,
    pub width: usize,
    /// `height × width`, row-major.
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl ConvFilter {
    pub fn zeros(height: usize, width: usize) -> ConvFilter {
        ConvFilter {
            height,
            width,
            weights: vec![0.0; height * width],
            bias: 0.0,
        }
    }

    fn pre_activation(&self, input: &Grid, t: usize) -> f64 {
        let window = &input.data[t * input.cols..(t + self.height) * input.cols];
        self.bias + window.iter().zip(&self.weights).map(|(x, w)| x * w).sum::<f64>()
    }
}

/// Feature map of one filter: entry `t` is the activated sum over the
/// window starting at row `t`. Length `rows - height + 1`.
pub fn conv_forward(input: &Grid, filter: &ConvFilter, activation: Activation) -> Result<Vec<f64>, NnError> {
    if filter.width != input.cols || filter.height == 0 || filter.height > input.rows {
        return Err(NnError::Shape(format!(
            "{}x{} filter does not fit a {}x{} input",
            filter.height, filter.width, input.rows, input.cols
        )));
    }
    Ok((0..=input.rows - filter.height)
        .map(|t| {
            let z = filter.pre_activation(input, t);
            match activation {
                Activation::Identity => z,
                Activation::Relu => relu(z),
            }
        })
        .collect())
}

/// Maximum of a feature map and the first index attaining it.
pub fn max_over_time(map: &[f64]) -> Result<(f64, usize), NnError> {
    let (mut best, mut arg) = (*map.first().ok_or(NnError::EmptyMap)?, 0);
    for (i, &x) in map.iter().enumerate().skip(1) {
        if x > best {
            best = x;
            arg = i;
        }
    }
    Ok((best, arg))
}

/// Upstream gradient routed back through max pooling: only the first argmax
/// receives it.
pub fn max_over_time_backward(len: usize, argmax: usize, grad: f64) -> Vec<f64> {
    let mut g = vec![0.0; len];
    g[argmax] = grad;
    g
}

/// Two-way class probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub p_affected: f64,
    pub p_unaffected: f64,
}

impl Prediction {
    pub fn from_probs(p: &[f64]) -> Prediction {
        Prediction {
            p_affected: p[Label::Affected.index()],
            p_unaffected: p[Label::Unaffected.index()],
        }
    }

    pub fn probs(&self) -> [f64; NUM_CLASSES] {
        let mut p = [0.0; NUM_CLASSES];
        p[Label::Affected.index()] = self.p_affected;
        p[Label::Unaffected.index()] = self.p_unaffected;
        p
    }

    /// Threshold 0.5, ties to affected.
    pub fn label(&self) -> Label {
        if self.p_affected >= 0.5 {
            Label::Affected
        } else {
            Label::Unaffected
        }
    }
}

pub fn loss(pred: &Prediction, label: Label) -> f64 {
    cross_entropy(&pred.probs(), label)
}

/// Trainable parameters: six full-width filters and the dense 6→2 head.
#[derive(Debug, Clone, PartialEq)]
pub struct CnnParams {
    pub filters: Vec<ConvFilter>,
    pub dense: Dense,
}

impl CnnParams {
    pub fn zeros() -> CnnParams {
        CnnParams {
            filters: FILTER_HEIGHTS
                .iter()
                .flat_map(|&h| std::iter::repeat_n(h, FILTERS_PER_HEIGHT))
                .map(|h| ConvFilter::zeros(h, WIDTH))
                .collect(),
            dense: Dense::zeros(NUM_FILTERS, NUM_CLASSES),
        }
    }

    /// Glorot-uniform weights per tensor, zero biases.
    pub fn init(seed: u64) -> CnnParams {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = CnnParams::zeros();
        for f in &mut p.filters {
            let fan = f.height * f.width;
            let limit = glorot_limit(fan, fan * FILTERS_PER_HEIGHT);
            for w in &mut f.weights {
                *w = rand::Rng::random_range(&mut rng, -limit..limit);
            }
        }
        p.dense = Dense::glorot(NUM_FILTERS, NUM_CLASSES, &mut rng);
        p
    }

    pub fn zeros_like(&self) -> CnnParams {
        CnnParams::zeros()
    }

    fn check(&self) -> Result<(), NnError> {
        let heights: Vec<usize> = self.filters.iter().map(|f| f.height).collect();
        let expected: Vec<usize> = FILTER_HEIGHTS
            .iter()
            .flat_map(|&h| std::iter::repeat_n(h, FILTERS_PER_HEIGHT))
            .collect();
        let shapes_ok = heights == expected
            && self.filters.iter().all(|f| f.width == WIDTH && f.weights.len() == f.height * WIDTH)
            && self.dense.inputs == NUM_FILTERS
            && self.dense.outputs == NUM_CLASSES
            && self.dense.weights.len() == NUM_FILTERS * NUM_CLASSES
            && self.dense.bias.len() == NUM_CLASSES;
        if shapes_ok {
            Ok(())
        } else {
            Err(NnError::Shape("parameters do not match the 5/6/7x2 architecture".into()))
        }
    }
}

impl Parameters for CnnParams {
    fn tensors(&self) -> Vec<&[f64]> {
        let mut t: Vec<&[f64]> = Vec::with_capacity(2 * NUM_FILTERS + 2);
        for f in &self.filters {
            t.push(&f.weights);
            t.push(std::slice::from_ref(&f.bias));
        }
        t.extend(self.dense.tensors());
        t
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut t: Vec<&mut [f64]> = Vec::with_capacity(2 * NUM_FILTERS + 2);
        for f in &mut self.filters {
            t.push(&mut f.weights);
            t.push(std::slice::from_mut(&mut f.bias));
        }
        t.extend(self.dense.tensors_mut());
        t
    }
}

/// Parameters plus the configuration they were trained with.
#[derive(Debug, Clone, PartialEq)]
pub struct CnnModel {
    pub params: CnnParams,
    pub config: TrainConfig,
}

/// Intermediate values of a forward pass, needed by [`backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    input: Vec<f64>,
    /// Pre-activation feature map per filter.
    pub maps: Vec<Vec<f64>>,
    pub argmax: Vec<usize>,
    pub pooled: Vec<f64>,
    pub logits: Vec<f64>,
    pub probs: Vec<f64>,
}

impl CnnModel {
    pub fn new(config: TrainConfig) -> CnnModel {
        CnnModel {
            params: CnnParams::init(config.seed),
            config,
        }
    }

    pub fn forward(&self, input: &SemanticMatrix) -> Result<(Prediction, ForwardCache), NnError> {
        forward_params(&self.params, &Grid::reduced(input)?)
    }

    pub fn predict(&self, input: &SemanticMatrix) -> Result<Prediction, NnError> {
        self.forward(input).map(|(p, _)| p)
    }
}

pub fn forward(model: &CnnModel, input: &SemanticMatrix) -> Result<(Prediction, ForwardCache), NnError> {
    model.forward(input)
}

pub fn predict(model: &CnnModel, input: &SemanticMatrix) -> Result<Prediction, NnError> {
    model.predict(input)
}

pub(crate) fn forward_params(params: &CnnParams, input: &Grid) -> Result<(Prediction, ForwardCache), NnError> {
    params.check()?;
    if input.rows != REDUCED_ROWS || input.cols != WIDTH {
        return Err(NnError::Shape(format!(
            "model input must be {REDUCED_ROWS}x{WIDTH}, found {}x{}",
            input.rows, input.cols
        )));
    }
    let mut maps = Vec::with_capacity(NUM_FILTERS);
    let mut argmax = Vec::with_capacity(NUM_FILTERS);
    let mut pooled = Vec::with_capacity(NUM_FILTERS);
    for f in &params.filters {
        let pre = conv_forward(input, f, Activation::Identity)?;
        let act: Vec<f64> = pre.iter().map(|&z| relu(z)).collect();
        let (m, i) = max_over_time(&act)?;
        maps.push(pre);
        argmax.push(i);
        pooled.push(m);
    }
    let logits = params.dense.forward(&pooled);
    let probs = softmax(&logits);
    let pred = Prediction::from_probs(&probs);
    Ok((
        pred,
        ForwardCache {
            input: input.data.to_vec(),
            maps,
            argmax,
            pooled,
            logits,
            probs,
        },
    ))
}

/// Exact gradients of the cross-entropy loss for one example.
pub fn backward(model: &CnnModel, cache: &ForwardCache, label: Label) -> CnnParams {
    let mut grads = CnnParams::zeros();
    accumulate_gradients(&model.params, cache, label, &mut grads);
    grads
}

pub(crate) fn accumulate_gradients(params: &CnnParams, cache: &ForwardCache, label: Label, grads: &mut CnnParams) {
    let dlogits = softmax_cross_entropy_grad(&cache.probs, label);
    let dpooled = params.dense.backward(&cache.pooled, &dlogits, &mut grads.dense);
    for (k, f) in params.filters.iter().enumerate() {
        let t = cache.argmax[k];
        // relu passes gradient only where the pre-activation is positive
        if cache.maps[k][t] <= 0.0 {
            continue;
        }
        let d = dpooled[k];
        let g = &mut grads.filters[k];
        g.bias += d;
        let window = &cache.input[t * WIDTH..(t + f.height) * WIDTH];
        for (gw, x) in g.weights.iter_mut().zip(window) {
            *gw += d * x;
        }
    }
}
