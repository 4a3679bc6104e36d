use super::Parameters;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

impl OptimizerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::Adam => "adam",
        }
    }

    pub fn parse(s: &str) -> Option<OptimizerKind> {
        match s {
            "sgd" => Some(OptimizerKind::Sgd),
            "adam" => Some(OptimizerKind::Adam),
            _ => None,
        }
    }
}

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;

/// Plain SGD or Adam over any [`Parameters`] value.
#[derive(Debug, Clone)]
pub struct Optimizer {
    kind: OptimizerKind,
    lr: f64,
    step: i32,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f64) -> Optimizer {
        Optimizer {
            kind,
            lr,
            step: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn step<P: Parameters>(&mut self, params: &mut P, grads: &P) {
        let grads = grads.tensors();
        let mut params = params.tensors_mut();
        debug_assert_eq!(grads.len(), params.len());
        match self.kind {
            OptimizerKind::Sgd => {
                for (p, g) in params.iter_mut().zip(&grads) {
                    for (pi, gi) in p.iter_mut().zip(g.iter()) {
                        *pi -= self.lr * gi;
                    }
                }
            }
            OptimizerKind::Adam => {
                if self.m.is_empty() {
                    self.m = grads.iter().map(|g| vec![0.0; g.len()]).collect();
                    self.v = self.m.clone();
                }
                self.step += 1;
                let c1 = 1.0 - ADAM_BETA1.powi(self.step);
                let c2 = 1.0 - ADAM_BETA2.powi(self.step);
                for (t, (p, g)) in params.iter_mut().zip(&grads).enumerate() {
                    let (m, v) = (&mut self.m[t], &mut self.v[t]);
                    for i in 0..p.len() {
                        m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * g[i];
                        v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * g[i] * g[i];
                        let m_hat = m[i] / c1;
                        let v_hat = v[i] / c2;
                        p[i] -= self.lr * m_hat / (v_hat.sqrt() + ADAM_EPSILON);
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Dense;

    #[test]
    fn sgd_step() {
        let mut p = Dense { inputs: 1, outputs: 1, weights: vec![1.0], bias: vec![0.0] };
        let g = Dense { inputs: 1, outputs: 1, weights: vec![2.0], bias: vec![-1.0] };
        Optimizer::new(OptimizerKind::Sgd, 0.1).step(&mut p, &g);
        assert!((p.weights[0] - 0.8).abs() < 1e-15);
        assert!((p.bias[0] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn adam_first_step_moves_by_lr() {
        // bias-corrected first step is lr * g / (|g| + eps)
        let mut p = Dense { inputs: 1, outputs: 1, weights: vec![1.0], bias: vec![0.0] };
        let g = Dense { inputs: 1, outputs: 1, weights: vec![5.0], bias: vec![-0.3] };
        Optimizer::new(OptimizerKind::Adam, 0.01).step(&mut p, &g);
        assert!((p.weights[0] - 0.99).abs() < 1e-9);
        assert!((p.bias[0] - 0.01).abs() < 1e-9);
    }
}
