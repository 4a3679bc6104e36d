use super::cnn::{backward, loss, CnnModel};
use super::{NnError, Parameters};
use crate::ingest::Label;
use crate::semantic::SemanticMatrix;

/// Outcome of comparing analytic gradients with central differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheck {
    /// Largest `|analytic - numeric| / max(1, |analytic|)` over all parameters.
    pub max_relative_error: f64,
    /// Tensor index and position of the worst parameter, in
    /// [`Parameters::tensors`] order.
    pub worst: (usize, usize),
    pub checked: usize,
}

/// Checks every parameter of `model` against a central finite difference
/// with the given step.
pub fn gradient_check(model: &CnnModel, input: &SemanticMatrix, label: Label, step: f64) -> Result<GradCheck, NnError> {
    let (_, cache) = model.forward(input)?;
    let analytic = backward(model, &cache, label);
    let mut probe = model.clone();
    let mut result = GradCheck {
        max_relative_error: 0.0,
        worst: (0, 0),
        checked: 0,
    };
    let shapes: Vec<usize> = model.params.tensors().iter().map(|t| t.len()).collect();
    for (t, len) in shapes.into_iter().enumerate() {
        for i in 0..len {
            let orig = probe.params.tensors()[t][i];
            probe.params.tensors_mut()[t][i] = orig + step;
            let up = loss(&probe.predict(input)?, label);
            probe.params.tensors_mut()[t][i] = orig - step;
            let down = loss(&probe.predict(input)?, label);
            probe.params.tensors_mut()[t][i] = orig;
            let numeric = (up - down) / (2.0 * step);
            let a = analytic.tensors()[t][i];
            let err = (a - numeric).abs() / a.abs().max(1.0);
            if err > result.max_relative_error {
                result.max_relative_error = err;
                result.worst = (t, i);
            }
            result.checked += 1;
        }
    }
    Ok(result)
}
