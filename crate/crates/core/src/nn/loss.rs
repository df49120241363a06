use super::{NnError, Result};
use crate::tensor::Tensor;

/// Cross-entropy of `softmax(logits)` against `label`, with its gradient
/// with respect to the logits. Evaluated in `f64` after max-subtraction.
pub fn softmax_cross_entropy(logits: &Tensor, label: usize) -> Result<(f32, Tensor)> {
    let k = logits.numel();
    if k < 2 {
        return Err(NnError::TooFewClasses(k));
    }
    if label >= k {
        return Err(NnError::LabelOutOfRange { label, classes: k });
    }
    let z = logits.data();
    let max = z.iter().copied().fold(f32::NEG_INFINITY, f32::max) as f64;
    let exps: Vec<f64> = z.iter().map(|&v| (v as f64 - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    let loss = sum.ln() - (z[label] as f64 - max);
    let grad: Vec<f32> = exps
        .iter()
        .enumerate()
        .map(|(i, &e)| (e / sum - if i == label { 1.0 } else { 0.0 }) as f32)
        .collect();
    Ok((loss as f32, Tensor::from_vec(logits.dims(), grad)?))
}
