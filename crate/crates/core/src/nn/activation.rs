use super::{expect_dims, Result};
use crate::tensor::Tensor;

pub fn relu_forward(x: &Tensor) -> Tensor {
    x.map(|v| v.max(0.0))
}

/// Gradient of relu given its input `x`; the subgradient at 0 is 0.
pub fn relu_backward(x: &Tensor, grad_out: &Tensor) -> Result<Tensor> {
    expect_dims("relu grad_out", grad_out.dims(), x.dims())?;
    Ok(x.zip_map(grad_out, |v, g| if v > 0.0 { g } else { 0.0 })?)
}

pub(crate) fn relu_in_place(x: &mut [f32]) {
    for v in x {
        *v = v.max(0.0);
    }
}

/// Zeroes `grad` wherever the pre-activation was not positive.
pub(crate) fn relu_mask_in_place(pre: &[f32], grad: &mut [f32]) {
    for (g, &v) in grad.iter_mut().zip(pre) {
        if v <= 0.0 {
            *g = 0.0;
        }
    }
}
