use super::{expect_dims, NnError, Result};
use crate::tensor::Tensor;

/// Fully connected layer, `y = x · W + b` with `W` of shape `[in, out]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weights: Tensor,
    pub bias: Tensor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrads {
    pub input: Tensor,
    pub weights: Tensor,
    pub bias: Tensor,
}

impl DenseLayer {
    pub fn new(weights: Tensor, bias: Tensor) -> Result<Self> {
        let &[_, out] = weights.dims() else {
            return Err(NnError::ShapeMismatch {
                what: "dense weights (rank 2 expected)",
                expected: vec![],
                got: weights.dims().to_vec(),
            });
        };
        expect_dims("dense bias", bias.dims(), &[out])?;
        Ok(DenseLayer { weights, bias })
    }

    pub fn in_features(&self) -> usize {
        self.weights.dims()[0]
    }

    pub fn out_features(&self) -> usize {
        self.weights.dims()[1]
    }

    fn check_input(&self, x: &Tensor) -> Result<()> {
        if x.numel() != self.in_features() {
            return Err(NnError::ShapeMismatch {
                what: "dense input (flattened)",
                expected: vec![self.in_features()],
                got: x.dims().to_vec(),
            });
        }
        Ok(())
    }
}

/// Applies the layer to the flattened input; returns a `[out]` vector.
pub fn dense_forward(x: &Tensor, layer: &DenseLayer) -> Result<Tensor> {
    layer.check_input(x)?;
    let mut y = layer.bias.clone();
    let n_out = layer.out_features();
    // Row-streaming GEMV: a GEMM call would repack the whole weight matrix.
    let out = y.data_mut();
    for (row, &xv) in layer.weights.data().chunks_exact(n_out).zip(x.data()) {
        if xv != 0.0 {
            for (o, &w) in out.iter_mut().zip(row) {
                *o += xv * w;
            }
        }
    }
    y.debug_check_finite();
    Ok(y)
}

pub fn dense_backward(x: &Tensor, layer: &DenseLayer, grad_out: &Tensor) -> Result<DenseGrads> {
    let mut weights = Tensor::zeros(layer.weights.dims())?;
    let mut bias = Tensor::zeros(layer.bias.dims())?;
    let mut input = Tensor::zeros(x.dims())?;
    dense_backward_into(x, layer, grad_out, weights.data_mut(), bias.data_mut(), input.data_mut())?;
    Ok(DenseGrads { input, weights, bias })
}

/// Accumulates parameter gradients and overwrites `grad_input` with `W · g`.
pub(crate) fn dense_backward_into(
    x: &Tensor,
    layer: &DenseLayer,
    grad_out: &Tensor,
    grad_w: &mut [f32],
    grad_b: &mut [f32],
    grad_input: &mut [f32],
) -> Result<()> {
    layer.check_input(x)?;
    expect_dims("dense grad_out", grad_out.dims(), &[layer.out_features()])?;
    let n_out = layer.out_features();
    let g = grad_out.data();
    for (b, &gv) in grad_b.iter_mut().zip(g) {
        *b += gv;
    }
    for (row, &xv) in grad_w.chunks_exact_mut(n_out).zip(x.data()) {
        if xv != 0.0 {
            for (w, &gv) in row.iter_mut().zip(g) {
                *w += xv * gv;
            }
        }
    }
    for (gi, row) in grad_input.iter_mut().zip(layer.weights.data().chunks_exact(n_out)) {
        *gi = row.iter().zip(g).map(|(&w, &gv)| w * gv).sum();
    }
    Ok(())
}
