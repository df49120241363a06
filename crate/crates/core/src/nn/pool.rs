use super::{expect_dims, NnError, Result};
use crate::tensor::{Shape, Tensor};

/// Non-overlapping 3D max pooling (stride equals window). Trailing input
/// positions that do not fill a whole window are dropped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MaxPool3dLayer {
    pub window: [usize; 3],
}

/// Argmax bookkeeping from a forward pass, consumed by the backward pass.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoolIndices {
    input_dims: Vec<usize>,
    output_dims: Vec<usize>,
    argmax: Vec<usize>,
}

impl PoolIndices {
    pub fn input_dims(&self) -> &[usize] {
        &self.input_dims
    }

    pub fn output_dims(&self) -> &[usize] {
        &self.output_dims
    }

    /// Flat input index selected for each output cell.
    pub fn argmax(&self) -> &[usize] {
        &self.argmax
    }
}

impl MaxPool3dLayer {
    pub fn new(window: [usize; 3]) -> Self {
        assert!(window.iter().all(|&w| w >= 1), "pool window extents must be positive");
        MaxPool3dLayer { window }
    }

    pub fn output_dims(&self, input: &[usize]) -> Result<[usize; 4]> {
        let &[c, t, h, w] = input else {
            return Err(NnError::ShapeMismatch {
                what: "maxpool3d input (rank 4 expected)",
                expected: vec![],
                got: input.to_vec(),
            });
        };
        let [pt, ph, pw] = self.window;
        if pt > t || ph > h || pw > w {
            return Err(NnError::WindowTooLarge { kernel: self.window.to_vec(), input: vec![t, h, w] });
        }
        Ok([c, t / pt, h / ph, w / pw])
    }
}

pub fn maxpool3d_forward(input: &Tensor, layer: &MaxPool3dLayer) -> Result<(Tensor, PoolIndices)> {
    let out_dims = layer.output_dims(input.dims())?;
    let &[_, t, h, w] = input.dims() else { unreachable!() };
    let [c, ot, oh, ow] = out_dims;
    let [pt, ph, pw] = layer.window;
    let x = input.data();
    let n = c * ot * oh * ow;
    let mut out = Vec::with_capacity(n);
    let mut argmax = Vec::with_capacity(n);
    for ch in 0..c {
        for tt in 0..ot {
            for hh in 0..oh {
                for ww in 0..ow {
                    let mut best_idx = ((ch * t + tt * pt) * h + hh * ph) * w + ww * pw;
                    let mut best = x[best_idx];
                    // scan in increasing flat-index order; strict `>` keeps the lowest index on ties
                    for dt in 0..pt {
                        for dh in 0..ph {
                            let row = ((ch * t + tt * pt + dt) * h + hh * ph + dh) * w + ww * pw;
                            for (dw, &v) in x[row..row + pw].iter().enumerate() {
                                if v > best {
                                    best = v;
                                    best_idx = row + dw;
                                }
                            }
                        }
                    }
                    out.push(best);
                    argmax.push(best_idx);
                }
            }
        }
    }
    let indices = PoolIndices {
        input_dims: input.dims().to_vec(),
        output_dims: out_dims.to_vec(),
        argmax,
    };
    Ok((Tensor::from_parts(Shape::new(&out_dims)?, out), indices))
}

pub fn maxpool3d_backward(indices: &PoolIndices, grad_out: &Tensor) -> Result<Tensor> {
    expect_dims("maxpool3d grad_out", grad_out.dims(), &indices.output_dims)?;
    let mut grad = Tensor::zeros(&indices.input_dims)?;
    let dst = grad.data_mut();
    for (&i, &g) in indices.argmax.iter().zip(grad_out.data()) {
        dst[i] += g;
    }
    Ok(grad)
}
