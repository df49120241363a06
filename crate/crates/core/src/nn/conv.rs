use std::cell::RefCell;

use super::{expect_dims, NnError, Result};
use crate::tensor::{gemm, MatRef, Shape, Tensor};

thread_local! {
    // Reused unfold buffers; large conv layers would otherwise pay page
    // faults on tens of megabytes per call.
    static COL: RefCell<Vec<f32>> = const { RefCell::new(Vec::new()) };
    static DCOL: RefCell<Vec<f32>> = const { RefCell::new(Vec::new()) };
}

fn with_scratch<R>(
    key: &'static std::thread::LocalKey<RefCell<Vec<f32>>>,
    len: usize,
    f: impl FnOnce(&mut [f32]) -> R,
) -> R {
    key.with(|cell| {
        let mut buf = cell.borrow_mut();
        if buf.len() < len {
            buf.resize(len, 0.0);
        }
        f(&mut buf[..len])
    })
}

/// Valid (unpadded), stride-1 3D convolution layer.
///
/// `weights` is `[out_ch, in_ch, k_t, k_h, k_w]`, `bias` is `[out_ch]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv3dLayer {
    pub weights: Tensor,
    pub bias: Tensor,
}

/// Forward kernel used by [`conv3d_forward_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConvAlgo {
    /// Lower to a single GEMM over an unfolded input matrix.
    #[default]
    Im2col,
    /// Loop nest accumulating kernel taps into contiguous output rows.
    Direct,
}

impl ConvAlgo {
    pub const ALL: [ConvAlgo; 2] = [ConvAlgo::Im2col, ConvAlgo::Direct];
}

#[derive(Debug, Clone, PartialEq)]
pub struct Conv3dGrads {
    pub input: Tensor,
    pub weights: Tensor,
    pub bias: Tensor,
}

impl Conv3dLayer {
    pub fn new(weights: Tensor, bias: Tensor) -> Result<Self> {
        let &[out_ch, _, _, _, _] = weights.dims() else {
            return Err(NnError::ShapeMismatch {
                what: "conv3d weights (rank 5 expected)",
                expected: vec![],
                got: weights.dims().to_vec(),
            });
        };
        expect_dims("conv3d bias", bias.dims(), &[out_ch])?;
        Ok(Conv3dLayer { weights, bias })
    }

    pub fn out_channels(&self) -> usize {
        self.weights.dims()[0]
    }

    pub fn in_channels(&self) -> usize {
        self.weights.dims()[1]
    }

    pub fn kernel(&self) -> [usize; 3] {
        let d = self.weights.dims();
        [d[2], d[3], d[4]]
    }

    fn patch_len(&self) -> usize {
        let [kt, kh, kw] = self.kernel();
        self.in_channels() * kt * kh * kw
    }
}

/// Output extents `[out_ch, T', H', W']` for an input `[in_ch, T, H, W]`.
pub fn conv_output_dims(input: &[usize], layer: &Conv3dLayer) -> Result<[usize; 4]> {
    let &[c, t, h, w] = input else {
        return Err(NnError::ShapeMismatch {
            what: "conv3d input rank",
            expected: vec![layer.in_channels(), 0, 0, 0],
            got: input.to_vec(),
        });
    };
    if c != layer.in_channels() {
        return Err(NnError::ChannelMismatch { expected: layer.in_channels(), got: c });
    }
    let [kt, kh, kw] = layer.kernel();
    if kt > t || kh > h || kw > w {
        return Err(NnError::WindowTooLarge { kernel: vec![kt, kh, kw], input: vec![t, h, w] });
    }
    Ok([layer.out_channels(), t - kt + 1, h - kh + 1, w - kw + 1])
}

pub fn conv3d_forward(input: &Tensor, layer: &Conv3dLayer) -> Result<Tensor> {
    conv3d_forward_with(input, layer, ConvAlgo::Im2col)
}

pub fn conv3d_forward_with(input: &Tensor, layer: &Conv3dLayer, algo: ConvAlgo) -> Result<Tensor> {
    let out_dims = conv_output_dims(input.dims(), layer)?;
    let data = match algo {
        ConvAlgo::Im2col => forward_im2col(input, layer, out_dims),
        ConvAlgo::Direct => forward_direct(input, layer, out_dims),
    };
    let out = Tensor::from_parts(Shape::new(&out_dims)?, data);
    out.debug_check_finite();
    Ok(out)
}

fn forward_im2col(input: &Tensor, layer: &Conv3dLayer, out_dims: [usize; 4]) -> Vec<f32> {
    let [o, ot, oh, ow] = out_dims;
    let positions = ot * oh * ow;
    let ck = layer.patch_len();
    let mut out = vec![0.0f32; o * positions];
    for (row, &b) in out.chunks_exact_mut(positions).zip(layer.bias.data()) {
        row.fill(b);
    }
    with_scratch(&COL, ck * positions, |col| {
        im2col(input, layer.kernel(), out_dims, col);
        gemm(
            o,
            ck,
            positions,
            MatRef::row_major(layer.weights.data(), ck),
            MatRef::row_major(col, positions),
            1.0,
            &mut out,
        );
    });
    out
}

fn forward_direct(input: &Tensor, layer: &Conv3dLayer, out_dims: [usize; 4]) -> Vec<f32> {
    let [o, ot, oh, ow] = out_dims;
    let &[c, t, h, w] = input.dims() else { unreachable!() };
    let [kt, kh, kw] = layer.kernel();
    let x = input.data();
    let wts = layer.weights.data();
    let positions = ot * oh * ow;
    let mut out = vec![0.0f32; o * positions];
    for (oc, out_ch) in out.chunks_exact_mut(positions).enumerate() {
        out_ch.fill(layer.bias.data()[oc]);
        for ic in 0..c {
            for dt in 0..kt {
                for dh in 0..kh {
                    for dw in 0..kw {
                        let wv = wts[(((oc * c + ic) * kt + dt) * kh + dh) * kw + dw];
                        for tt in 0..ot {
                            for hh in 0..oh {
                                let src = ((ic * t + tt + dt) * h + hh + dh) * w + dw;
                                let dst = (tt * oh + hh) * ow;
                                let src_row = &x[src..src + ow];
                                for (y, &v) in out_ch[dst..dst + ow].iter_mut().zip(src_row) {
                                    *y += wv * v;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// Unfolds `[C, T, H, W]` into a `[C·kt·kh·kw, T'·H'·W']` row-major matrix.
/// Every element of `col` is overwritten.
fn im2col(input: &Tensor, kernel: [usize; 3], out_dims: [usize; 4], col: &mut [f32]) {
    let &[c, t, h, w] = input.dims() else { unreachable!() };
    let [kt, kh, kw] = kernel;
    let [_, ot, oh, ow] = out_dims;
    let positions = ot * oh * ow;
    let x = input.data();
    debug_assert_eq!(col.len(), c * kt * kh * kw * positions);
    let mut rows = col.chunks_exact_mut(positions);
    for ic in 0..c {
        for dt in 0..kt {
            for dh in 0..kh {
                for dw in 0..kw {
                    let dst = rows.next().expect("row count");
                    for tt in 0..ot {
                        for hh in 0..oh {
                            let src = ((ic * t + tt + dt) * h + hh + dh) * w + dw;
                            let d = (tt * oh + hh) * ow;
                            dst[d..d + ow].copy_from_slice(&x[src..src + ow]);
                        }
                    }
                }
            }
        }
    }
}

/// Scatter-adds an unfolded gradient matrix back onto `[C, T, H, W]`.
fn col2im_add(col: &[f32], input_dims: &[usize], kernel: [usize; 3], out_dims: [usize; 4], dst: &mut [f32]) {
    let &[c, t, h, w] = input_dims else { unreachable!() };
    let [kt, kh, kw] = kernel;
    let [_, ot, oh, ow] = out_dims;
    let positions = ot * oh * ow;
    let mut rows = col.chunks_exact(positions);
    for ic in 0..c {
        for dt in 0..kt {
            for dh in 0..kh {
                for dw in 0..kw {
                    let src = rows.next().expect("row count");
                    for tt in 0..ot {
                        for hh in 0..oh {
                            let d = ((ic * t + tt + dt) * h + hh + dh) * w + dw;
                            let s = (tt * oh + hh) * ow;
                            for (x, &g) in dst[d..d + ow].iter_mut().zip(&src[s..s + ow]) {
                                *x += g;
                            }
                        }
                    }
                }
            }
        }
    }
}

pub fn conv3d_backward(input: &Tensor, layer: &Conv3dLayer, grad_out: &Tensor) -> Result<Conv3dGrads> {
    let mut weights = Tensor::zeros(layer.weights.dims())?;
    let mut bias = Tensor::zeros(layer.bias.dims())?;
    let mut grad_input = Tensor::zeros(input.dims())?;
    conv3d_backward_into(
        input,
        layer,
        grad_out,
        weights.data_mut(),
        bias.data_mut(),
        Some(grad_input.data_mut()),
    )?;
    Ok(Conv3dGrads { input: grad_input, weights, bias })
}

/// Accumulates parameter gradients into `grad_w`/`grad_b` and, when asked,
/// adds the input gradient into `grad_input`.
pub(crate) fn conv3d_backward_into(
    input: &Tensor,
    layer: &Conv3dLayer,
    grad_out: &Tensor,
    grad_w: &mut [f32],
    grad_b: &mut [f32],
    grad_input: Option<&mut [f32]>,
) -> Result<()> {
    let out_dims = conv_output_dims(input.dims(), layer)?;
    expect_dims("conv3d grad_out", grad_out.dims(), &out_dims)?;
    let [o, ot, oh, ow] = out_dims;
    let positions = ot * oh * ow;
    let ck = layer.patch_len();
    let g = grad_out.data();

    for (b, row) in grad_b.iter_mut().zip(g.chunks_exact(positions)) {
        *b += row.iter().map(|&x| x as f64).sum::<f64>() as f32;
    }

    with_scratch(&COL, ck * positions, |col| {
        im2col(input, layer.kernel(), out_dims, col);
        // dW[o, ck] += dY[o, p] · col[ck, p]^T
        gemm(
            o,
            positions,
            ck,
            MatRef::row_major(g, positions),
            MatRef::transposed(col, positions),
            1.0,
            grad_w,
        );
    });

    if let Some(dst) = grad_input {
        with_scratch(&DCOL, ck * positions, |dcol| {
            // dcol[ck, p] = W[o, ck]^T · dY[o, p]
            gemm(
                ck,
                o,
                positions,
                MatRef::transposed(layer.weights.data(), ck),
                MatRef::row_major(g, positions),
                0.0,
                dcol,
            );
            col2im_add(dcol, input.dims(), layer.kernel(), out_dims, dst);
        });
    }
    Ok(())
}
