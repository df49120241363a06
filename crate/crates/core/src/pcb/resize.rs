use super::clips::{CLIP_HEIGHT, CLIP_WIDTH};
use super::{PcbError, Result};
use crate::tensor::{Tensor, TensorError};

/// Source coordinate and blend weight for each destination index, using
/// pixel-center alignment and edge clamping.
fn axis_taps(src: usize, dst: usize) -> Vec<(usize, usize, f32)> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|i| {
            let x = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (src - 1) as f64);
            let lo = x.floor() as usize;
            let hi = (lo + 1).min(src - 1);
            (lo, hi, (x - lo as f64) as f32)
        })
        .collect()
}

#[inline]
fn lerp(a: f32, b: f32, t: f32) -> f32 {
    // equal endpoints give `a` exactly, so constant regions stay constant
    a + t * (b - a)
}

/// Bilinear resampling of a `[ch, H, W]` frame to `[ch, out_h, out_w]`.
///
/// Output values are clamped to the input's `[min, max]` per channel.
pub fn resize_bilinear(frame: &Tensor, out_h: usize, out_w: usize) -> Result<Tensor> {
    let &[c, h, w] = frame.dims() else {
        return Err(TensorError::Rank { expected: 3, shape: frame.shape().clone() }.into());
    };
    if out_h == 0 || out_w == 0 {
        return Err(PcbError::EmptyFrame);
    }
    let rows = axis_taps(h, out_h);
    let cols = axis_taps(w, out_w);
    let x = frame.data();
    let mut out = Vec::with_capacity(c * out_h * out_w);
    for plane in x.chunks_exact(h * w) {
        let (lo, hi) = plane
            .iter()
            .fold((f32::INFINITY, f32::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        for &(y0, y1, fy) in &rows {
            let r0 = &plane[y0 * w..(y0 + 1) * w];
            let r1 = &plane[y1 * w..(y1 + 1) * w];
            for &(x0, x1, fx) in &cols {
                let top = lerp(r0[x0], r0[x1], fx);
                let bottom = lerp(r1[x0], r1[x1], fx);
                out.push(lerp(top, bottom, fy).clamp(lo, hi));
            }
        }
    }
    Ok(Tensor::from_vec(&[c, out_h, out_w], out)?)
}

/// Resamples a `[ch, H, W]` frame to the network's 60×80 input size.
pub fn resize_frame(frame: &Tensor) -> Result<Tensor> {
    resize_bilinear(frame, CLIP_HEIGHT, CLIP_WIDTH)
}
