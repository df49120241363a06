//! Fixtures shared by the criterion benches.

use pcb_core::nn::{Conv3dLayer, KERNEL_EXTENT};
use pcb_core::{FilterPair, Geometry, Network, RngStream, Tensor};

/// A clip of the default geometry with values in `[-1, 1]`.
pub fn clip(seed: u64) -> Tensor {
    let g = Geometry::default();
    Tensor::random_uniform(&g.dims(), -1.0, 1.0, &mut RngStream::new(seed)).expect("valid dims")
}

pub fn network(pair: FilterPair, classes: usize, seed: u64) -> Network {
    Network::init(pair, classes, Geometry::default(), 128, &mut RngStream::new(seed)).expect("valid network")
}

/// Random `[c, t, h, w]` input and a 3×3×3 layer mapping `c` to `out` channels.
pub fn conv_case(c: usize, out: usize, t: usize, h: usize, w: usize, seed: u64) -> (Tensor, Conv3dLayer) {
    let mut rng = RngStream::new(seed);
    let k = KERNEL_EXTENT;
    let bound = (6.0 / (c * k * k * k) as f32).sqrt();
    let x = Tensor::random_uniform(&[c, t, h, w], -1.0, 1.0, &mut rng).expect("valid dims");
    let wt = Tensor::random_uniform(&[out, c, k, k, k], -bound, bound, &mut rng).expect("valid dims");
    let b = Tensor::zeros(&[out]).expect("valid dims");
    (x, Conv3dLayer::new(wt, b).expect("matching shapes"))
}
