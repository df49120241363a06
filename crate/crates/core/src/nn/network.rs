use std::fmt;
use std::str::FromStr;

use super::activation::{relu_in_place, relu_mask_in_place};
use super::conv::{conv3d_backward_into, conv3d_forward};
use super::dense::{dense_backward_into, dense_forward};
use super::pool::{maxpool3d_backward, maxpool3d_forward, PoolIndices};
use super::{conv_output_dims, expect_dims, Conv3dLayer, DenseLayer, MaxPool3dLayer, NnError, Result};
use crate::tensor::{RngStream, Tensor};

/// Cubic kernel extent of both convolution layers.
pub const KERNEL_EXTENT: usize = 3;
/// Cubic window extent of both pooling layers.
pub const POOL_EXTENT: usize = 2;
pub const DEFAULT_HIDDEN_WIDTH: usize = 128;

/// Output-channel counts of the two convolution layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FilterPair {
    pub conv1: usize,
    pub conv2: usize,
}

/// The six filter configurations of the experiment grid, in report order.
pub const STANDARD_FILTER_PAIRS: [FilterPair; 6] = [
    FilterPair::new(16, 16),
    FilterPair::new(32, 32),
    FilterPair::new(32, 64),
    FilterPair::new(64, 64),
    FilterPair::new(64, 128),
    FilterPair::new(128, 32),
];

impl FilterPair {
    pub const fn new(conv1: usize, conv2: usize) -> Self {
        FilterPair { conv1, conv2 }
    }

    /// Position in [`STANDARD_FILTER_PAIRS`], if this is one of them.
    pub fn standard_rank(&self) -> Option<usize> {
        STANDARD_FILTER_PAIRS.iter().position(|p| p == self)
    }

    /// `"16 - 16"` style label used in report tables.
    pub fn table_label(&self) -> String {
        format!("{} - {}", self.conv1, self.conv2)
    }
}

impl fmt::Display for FilterPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.conv1, self.conv2)
    }
}

impl FromStr for FilterPair {
    type Err = NnError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || NnError::FilterPair(format!("{s:?} (expected e.g. \"16-16\")"));
        let (a, b) = s.split_once('-').ok_or_else(bad)?;
        let conv1: usize = a.trim().parse().map_err(|_| bad())?;
        let conv2: usize = b.trim().parse().map_err(|_| bad())?;
        if conv1 == 0 || conv2 == 0 {
            return Err(bad());
        }
        Ok(FilterPair { conv1, conv2 })
    }
}

impl serde::Serialize for FilterPair {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for FilterPair {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Clip geometry `[channels, frames, height, width]` the network accepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct Geometry {
    pub channels: usize,
    pub frames: usize,
    pub height: usize,
    pub width: usize,
}

impl Default for Geometry {
    fn default() -> Self {
        Geometry { channels: 1, frames: 16, height: 60, width: 80 }
    }
}

impl Geometry {
    pub fn dims(&self) -> [usize; 4] {
        [self.channels, self.frames, self.height, self.width]
    }

    /// Spatio-temporal extents after conv1, pool1, conv2 and pool2.
    pub fn stage_extents(&self) -> Result<[[usize; 3]; 4]> {
        let collapse = || NnError::GeometryCollapse(self.dims().to_vec());
        let conv = |e: [usize; 3]| -> Option<[usize; 3]> {
            let mut out = [0; 3];
            for (o, x) in out.iter_mut().zip(e) {
                *o = x.checked_sub(KERNEL_EXTENT - 1).filter(|&v| v >= 1)?;
            }
            Some(out)
        };
        let pool = |e: [usize; 3]| -> Option<[usize; 3]> {
            let out = e.map(|x| x / POOL_EXTENT);
            out.iter().all(|&v| v >= 1).then_some(out)
        };
        if self.channels == 0 {
            return Err(collapse());
        }
        let c1 = conv([self.frames, self.height, self.width]).ok_or_else(collapse)?;
        let p1 = pool(c1).ok_or_else(collapse)?;
        let c2 = conv(p1).ok_or_else(collapse)?;
        let p2 = pool(c2).ok_or_else(collapse)?;
        Ok([c1, p1, c2, p2])
    }

    /// Length of the flattened feature vector entering the hidden dense layer.
    pub fn flatten_len(&self, pair: FilterPair) -> Result<usize> {
        let [_, _, _, [t, h, w]] = self.stage_extents()?;
        Ok(pair.conv2 * t * h * w)
    }
}

/// conv1 → relu → pool1 → conv2 → relu → pool2 → flatten → dense → relu → dense.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub pair: FilterPair,
    pub geometry: Geometry,
    pub num_classes: usize,
    pub conv1: Conv3dLayer,
    pub pool1: MaxPool3dLayer,
    pub conv2: Conv3dLayer,
    pub pool2: MaxPool3dLayer,
    pub dense_hidden: DenseLayer,
    pub dense_out: DenseLayer,
}

/// Intermediate activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pool1_idx: PoolIndices,
    pool1_out: Tensor,
    pool2_idx: PoolIndices,
    features: Tensor,
    hidden_pre: Tensor,
    hidden: Tensor,
}

/// Parameter gradients in [`Network::parameters`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    tensors: Vec<Tensor>,
}

impl Gradients {
    pub fn zeros_like(net: &Network) -> Result<Self> {
        let tensors = net
            .parameters()
            .iter()
            .map(|p| Tensor::zeros(p.dims()))
            .collect::<std::result::Result<_, _>>()?;
        Ok(Gradients { tensors })
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn refs(&self) -> Vec<&Tensor> {
        self.tensors.iter().collect()
    }

    pub fn zero(&mut self) {
        for t in &mut self.tensors {
            t.fill(0.0);
        }
    }

    pub fn scale(&mut self, factor: f32) {
        for t in &mut self.tensors {
            for v in t.data_mut() {
                *v *= factor;
            }
        }
    }
}

fn he_uniform(dims: &[usize], fan_in: usize, rng: &mut RngStream) -> Result<Tensor> {
    let bound = (6.0 / fan_in as f64).sqrt() as f32;
    Ok(Tensor::random_uniform(dims, -bound, bound, rng)?)
}

/// Builds a network with He-uniform weights and zero biases.
pub fn init_network(pair: FilterPair, num_classes: usize, geometry: Geometry, rng: &mut RngStream) -> Result<Network> {
    Network::init(pair, num_classes, geometry, DEFAULT_HIDDEN_WIDTH, rng)
}

impl Network {
    pub fn init(
        pair: FilterPair,
        num_classes: usize,
        geometry: Geometry,
        hidden_width: usize,
        rng: &mut RngStream,
    ) -> Result<Network> {
        if num_classes < 2 {
            return Err(NnError::TooFewClasses(num_classes));
        }
        if pair.conv1 == 0 || pair.conv2 == 0 || hidden_width == 0 {
            return Err(NnError::FilterPair(format!("{pair} / hidden {hidden_width}")));
        }
        let flat = geometry.flatten_len(pair)?;
        let k = KERNEL_EXTENT;
        let k3 = k * k * k;
        let c = geometry.channels;
        let conv1 = Conv3dLayer::new(
            he_uniform(&[pair.conv1, c, k, k, k], c * k3, rng)?,
            Tensor::zeros(&[pair.conv1])?,
        )?;
        let conv2 = Conv3dLayer::new(
            he_uniform(&[pair.conv2, pair.conv1, k, k, k], pair.conv1 * k3, rng)?,
            Tensor::zeros(&[pair.conv2])?,
        )?;
        let dense_hidden = DenseLayer::new(
            he_uniform(&[flat, hidden_width], flat, rng)?,
            Tensor::zeros(&[hidden_width])?,
        )?;
        let dense_out = DenseLayer::new(
            he_uniform(&[hidden_width, num_classes], hidden_width, rng)?,
            Tensor::zeros(&[num_classes])?,
        )?;
        let pool = MaxPool3dLayer::new([POOL_EXTENT; 3]);
        Ok(Network {
            pair,
            geometry,
            num_classes,
            conv1,
            pool1: pool,
            conv2,
            pool2: pool,
            dense_hidden,
            dense_out,
        })
    }

    pub fn hidden_width(&self) -> usize {
        self.dense_hidden.out_features()
    }

    /// conv1.w, conv1.b, conv2.w, conv2.b, hidden.w, hidden.b, out.w, out.b
    pub fn parameters(&self) -> [&Tensor; 8] {
        [
            &self.conv1.weights,
            &self.conv1.bias,
            &self.conv2.weights,
            &self.conv2.bias,
            &self.dense_hidden.weights,
            &self.dense_hidden.bias,
            &self.dense_out.weights,
            &self.dense_out.bias,
        ]
    }

    pub fn parameters_mut(&mut self) -> [&mut Tensor; 8] {
        [
            &mut self.conv1.weights,
            &mut self.conv1.bias,
            &mut self.conv2.weights,
            &mut self.conv2.bias,
            &mut self.dense_hidden.weights,
            &mut self.dense_hidden.bias,
            &mut self.dense_out.weights,
            &mut self.dense_out.bias,
        ]
    }

    pub fn parameter_count(&self) -> usize {
        self.parameters().iter().map(|p| p.numel()).sum()
    }

    pub fn forward(&self, clip: &Tensor) -> Result<Tensor> {
        Ok(self.forward_cached(clip)?.0)
    }

    pub fn forward_cached(&self, clip: &Tensor) -> Result<(Tensor, ForwardCache)> {
        expect_dims("clip geometry", clip.dims(), &self.geometry.dims())?;
        // Pool before relu: relu(max(w)) == max(relu(w)), and windows whose
        // maximum is non-positive get a zero gradient either way.
        let (mut pool1_out, pool1_idx) = maxpool3d_forward(&conv3d_forward(clip, &self.conv1)?, &self.pool1)?;
        relu_in_place(pool1_out.data_mut());
        let (mut pooled, pool2_idx) = maxpool3d_forward(&conv3d_forward(&pool1_out, &self.conv2)?, &self.pool2)?;
        relu_in_place(pooled.data_mut());
        let expected = self.geometry.flatten_len(self.pair)?;
        assert_eq!(pooled.numel(), expected, "flattened feature length disagrees with geometry");
        let features = pooled.into_reshape(&[expected])?;
        let hidden_pre = dense_forward(&features, &self.dense_hidden)?;
        let mut hidden = hidden_pre.clone();
        relu_in_place(hidden.data_mut());
        let logits = dense_forward(&hidden, &self.dense_out)?;
        let cache = ForwardCache {
            pool1_idx,
            pool1_out,
            pool2_idx,
            features,
            hidden_pre,
            hidden,
        };
        Ok((logits, cache))
    }

    /// Adds this sample's parameter gradients into `grads`.
    pub fn backward(&self, clip: &Tensor, cache: &ForwardCache, grad_logits: &Tensor, grads: &mut Gradients) -> Result<()> {
        expect_dims("grad_logits", grad_logits.dims(), &[self.num_classes])?;
        let [g_c1w, g_c1b, g_c2w, g_c2b, g_hw, g_hb, g_ow, g_ob] = &mut grads.tensors[..] else {
            unreachable!("gradient set has 8 tensors")
        };

        let mut g_hidden = Tensor::zeros(&[self.hidden_width()])?;
        dense_backward_into(
            &cache.hidden,
            &self.dense_out,
            grad_logits,
            g_ow.data_mut(),
            g_ob.data_mut(),
            g_hidden.data_mut(),
        )?;
        relu_mask_in_place(cache.hidden_pre.data(), g_hidden.data_mut());

        let mut g_features = Tensor::zeros(cache.features.dims())?;
        dense_backward_into(
            &cache.features,
            &self.dense_hidden,
            &g_hidden,
            g_hw.data_mut(),
            g_hb.data_mut(),
            g_features.data_mut(),
        )?;
        relu_mask_in_place(cache.features.data(), g_features.data_mut());
        let g_pool2 = g_features.into_reshape(cache.pool2_idx.output_dims())?;
        let g_conv2 = maxpool3d_backward(&cache.pool2_idx, &g_pool2)?;

        let mut g_pool1 = Tensor::zeros(cache.pool1_out.dims())?;
        conv3d_backward_into(
            &cache.pool1_out,
            &self.conv2,
            &g_conv2,
            g_c2w.data_mut(),
            g_c2b.data_mut(),
            Some(g_pool1.data_mut()),
        )?;
        relu_mask_in_place(cache.pool1_out.data(), g_pool1.data_mut());
        let g_conv1 = maxpool3d_backward(&cache.pool1_idx, &g_pool1)?;
        conv3d_backward_into(clip, &self.conv1, &g_conv1, g_c1w.data_mut(), g_c1b.data_mut(), None)?;
        Ok(())
    }

    /// Output extents of conv1 for this network's geometry.
    pub fn conv1_output_dims(&self) -> Result<[usize; 4]> {
        conv_output_dims(&self.geometry.dims(), &self.conv1)
    }
}
