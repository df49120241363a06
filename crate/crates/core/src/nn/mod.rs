//! The two-conv / two-pool / two-dense 3D CNN with hand-written backward
//! passes, the Adam optimizer, and the binary checkpoint format.

mod activation;
mod checkpoint;
mod conv;
mod dense;
mod loss;
mod network;
mod optim;
mod pool;

pub use activation::{relu_backward, relu_forward};
pub use checkpoint::{read_checkpoint, write_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use conv::{
    conv3d_backward, conv3d_forward, conv3d_forward_with, conv_output_dims, Conv3dGrads,
    Conv3dLayer, ConvAlgo,
};
pub use dense::{dense_backward, dense_forward, DenseGrads, DenseLayer};
pub use loss::softmax_cross_entropy;
pub use network::{
    init_network, FilterPair, ForwardCache, Geometry, Gradients, Network, DEFAULT_HIDDEN_WIDTH,
    KERNEL_EXTENT, STANDARD_FILTER_PAIRS, POOL_EXTENT,
};
pub use optim::{adam_step, AdamConfig, AdamState};
pub use pool::{maxpool3d_backward, maxpool3d_forward, MaxPool3dLayer, PoolIndices};

use crate::tensor::TensorError;

#[derive(Debug, thiserror::Error)]
pub enum NnError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("{what}: expected shape {expected:?}, got {got:?}")]
    ShapeMismatch { what: &'static str, expected: Vec<usize>, got: Vec<usize> },
    #[error("input has {got} channels, layer expects {expected}")]
    ChannelMismatch { expected: usize, got: usize },
    #[error("window/kernel {kernel:?} larger than input extents {input:?}")]
    WindowTooLarge { kernel: Vec<usize>, input: Vec<usize> },
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("need at least 2 classes, got {0}")]
    TooFewClasses(usize),
    #[error("input geometry {0:?} collapses to zero extent before the dense layers")]
    GeometryCollapse(Vec<usize>),
    #[error("invalid filter pair: {0}")]
    FilterPair(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, NnError>;

pub(crate) fn expect_dims(what: &'static str, got: &[usize], expected: &[usize]) -> Result<()> {
    if got != expected {
        return Err(NnError::ShapeMismatch {
            what,
            expected: expected.to_vec(),
            got: got.to_vec(),
        });
    }
    Ok(())
}
