//! Pre-crime behavior video classification toolkit.
//!
//! * [`tensor`]: dense `f32` tensors, GEMM and seeded random streams.
//! * [`nn`]: the 3D CNN, its backward passes, Adam and checkpoints.
//! * [`pcb`]: video containers, PCB segmentation, clip extraction, manifests
//!   and a synthetic dataset generator.
//! * [`harness`]: training approaches, balanced accuracy and the repeated-run
//!   experiment grid.
//! * [`stats`]: t-tests and report tables.

pub mod harness;
pub mod nn;
pub mod pcb;
pub mod stats;
pub mod tensor;

pub use harness::{Approach, ConfusionMatrix, ExperimentResult, LabelScheme, RunResult};
pub use nn::{FilterPair, Geometry, Network};
pub use pcb::{ClassLabel, PcbAnnotation, PcbSegments, VideoSample};
pub use tensor::{RngStream, Shape, Tensor};
