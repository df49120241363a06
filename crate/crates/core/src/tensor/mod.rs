//! Dense row-major `f32` tensors.
//!
//! Layout is always row-major with the last axis fastest. Video data uses the
//! axis order `[channels, time, height, width]` everywhere in the crate.

mod gemm;
mod rng;

pub use gemm::{gemm, MatRef};
pub use rng::RngStream;

use std::fmt;

/// Maximum tensor rank supported.
pub const MAX_RANK: usize = 5;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TensorError {
    #[error("invalid shape {dims:?}: {reason}")]
    InvalidShape { dims: Vec<usize>, reason: &'static str },
    #[error("element count of shape {0:?} overflows usize")]
    Overflow(Vec<usize>),
    #[error("shape mismatch: {left} vs {right}")]
    ShapeMismatch { left: Shape, right: Shape },
    #[error("data length {len} does not match shape {shape} ({expected} elements)")]
    DataLength { len: usize, shape: Shape, expected: usize },
    #[error("matmul inner dimensions differ: {left} x {right}")]
    InnerDim { left: Shape, right: Shape },
    #[error("expected rank {expected}, got shape {shape}")]
    Rank { expected: usize, shape: Shape },
    #[error("invalid uniform range [{lo}, {hi})")]
    Range { lo: f32, hi: f32 },
}

pub type Result<T> = std::result::Result<T, TensorError>;

/// Ordered list of positive extents, rank 1 to 5.
#[derive(Debug, Clone, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Shape(Vec<usize>);

impl Shape {
    pub fn new(dims: &[usize]) -> Result<Self> {
        if dims.is_empty() || dims.len() > MAX_RANK {
            return Err(TensorError::InvalidShape {
                dims: dims.to_vec(),
                reason: "rank must be between 1 and 5",
            });
        }
        if dims.contains(&0) {
            return Err(TensorError::InvalidShape {
                dims: dims.to_vec(),
                reason: "every extent must be at least 1",
            });
        }
        dims.iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| TensorError::Overflow(dims.to_vec()))?;
        Ok(Shape(dims.to_vec()))
    }

    pub fn dims(&self) -> &[usize] {
        &self.0
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    pub fn numel(&self) -> usize {
        self.0.iter().product()
    }
}

impl TryFrom<Vec<usize>> for Shape {
    type Error = TensorError;

    fn try_from(dims: Vec<usize>) -> Result<Self> {
        Shape::new(&dims)
    }
}

impl From<Shape> for Vec<usize> {
    fn from(shape: Shape) -> Self {
        shape.0
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{d}")?;
        }
        write!(f, "]")
    }
}

/// Dense n-dimensional array of `f32`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Shape,
    data: Vec<f32>,
}

impl Tensor {
    pub fn zeros(dims: &[usize]) -> Result<Self> {
        Self::full(dims, 0.0)
    }

    pub fn full(dims: &[usize], value: f32) -> Result<Self> {
        let shape = Shape::new(dims)?;
        let data = vec![value; shape.numel()];
        Ok(Tensor { shape, data })
    }

    pub fn from_vec(dims: &[usize], data: Vec<f32>) -> Result<Self> {
        let shape = Shape::new(dims)?;
        if data.len() != shape.numel() {
            return Err(TensorError::DataLength {
                len: data.len(),
                expected: shape.numel(),
                shape,
            });
        }
        let t = Tensor { shape, data };
        t.debug_check_finite();
        Ok(t)
    }

    /// Square identity matrix.
    pub fn identity(n: usize) -> Result<Self> {
        let mut t = Self::zeros(&[n, n])?;
        for i in 0..n {
            t.data[i * n + i] = 1.0;
        }
        Ok(t)
    }

    /// Fills a tensor with values drawn uniformly from `[lo, hi)`.
    pub fn random_uniform(dims: &[usize], lo: f32, hi: f32, rng: &mut RngStream) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(TensorError::Range { lo, hi });
        }
        let shape = Shape::new(dims)?;
        let data = (0..shape.numel()).map(|_| rng.uniform_f32(lo, hi)).collect();
        Ok(Tensor { shape, data })
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn dims(&self) -> &[usize] {
        self.shape.dims()
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.data
    }

    pub fn reshape(&self, dims: &[usize]) -> Result<Tensor> {
        self.clone().into_reshape(dims)
    }

    pub fn into_reshape(self, dims: &[usize]) -> Result<Tensor> {
        let shape = Shape::new(dims)?;
        if shape.numel() != self.data.len() {
            return Err(TensorError::ShapeMismatch { left: self.shape, right: shape });
        }
        Ok(Tensor { shape, data: self.data })
    }

    pub fn map(&self, f: impl Fn(f32) -> f32) -> Tensor {
        let out = Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&x| f(x)).collect(),
        };
        out.debug_check_finite();
        out
    }

    pub fn zip_map(&self, other: &Tensor, f: impl Fn(f32, f32) -> f32) -> Result<Tensor> {
        self.require_same_shape(other)?;
        let out = Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        };
        out.debug_check_finite();
        Ok(out)
    }

    pub fn add(&self, other: &Tensor) -> Result<Tensor> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Tensor) -> Result<Tensor> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Tensor) -> Result<Tensor> {
        self.zip_map(other, |a, b| a * b)
    }

    pub fn scale(&self, factor: f32) -> Tensor {
        self.map(|x| x * factor)
    }

    /// `self += alpha * other`, in place.
    pub fn axpy(&mut self, alpha: f32, other: &Tensor) -> Result<()> {
        self.require_same_shape(other)?;
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
        Ok(())
    }

    pub fn fill(&mut self, value: f32) {
        self.data.fill(value);
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().map(|&x| x as f64).sum()
    }

    pub fn max_abs_diff(&self, other: &Tensor) -> Result<f32> {
        self.require_same_shape(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f32::max))
    }

    /// Rank-2 matrix product `[m, k] x [k, n] -> [m, n]`.
    pub fn matmul(&self, other: &Tensor) -> Result<Tensor> {
        let (m, k) = self.as_matrix()?;
        let (k2, n) = other.as_matrix()?;
        if k != k2 {
            return Err(TensorError::InnerDim {
                left: self.shape.clone(),
                right: other.shape.clone(),
            });
        }
        let mut out = Tensor::zeros(&[m, n])?;
        gemm(
            m,
            k,
            n,
            MatRef::row_major(&self.data, k),
            MatRef::row_major(&other.data, n),
            0.0,
            &mut out.data,
        );
        out.debug_check_finite();
        Ok(out)
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    fn as_matrix(&self) -> Result<(usize, usize)> {
        match self.dims() {
            &[m, n] => Ok((m, n)),
            _ => Err(TensorError::Rank { expected: 2, shape: self.shape.clone() }),
        }
    }

    fn require_same_shape(&self, other: &Tensor) -> Result<()> {
        if self.shape != other.shape {
            return Err(TensorError::ShapeMismatch {
                left: self.shape.clone(),
                right: other.shape.clone(),
            });
        }
        Ok(())
    }

    #[inline]
    pub(crate) fn debug_check_finite(&self) {
        debug_assert!(self.all_finite(), "non-finite value in tensor of shape {}", self.shape);
    }

    pub(crate) fn from_parts(shape: Shape, data: Vec<f32>) -> Tensor {
        debug_assert_eq!(shape.numel(), data.len());
        Tensor { shape, data }
    }
}
