//! Dense `f32` tensors of rank 1 to 5.
//!
//! Storage is row-major with the last axis fastest. Activations use the
//! channel-major layout `(C, D, H, W)`; batches prepend `N`. The common
//! `H x W x D x C` notation for volumes maps onto this layout only at the I/O
//! boundary (see [`crate::io::nvol`]).

use crate::error::{Error, Result};

pub const MAX_RANK: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct Shape(Vec<usize>);

impl Shape {
    pub fn new(dims: &[usize]) -> Result<Self> {
        if dims.is_empty() || dims.len() > MAX_RANK {
            return Err(Error::InvalidShape(format!(
                "rank {} outside 1..={MAX_RANK}",
                dims.len()
            )));
        }
        if let Some(pos) = dims.iter().position(|&d| d == 0) {
            return Err(Error::InvalidShape(format!("extent {pos} of {dims:?} is zero")));
        }
        Ok(Shape(dims.to_vec()))
    }

    pub fn dims(&self) -> &[usize] {
        &self.0
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    pub fn len(&self) -> usize {
        self.0.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl std::fmt::Display for Shape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|d| d.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reduction {
    Sum,
    Mean,
    Max,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Shape,
    data: Vec<f32>,
}

impl Tensor {
    pub fn full(dims: &[usize], fill: f32) -> Result<Self> {
        let shape = Shape::new(dims)?;
        if !fill.is_finite() {
            return Err(Error::NonFinite(format!("fill value {fill}")));
        }
        let data = vec![fill; shape.len()];
        Ok(Tensor { shape, data })
    }

    pub fn zeros(dims: &[usize]) -> Result<Self> {
        Self::full(dims, 0.0)
    }

    pub fn from_vec(dims: &[usize], data: Vec<f32>) -> Result<Self> {
        let shape = Shape::new(dims)?;
        if data.len() != shape.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} values for shape {shape}",
                data.len()
            )));
        }
        check_finite(&data, "tensor data")?;
        Ok(Tensor { shape, data })
    }

    /// Builds a tensor without the finiteness scan. Callers inside the crate
    /// use this for buffers they have just computed and will check later.
    pub(crate) fn from_parts(shape: Shape, data: Vec<f32>) -> Self {
        debug_assert_eq!(shape.len(), data.len());
        Tensor { shape, data }
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn dims(&self) -> &[usize] {
        self.shape.dims()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn reshape(self, dims: &[usize]) -> Result<Self> {
        let shape = Shape::new(dims)?;
        if shape.len() != self.data.len() {
            return Err(Error::ShapeMismatch(format!(
                "cannot reshape {} into {shape}",
                self.shape
            )));
        }
        Ok(Tensor { shape, data: self.data })
    }

    /// Applies `f` elementwise. A non-finite result is an error.
    pub fn map(&self, f: impl Fn(f32) -> f32) -> Result<Self> {
        let data: Vec<f32> = self.data.iter().map(|&x| f(x)).collect();
        check_finite(&data, "mapped value")?;
        Ok(Tensor { shape: self.shape.clone(), data })
    }

    /// Reduction over all elements, accumulated in `f64`.
    pub fn reduce(&self, kind: Reduction) -> Result<f64> {
        if self.data.is_empty() {
            return Err(Error::Empty("reduction over empty tensor".into()));
        }
        Ok(match kind {
            Reduction::Sum => sum_f64(&self.data),
            Reduction::Mean => sum_f64(&self.data) / self.data.len() as f64,
            Reduction::Max => self.data.iter().fold(f32::NEG_INFINITY, |m, &x| m.max(x)) as f64,
        })
    }

    pub fn sum(&self) -> f64 {
        sum_f64(&self.data)
    }

    pub fn mean(&self) -> f64 {
        sum_f64(&self.data) / self.data.len() as f64
    }

    /// Slice of the `i`-th entry along the leading axis.
    pub fn outer(&self, i: usize) -> &[f32] {
        let stride = self.data.len() / self.dims()[0];
        &self.data[i * stride..(i + 1) * stride]
    }

    pub fn check_finite(&self, what: &str) -> Result<()> {
        check_finite(&self.data, what)
    }
}

pub(crate) fn sum_f64(xs: &[f32]) -> f64 {
    xs.iter().map(|&x| x as f64).sum()
}

pub(crate) fn check_finite(xs: &[f32], what: &str) -> Result<()> {
    match xs.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(Error::NonFinite(format!("{what} at index {i} is {}", xs[i]))),
        None => Ok(()),
    }
}

/// A single-channel scalar field of tracer uptake with `(D, H, W)` storage
/// (x = W fastest) and physical voxel spacing in `(x, y, z)` order.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume {
    tensor: Tensor,
    pub voxel_size: [f32; 3],
}

impl Volume {
    pub fn new(dims: [usize; 3], data: Vec<f32>) -> Result<Self> {
        Ok(Volume { tensor: Tensor::from_vec(&dims, data)?, voxel_size: [1.0; 3] })
    }

    pub fn filled(dims: [usize; 3], value: f32) -> Result<Self> {
        Ok(Volume { tensor: Tensor::full(&dims, value)?, voxel_size: [1.0; 3] })
    }

    pub fn from_tensor(tensor: Tensor) -> Result<Self> {
        let dims = tensor.dims();
        let tensor = match dims.len() {
            3 => tensor,
            4 if dims[0] == 1 => {
                let d = [dims[1], dims[2], dims[3]];
                tensor.reshape(&d)?
            }
            _ => {
                return Err(Error::ShapeMismatch(format!(
                    "volume needs a (D,H,W) or (1,D,H,W) tensor, got {}",
                    tensor.shape()
                )))
            }
        };
        Ok(Volume { tensor, voxel_size: [1.0; 3] })
    }

    pub(crate) fn from_parts(dims: [usize; 3], data: Vec<f32>) -> Self {
        Volume {
            tensor: Tensor::from_parts(Shape(dims.to_vec()), data),
            voxel_size: [1.0; 3],
        }
    }

    /// `(D, H, W)`.
    pub fn dims(&self) -> [usize; 3] {
        let d = self.tensor.dims();
        [d[0], d[1], d[2]]
    }

    pub fn len(&self) -> usize {
        self.tensor.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensor.is_empty()
    }

    pub fn data(&self) -> &[f32] {
        self.tensor.data()
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        self.tensor.data_mut()
    }

    pub fn tensor(&self) -> &Tensor {
        &self.tensor
    }

    pub fn into_tensor(self) -> Tensor {
        self.tensor
    }

    /// Voxel at depth `z`, row `y`, column `x`.
    pub fn get(&self, z: usize, y: usize, x: usize) -> f32 {
        let [_, h, w] = self.dims();
        self.tensor.data()[(z * h + y) * w + x]
    }

    pub fn index(&self, z: usize, y: usize, x: usize) -> usize {
        let [_, h, w] = self.dims();
        (z * h + y) * w + x
    }

    pub fn mean(&self) -> f64 {
        self.tensor.mean()
    }

    pub fn scaled(&self, k: f32) -> Result<Self> {
        Ok(Volume { tensor: self.tensor.map(|x| x * k)?, voxel_size: self.voxel_size })
    }
}
