use crate::error::{Error, Result};
use crate::tensor::{Shape, Tensor};

/// Non-overlapping `M x M x M` max pooling with stride `M`. Trailing voxels
/// that do not fill a whole block are dropped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MaxPool3d {
    pub block: usize,
}

/// Winning input offset for every output voxel, recorded by the forward pass.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoolIndices {
    input_shape: Shape,
    output_shape: Shape,
    argmax: Vec<usize>,
}

impl PoolIndices {
    pub fn input_shape(&self) -> &Shape {
        &self.input_shape
    }

    pub fn output_shape(&self) -> &Shape {
        &self.output_shape
    }

    pub fn argmax(&self) -> &[usize] {
        &self.argmax
    }
}

impl MaxPool3d {
    pub fn new(block: usize) -> Result<Self> {
        if block == 0 {
            return Err(Error::InvalidArgument("pool block must be at least 1".into()));
        }
        Ok(MaxPool3d { block })
    }

    pub fn output_dims(&self, input: &[usize]) -> Result<[usize; 4]> {
        if input.len() != 4 {
            return Err(Error::ShapeMismatch(format!("pool input must be (C,D,H,W), got {input:?}")));
        }
        let m = self.block;
        if input[1..].iter().any(|&e| e < m) {
            return Err(Error::ShapeMismatch(format!(
                "pool block {m} larger than input extents {:?}",
                &input[1..]
            )));
        }
        Ok([input[0], input[1] / m, input[2] / m, input[3] / m])
    }

    /// Block maxima; ties go to the first voxel in `(z, y, x)` scan order.
    pub fn forward(&self, input: &Tensor) -> Result<(Tensor, PoolIndices)> {
        let out_dims = self.output_dims(input.dims())?;
        let [c, d, h, w] = [input.dims()[0], input.dims()[1], input.dims()[2], input.dims()[3]];
        let [_, od, oh, ow] = out_dims;
        let m = self.block;
        let x = input.data();
        let n_out = out_dims.iter().product();
        let mut out = Vec::with_capacity(n_out);
        let mut argmax = Vec::with_capacity(n_out);
        for ch in 0..c {
            let base = ch * d * h * w;
            for oz in 0..od {
                for oy in 0..oh {
                    for ox in 0..ow {
                        let mut best = f32::NEG_INFINITY;
                        let mut best_i = usize::MAX;
                        for dz in 0..m {
                            for dy in 0..m {
                                let row = base + ((oz * m + dz) * h + oy * m + dy) * w + ox * m;
                                for dx in 0..m {
                                    let v = x[row + dx];
                                    if best_i == usize::MAX || v > best {
                                        best = v;
                                        best_i = row + dx;
                                    }
                                }
                            }
                        }
                        out.push(best);
                        argmax.push(best_i);
                    }
                }
            }
        }
        let output_shape = Shape::new(&out_dims)?;
        Ok((
            Tensor::from_parts(output_shape.clone(), out),
            PoolIndices { input_shape: input.shape().clone(), output_shape, argmax },
        ))
    }
}

pub fn maxpool3d_forward(layer: &MaxPool3d, input: &Tensor) -> Result<(Tensor, PoolIndices)> {
    layer.forward(input)
}

/// Routes each output gradient to the input voxel that won its block.
pub fn maxpool3d_backward(indices: &PoolIndices, grad_out: &Tensor) -> Result<Tensor> {
    if grad_out.shape() != &indices.output_shape {
        return Err(Error::ShapeMismatch(format!(
            "pool gradient {} does not match recorded output {}",
            grad_out.shape(),
            indices.output_shape
        )));
    }
    let mut gx = vec![0.0f32; indices.input_shape.len()];
    for (&i, &g) in indices.argmax.iter().zip(grad_out.data()) {
        gx[i] += g;
    }
    Ok(Tensor::from_parts(indices.input_shape.clone(), gx))
}
