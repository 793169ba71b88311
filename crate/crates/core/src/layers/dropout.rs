use rand::Rng;
use serde::{Deserialize, Serialize};

use super::activation::{SELU_ALPHA, SELU_LAMBDA};
use super::Mode;
use crate::error::{Error, Result};
use crate::seed;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DropoutKind {
    /// Inverted dropout: survivors scaled by `1/(1-p)` at train time.
    Standard,
    /// Dropped units pinned to the SELU saturation value, followed by the
    /// affine correction that keeps zero mean and unit variance.
    Alpha,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DropoutSpec {
    pub kind: DropoutKind,
    pub p: f32,
}

impl DropoutSpec {
    pub fn new(kind: DropoutKind, p: f32) -> Result<Self> {
        let spec = DropoutSpec { kind, p };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.p) {
            return Err(Error::InvalidArgument(format!("dropout probability {} outside [0, 1)", self.p)));
        }
        Ok(())
    }

    /// `(a, b)` of the alpha-dropout affine correction.
    pub fn alpha_coefficients(&self) -> (f32, f32) {
        let p = self.p as f64;
        let q = 1.0 - p;
        let alpha_prime = -(SELU_LAMBDA as f64) * (SELU_ALPHA as f64);
        let a = (q + alpha_prime * alpha_prime * p * q).powf(-0.5);
        let b = -a * p * alpha_prime;
        (a as f32, b as f32)
    }

    /// Applies the mask in place and returns the trace needed for backprop.
    pub(crate) fn apply_in_place(&self, xs: &mut [f32], rng: &mut impl Rng) -> DropoutTrace {
        let keep: Vec<bool> = xs.iter().map(|_| rng.gen::<f32>() >= self.p).collect();
        let scale = match self.kind {
            DropoutKind::Standard => {
                let s = 1.0 / (1.0 - self.p);
                for (x, &k) in xs.iter_mut().zip(&keep) {
                    *x = if k { *x * s } else { 0.0 };
                }
                s
            }
            DropoutKind::Alpha => {
                let (a, b) = self.alpha_coefficients();
                let sat = -SELU_LAMBDA * SELU_ALPHA;
                for (x, &k) in xs.iter_mut().zip(&keep) {
                    *x = a * if k { *x } else { sat } + b;
                }
                a
            }
        };
        DropoutTrace { keep, scale }
    }
}

/// Which units survived, and the derivative applied to survivors.
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutTrace {
    pub keep: Vec<bool>,
    pub scale: f32,
}

impl DropoutTrace {
    pub fn backward_in_place(&self, grad: &mut [f32]) {
        for (g, &k) in grad.iter_mut().zip(&self.keep) {
            *g = if k { *g * self.scale } else { 0.0 };
        }
    }
}

pub fn dropout_apply(spec: &DropoutSpec, input: &Tensor, mode: Mode, rng_seed: u64) -> Result<Tensor> {
    spec.validate()?;
    if mode == Mode::Infer || spec.p == 0.0 {
        return Ok(input.clone());
    }
    let mut data = input.data().to_vec();
    spec.apply_in_place(&mut data, &mut seed::rng(rng_seed));
    Tensor::from_vec(input.dims(), data)
}

/// Gradient of [`dropout_apply`] with the same seed: the mask depends only on
/// the seed and the element count, so it is regenerated here.
pub fn dropout_backward(spec: &DropoutSpec, grad_out: &Tensor, mode: Mode, rng_seed: u64) -> Result<Tensor> {
    spec.validate()?;
    if mode == Mode::Infer || spec.p == 0.0 {
        return Ok(grad_out.clone());
    }
    let mut scratch = vec![0.0f32; grad_out.len()];
    let trace = spec.apply_in_place(&mut scratch, &mut seed::rng(rng_seed));
    let mut g = grad_out.data().to_vec();
    trace.backward_in_place(&mut g);
    Tensor::from_vec(grad_out.dims(), g)
}
