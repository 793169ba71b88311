use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{check_finite, Tensor};

pub const SELU_ALPHA: f32 = 1.6733;
pub const SELU_LAMBDA: f32 = 1.0507;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivationKind {
    Relu,
    Selu,
    Softmax,
    Linear,
}

impl ActivationKind {
    /// Lower bound of the activation, `-lambda * alpha` for SELU.
    pub fn negative_saturation(self) -> f32 {
        match self {
            ActivationKind::Selu => -SELU_LAMBDA * SELU_ALPHA,
            _ => 0.0,
        }
    }
}

#[inline]
fn selu(z: f32) -> f32 {
    if z >= 0.0 {
        SELU_LAMBDA * z
    } else {
        SELU_LAMBDA * (SELU_ALPHA * z.exp() - SELU_ALPHA)
    }
}

/// In-place elementwise activation. Softmax treats the whole slice as one
/// vector of logits.
pub(crate) fn activate_in_place(kind: ActivationKind, xs: &mut [f32]) {
    match kind {
        ActivationKind::Linear => {}
        ActivationKind::Relu => xs.iter_mut().for_each(|x| *x = x.max(0.0)),
        ActivationKind::Selu => xs.iter_mut().for_each(|x| *x = selu(*x)),
        ActivationKind::Softmax => softmax_in_place(xs),
    }
}

/// Multiplies `grad` in place by the activation derivative at `z`.
/// Softmax is not elementwise and is rejected.
pub(crate) fn activation_grad_in_place(
    kind: ActivationKind,
    z: &[f32],
    grad: &mut [f32],
) -> Result<()> {
    match kind {
        ActivationKind::Linear => {}
        ActivationKind::Relu => grad.iter_mut().zip(z).for_each(|(g, &z)| {
            if z <= 0.0 {
                *g = 0.0
            }
        }),
        ActivationKind::Selu => grad.iter_mut().zip(z).for_each(|(g, &z)| {
            *g *= if z >= 0.0 { SELU_LAMBDA } else { SELU_LAMBDA * SELU_ALPHA * z.exp() }
        }),
        ActivationKind::Softmax => {
            return Err(Error::InvalidArgument(
                "softmax backward is fused with the loss; use softmax_backward on probabilities".into(),
            ))
        }
    }
    Ok(())
}

fn softmax_in_place(xs: &mut [f32]) {
    let max = xs.iter().fold(f32::NEG_INFINITY, |m, &x| m.max(x));
    let mut total = 0.0f64;
    for x in xs.iter_mut() {
        *x = (*x - max).exp();
        total += *x as f64;
    }
    for x in xs.iter_mut() {
        *x = (*x as f64 / total) as f32;
    }
}

pub fn softmax(logits: &[f32]) -> Vec<f32> {
    let mut out = logits.to_vec();
    softmax_in_place(&mut out);
    out
}

/// Vector-Jacobian product of softmax: given probabilities `p` and
/// `dL/dp`, returns `dL/dz = p * (g - <g, p>)`.
pub fn softmax_backward(probs: &[f32], grad_probs: &[f32]) -> Vec<f32> {
    let dot: f64 = probs.iter().zip(grad_probs).map(|(&p, &g)| p as f64 * g as f64).sum();
    probs.iter().zip(grad_probs).map(|(&p, &g)| (p as f64 * (g as f64 - dot)) as f32).collect()
}

pub fn activation_forward(kind: ActivationKind, z: &Tensor) -> Result<Tensor> {
    if kind == ActivationKind::Softmax && z.shape().rank() != 1 {
        return Err(Error::ShapeMismatch(format!(
            "softmax expects a vector of logits, got shape {}",
            z.shape()
        )));
    }
    let mut data = z.data().to_vec();
    activate_in_place(kind, &mut data);
    check_finite(&data, "activation output")?;
    Tensor::from_vec(z.dims(), data)
}

pub fn activation_backward(kind: ActivationKind, z: &Tensor, grad_out: &Tensor) -> Result<Tensor> {
    if z.shape() != grad_out.shape() {
        return Err(Error::ShapeMismatch(format!(
            "pre-activation {} vs gradient {}",
            z.shape(),
            grad_out.shape()
        )));
    }
    let mut grad = grad_out.data().to_vec();
    activation_grad_in_place(kind, z.data(), &mut grad)?;
    check_finite(&grad, "activation gradient")?;
    Tensor::from_vec(z.dims(), grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn vec1(xs: &[f32]) -> Tensor {
        Tensor::from_vec(&[xs.len()], xs.to_vec()).unwrap()
    }

    #[test]
    fn definitional_points() {
        let r = activation_forward(ActivationKind::Relu, &vec1(&[-1.0, 2.0])).unwrap();
        assert_eq!(r.data(), &[0.0, 2.0]);
        let s = activation_forward(ActivationKind::Selu, &vec1(&[0.0])).unwrap();
        assert_eq!(s.data(), &[0.0]);
    }

    #[test]
    fn selu_saturates_at_minus_lambda_alpha() {
        let s = activation_forward(ActivationKind::Selu, &vec1(&[-40.0])).unwrap();
        // 1.0507 * 1.6733 = 1.75813631
        assert_relative_eq!(s.data()[0], -1.758_136_3, epsilon = 1e-5);
        assert_relative_eq!(ActivationKind::Selu.negative_saturation(), -1.758_136_3, epsilon = 1e-6);
    }

    #[test]
    fn softmax_equal_logits() {
        let p = activation_forward(ActivationKind::Softmax, &vec1(&[0.3, 0.3])).unwrap();
        assert_eq!(p.data(), &[0.5, 0.5]);
        let big = activation_forward(ActivationKind::Softmax, &vec1(&[1000.0, 0.0, -1000.0])).unwrap();
        assert!((big.data().iter().sum::<f32>() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn softmax_rejects_non_vectors() {
        let t = Tensor::zeros(&[2, 2]).unwrap();
        assert!(activation_forward(ActivationKind::Softmax, &t).is_err());
        assert!(activation_backward(ActivationKind::Softmax, &vec1(&[0.0]), &vec1(&[1.0])).is_err());
    }

    #[test]
    fn backward_points() {
        let g = activation_backward(ActivationKind::Relu, &vec1(&[5.0, -5.0]), &vec1(&[0.7, 0.7])).unwrap();
        assert_eq!(g.data(), &[0.7, 0.0]);
        let g = activation_backward(ActivationKind::Selu, &vec1(&[1e-30]), &vec1(&[2.0])).unwrap();
        assert_eq!(g.data(), &[2.0 * SELU_LAMBDA]);
    }
}
