use super::activation::{activate_in_place, activation_grad_in_place};
use super::ActivationKind;
use crate::error::{Error, Result};
use crate::tensor::{check_finite, Tensor};

/// Fully connected layer: `z_j = w_j . x + b_j`, then the activation.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    /// `(out, in)`.
    pub weights: Tensor,
    pub bias: Vec<f32>,
    pub activation: ActivationKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrads {
    pub input: Vec<f32>,
    pub weights: Tensor,
    pub bias: Vec<f32>,
}

impl Dense {
    pub fn new(weights: Tensor, bias: Vec<f32>, activation: ActivationKind) -> Result<Self> {
        if weights.shape().rank() != 2 {
            return Err(Error::InvalidShape(format!("dense weights must be (out,in), got {}", weights.shape())));
        }
        if bias.len() != weights.dims()[0] {
            return Err(Error::ShapeMismatch(format!(
                "{} biases for {} output units",
                bias.len(),
                weights.dims()[0]
            )));
        }
        Ok(Dense { weights, bias, activation })
    }

    pub fn out_units(&self) -> usize {
        self.weights.dims()[0]
    }

    pub fn in_units(&self) -> usize {
        self.weights.dims()[1]
    }

    fn check_input(&self, n: usize) -> Result<()> {
        if n != self.in_units() {
            return Err(Error::ShapeMismatch(format!(
                "dense layer expects {} inputs, got {n}",
                self.in_units()
            )));
        }
        Ok(())
    }

    pub(crate) fn linear(&self, x: &[f32]) -> Result<Vec<f32>> {
        self.check_input(x.len())?;
        let n_in = self.in_units();
        let w = self.weights.data();
        Ok((0..self.out_units())
            .map(|j| {
                let row = &w[j * n_in..(j + 1) * n_in];
                row.iter().zip(x).map(|(&a, &b)| a * b).sum::<f32>() + self.bias[j]
            })
            .collect())
    }

    pub fn forward(&self, x: &[f32]) -> Result<Vec<f32>> {
        let mut z = self.linear(x)?;
        activate_in_place(self.activation, &mut z);
        check_finite(&z, "dense output")?;
        Ok(z)
    }

    pub(crate) fn backward_linear(&self, x: &[f32], grad_z: &[f32]) -> Result<DenseGrads> {
        self.check_input(x.len())?;
        if grad_z.len() != self.out_units() {
            return Err(Error::ShapeMismatch(format!(
                "dense gradient has {} entries for {} units",
                grad_z.len(),
                self.out_units()
            )));
        }
        let n_in = self.in_units();
        let w = self.weights.data();
        let mut gx = vec![0.0f32; n_in];
        let mut gw = vec![0.0f32; w.len()];
        for (j, &g) in grad_z.iter().enumerate() {
            let row = &w[j * n_in..(j + 1) * n_in];
            let grow = &mut gw[j * n_in..(j + 1) * n_in];
            for i in 0..n_in {
                gx[i] += row[i] * g;
                grow[i] = x[i] * g;
            }
        }
        check_finite(&gx, "dense input gradient")?;
        check_finite(&gw, "dense weight gradient")?;
        Ok(DenseGrads {
            input: gx,
            weights: Tensor::from_parts(self.weights.shape().clone(), gw),
            bias: grad_z.to_vec(),
        })
    }

    pub fn backward(&self, x: &[f32], grad_out: &[f32]) -> Result<DenseGrads> {
        let mut grad = grad_out.to_vec();
        if self.activation != ActivationKind::Linear {
            let z = self.linear(x)?;
            if z.len() != grad.len() {
                return Err(Error::ShapeMismatch("dense gradient length".into()));
            }
            activation_grad_in_place(self.activation, &z, &mut grad)?;
        }
        self.backward_linear(x, &grad)
    }
}

fn as_vector(t: &Tensor) -> &[f32] {
    t.data()
}

pub fn dense_forward(layer: &Dense, input: &Tensor) -> Result<Tensor> {
    let y = layer.forward(as_vector(input))?;
    Tensor::from_vec(&[y.len()], y)
}

pub fn dense_backward(layer: &Dense, input: &Tensor, grad_out: &Tensor) -> Result<DenseGrads> {
    layer.backward(as_vector(input), grad_out.data())
}
