use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layers::softmax_backward;
use crate::tensor::Tensor;

/// Probabilities are clamped to this floor before taking a logarithm.
pub const PROB_FLOOR: f32 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    CrossEntropy,
    Logcosh,
}

impl LossKind {
    /// Short tag used in result tables: `x-e` or `lc`.
    pub fn short(self) -> &'static str {
        match self {
            LossKind::CrossEntropy => "x-e",
            LossKind::Logcosh => "lc",
        }
    }
}

impl std::fmt::Display for LossKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LossKind::CrossEntropy => "cross_entropy",
            LossKind::Logcosh => "logcosh",
        })
    }
}

impl std::str::FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cross_entropy" | "cross-entropy" | "crossentropy" | "x-e" | "xe" => Ok(LossKind::CrossEntropy),
            "logcosh" | "log_cosh" | "lc" => Ok(LossKind::Logcosh),
            other => Err(Error::Parse(format!("unknown loss '{other}'"))),
        }
    }
}

/// How per-class weights are derived from class counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassWeighting {
    /// `N / (classes * N_c)`: minority classes weigh more.
    Inverse,
    /// `classes * N_c / N`: weights follow the class proportions.
    Proportional,
    /// All ones.
    Uniform,
}

impl std::str::FromStr for ClassWeighting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inverse" => Ok(ClassWeighting::Inverse),
            "proportional" | "proportion" => Ok(ClassWeighting::Proportional),
            "uniform" | "none" => Ok(ClassWeighting::Uniform),
            other => Err(Error::Parse(format!("unknown class weighting '{other}'"))),
        }
    }
}

/// Per-class weights with mean 1.
pub fn class_weights(counts: &[usize], scheme: ClassWeighting) -> Result<Vec<f32>> {
    if counts.is_empty() {
        return Err(Error::Empty("no classes".into()));
    }
    if let Some(c) = counts.iter().position(|&n| n == 0) {
        return Err(Error::Empty(format!("class {c} has no samples")));
    }
    let total: usize = counts.iter().sum();
    let k = counts.len() as f64;
    Ok(counts
        .iter()
        .map(|&n| {
            let w = match scheme {
                ClassWeighting::Inverse => total as f64 / (k * n as f64),
                ClassWeighting::Proportional => k * n as f64 / total as f64,
                ClassWeighting::Uniform => 1.0,
            };
            w as f32
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossOutput {
    /// Batch-mean loss.
    pub loss: f64,
    /// `dL/dlogits`, row-major `(N, classes)`.
    pub grad_logits: Vec<f32>,
    /// Number of probabilities raised to [`PROB_FLOOR`] before the log.
    pub clamped: usize,
}

/// Loss of one sample (not divided by the batch size) and its gradient with
/// respect to the logits.
pub(crate) fn sample_loss(kind: LossKind, probs: &[f32], label: usize, weight: f32) -> (f64, Vec<f32>, bool) {
    let p_true = probs[label];
    match kind {
        LossKind::CrossEntropy => {
            let clamped = p_true < PROB_FLOOR;
            let loss = -(weight as f64) * (p_true.max(PROB_FLOOR) as f64).ln();
            let grad = probs
                .iter()
                .enumerate()
                .map(|(c, &p)| weight * (p - if c == label { 1.0 } else { 0.0 }))
                .collect();
            (loss, grad, clamped)
        }
        LossKind::Logcosh => {
            let r = p_true as f64 - 1.0;
            let loss = weight as f64 * r.cosh().ln();
            let mut grad_p = vec![0.0f32; probs.len()];
            grad_p[label] = (weight as f64 * r.tanh()) as f32;
            (loss, softmax_backward(probs, &grad_p), false)
        }
    }
}

/// Batch-mean weighted loss over softmax outputs `probs` of shape
/// `(N, classes)`, with the gradient taken through the softmax.
///
/// * cross entropy: `-(1/N) sum_i w_{y_i} log p_{i, y_i}`
/// * log-cosh: `(1/N) sum_i w_{y_i} log cosh(p_{i, y_i} - 1)`
pub fn loss_and_grad(kind: LossKind, probs: &Tensor, labels: &[usize], weights: &[f32]) -> Result<LossOutput> {
    let dims = probs.dims();
    if dims.len() != 2 {
        return Err(Error::ShapeMismatch(format!("probabilities must be (N, classes), got {}", probs.shape())));
    }
    let (n, k) = (dims[0], dims[1]);
    if labels.len() != n {
        return Err(Error::ShapeMismatch(format!("{} labels for {n} rows", labels.len())));
    }
    if weights.len() != k {
        return Err(Error::ShapeMismatch(format!("{} class weights for {k} classes", weights.len())));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
        return Err(Error::InvalidArgument(format!("label {bad} outside 0..{k}")));
    }
    let mut total = 0.0f64;
    let mut grad = Vec::with_capacity(n * k);
    let mut clamped = 0;
    let inv_n = 1.0 / n as f32;
    for (i, &label) in labels.iter().enumerate() {
        let row = probs.outer(i);
        let sum: f64 = row.iter().map(|&p| p as f64).sum();
        if (sum - 1.0).abs() > 1e-4 || row.iter().any(|&p| p < 0.0) {
            return Err(Error::InvalidArgument(format!("row {i} is not a probability vector (sum {sum})")));
        }
        let (l, g, c) = sample_loss(kind, row, label, weights[label]);
        total += l;
        clamped += c as usize;
        grad.extend(g.into_iter().map(|v| v * inv_n));
    }
    Ok(LossOutput { loss: total / n as f64, grad_logits: grad, clamped })
}
