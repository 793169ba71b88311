use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::loss::{class_weights, sample_loss, ClassWeighting, LossKind};
use super::optim::{optimizer_step, OptimizerKind, OptimizerState};
use crate::error::{Error, Result};
use crate::layers::{softmax, Mode};
use crate::model::{Gradients, Model};
use crate::seed;
use crate::tensor::Tensor;
use crate::Label;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub loss: LossKind,
    pub learning_rate: f32,
    pub optimizer: OptimizerKind,
    /// Explicit per-class weights; derived from `weighting` when absent.
    pub class_weights: Option<Vec<f32>>,
    pub weighting: ClassWeighting,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 60,
            batch_size: 64,
            loss: LossKind::CrossEntropy,
            learning_rate: 1e-3,
            optimizer: OptimizerKind::adam(),
            class_weights: None,
            weighting: ClassWeighting::Inverse,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidArgument("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch size must be at least 1".into()));
        }
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::InvalidArgument(format!("learning rate {}", self.learning_rate)));
        }
        if let Some(w) = &self.class_weights {
            if w.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
                return Err(Error::InvalidArgument(format!("class weights {w:?} must be positive")));
            }
        }
        Ok(())
    }

    pub fn resolve_weights(&self, labels: &[Label], classes: usize) -> Result<Vec<f32>> {
        match &self.class_weights {
            Some(w) if w.len() == classes => Ok(w.clone()),
            Some(w) => Err(Error::ShapeMismatch(format!("{} class weights for {classes} classes", w.len()))),
            None => {
                let mut counts = vec![0usize; classes];
                for l in labels {
                    counts[l.index()] += 1;
                }
                class_weights(&counts, self.weighting)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    /// 1-based.
    pub epoch: usize,
    /// Mean per-sample training loss seen during the epoch.
    pub mean_loss: f64,
    /// Infer-mode accuracy over the whole training set after the epoch.
    pub train_accuracy: f64,
}

/// Minibatch training.
///
/// Each epoch reshuffles with `derive(seed, "shuffle", epoch)`; sample `i`
/// in epoch `e` draws dropout masks from `derive(derive(seed, "epoch", e),
/// "dropout", i)`. Gradients are summed in batch order, so a fixed seed gives
/// bit-identical parameters.
pub fn fit(
    mut model: Model,
    inputs: &[Tensor],
    labels: &[Label],
    config: &TrainConfig,
) -> Result<(Model, Vec<EpochStats>)> {
    config.validate()?;
    if inputs.is_empty() {
        return Err(Error::Empty("training set".into()));
    }
    if inputs.len() != labels.len() {
        return Err(Error::ShapeMismatch(format!("{} inputs for {} labels", inputs.len(), labels.len())));
    }
    let weights = config.resolve_weights(labels, model.spec.classes)?;
    let sizes: Vec<usize> = model.param_blocks().iter().map(|b| b.len()).collect();
    let mut opt = OptimizerState::new(config.optimizer, &sizes);
    let n = inputs.len();
    let mut history = Vec::with_capacity(config.epochs);
    let mut order: Vec<usize> = (0..n).collect();
    for epoch in 0..config.epochs {
        let e = epoch as u64;
        order.sort_unstable();
        order.shuffle(&mut seed::derived_rng(config.seed, "shuffle", e));
        let epoch_seed = seed::derive(config.seed, "epoch", e);
        let mut losses = vec![0.0f64; n];
        for batch in order.chunks(config.batch_size) {
            let inv = 1.0 / batch.len() as f32;
            let mut grads = Gradients::zeros_like(&model);
            for &i in batch {
                let mut rng = seed::derived_rng(epoch_seed, "dropout", i as u64);
                let trace = model.trace(&inputs[i], Mode::Train, &mut rng)?;
                let probs = softmax(&trace.logits);
                let y = labels[i].index();
                let (loss, mut g, _) = sample_loss(config.loss, &probs, y, weights[y]);
                if !loss.is_finite() {
                    return Err(Error::NonFinite(format!("loss of sample {i} in epoch {}", epoch + 1)));
                }
                losses[i] = loss;
                g.iter_mut().for_each(|v| *v *= inv);
                let (sample_grads, _) = model.backprop(&trace, &g, false)?;
                grads.add_assign(&sample_grads);
            }
            let mut params = model.param_blocks_mut();
            optimizer_step(&mut opt, &mut params, &grads.0, config.learning_rate)?;
        }
        let mean_loss = losses.iter().sum::<f64>() / n as f64;
        if !mean_loss.is_finite() {
            return Err(Error::NonFinite(format!("mean loss in epoch {}", epoch + 1)));
        }
        let train_accuracy = accuracy(&model, inputs, labels)?;
        history.push(EpochStats { epoch: epoch + 1, mean_loss, train_accuracy });
    }
    Ok((model, history))
}

/// Loss of one `(1, D, H, W)` sample in infer mode and its gradient with
/// respect to every parameter block.
pub fn sample_gradients(
    model: &Model,
    x: &Tensor,
    label: Label,
    kind: LossKind,
    weight: f32,
) -> Result<(f64, Gradients)> {
    let trace = model.trace(x, Mode::Infer, &mut seed::rng(0))?;
    let probs = softmax(&trace.logits);
    let (loss, g, _) = sample_loss(kind, &probs, label.index(), weight);
    let (grads, _) = model.backprop(&trace, &g, false)?;
    Ok((loss, grads))
}

/// Infer-mode accuracy with argmax decisions.
pub(crate) fn accuracy(model: &Model, inputs: &[Tensor], labels: &[Label]) -> Result<f64> {
    let mut correct = 0usize;
    for (x, l) in inputs.iter().zip(labels) {
        let z = model.logits(x)?;
        let pred = if z[1] > z[0] { 1 } else { 0 };
        correct += (pred == l.index()) as usize;
    }
    Ok(correct as f64 / inputs.len() as f64)
}
