//! Losses, class weighting, optimizers and the minibatch training loop.

mod fit;
mod loss;
mod optim;

pub use fit::{fit, sample_gradients, EpochStats, TrainConfig};
pub use loss::{class_weights, loss_and_grad, ClassWeighting, LossKind, LossOutput, PROB_FLOOR};
pub use optim::{optimizer_step, OptimizerKind, OptimizerState};
