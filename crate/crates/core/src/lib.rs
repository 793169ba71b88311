//! Volumetric CNN pipeline for dopamine-transporter SPECT classification.
//!
//! The crate covers the whole path from a raw uptake volume to a
//! cross-validated verdict:
//!
//! * [`tensor`]: dense `f32` arrays with `(C, D, H, W)` layout.
//! * [`layers`]: 3D convolution, 3D max pooling, dense layers, activations
//!   (ReLU, SELU, softmax) and dropout (standard and alpha), each with a
//!   forward and a backward pass.
//! * [`model`]: the LENET53D and ALEXNET3D stacks in ReLU and SELU flavours.
//! * [`train`]: cross-entropy and log-cosh losses, class weighting, Adam/SGD
//!   and the minibatch loop.
//! * [`preprocess`]: affine resampling plus max and integral intensity
//!   normalization, keyed by `[no|int|max]_[u|w]` pipeline tags.
//! * [`phantom`]: a synthetic striatal phantom standing in for patient data.
//! * [`eval`]: confusion-matrix metrics, ROC/AUC, stratified folds, cross
//!   validation and gradient saliency maps.
//! * [`io`]: the NVOL volume format, checkpoints, manifests, configs and
//!   report rendering.

pub mod error;
pub mod eval;
pub mod experiment;
pub mod io;
pub mod layers;
pub mod model;
pub mod phantom;
pub mod preprocess;
pub mod seed;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
pub use eval::{ConfusionMatrix, MetricsReport, RocCurve};
pub use layers::{ActivationKind, DropoutKind, DropoutSpec, Mode};
pub use model::{ArchitectureSpec, Model};
pub use preprocess::{AffineMatrix, PipelineTag};
pub use tensor::{Shape, Tensor, Volume};
pub use train::{LossKind, TrainConfig};

/// Binary class label. `Pd` is the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Control,
    Pd,
}

impl Label {
    pub const fn index(self) -> usize {
        match self {
            Label::Control => 0,
            Label::Pd => 1,
        }
    }

    pub fn from_index(i: usize) -> Result<Self> {
        match i {
            0 => Ok(Label::Control),
            1 => Ok(Label::Pd),
            _ => Err(Error::InvalidArgument(format!("class index {i} is not 0 or 1"))),
        }
    }

    pub const fn as_str(self) -> &'static str {
        match self {
            Label::Control => "control",
            Label::Pd => "pd",
        }
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "control" | "hc" | "0" => Ok(Label::Control),
            "pd" | "1" => Ok(Label::Pd),
            other => Err(Error::Parse(format!("unknown label '{other}'"))),
        }
    }
}
