//! Layer kinds with explicit forward and backward passes.
//!
//! Every operation here is a pure function of its arguments (plus an explicit
//! RNG seed for dropout). Backward passes return fresh gradient buffers and
//! never touch layer parameters.

mod activation;
mod conv;
mod dense;
mod dropout;
mod pool;

pub use activation::{
    activation_backward, activation_forward, softmax, softmax_backward, ActivationKind, SELU_ALPHA,
    SELU_LAMBDA,
};
pub use conv::{conv3d_backward, conv3d_forward, Conv3d, ConvGrads};
pub use dense::{dense_backward, dense_forward, Dense, DenseGrads};
pub use dropout::{dropout_apply, dropout_backward, DropoutKind, DropoutSpec, DropoutTrace};
pub use pool::{maxpool3d_backward, maxpool3d_forward, MaxPool3d, PoolIndices};

pub(crate) use activation::{activate_in_place, activation_grad_in_place};

/// Whether stochastic layers are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Train,
    Infer,
}

/// Output extent of a strided, zero-padded window sweep, or `None` when the
/// kernel does not fit into the padded input.
pub(crate) fn out_extent(input: usize, kernel: usize, stride: usize, pad: usize) -> Option<usize> {
    let padded = input + 2 * pad;
    if kernel > padded || stride == 0 {
        None
    } else {
        Some((padded - kernel) / stride + 1)
    }
}

/// Range of output positions `o` for which `o * stride + offset - pad` lands
/// inside `[0, input)`.
#[inline]
pub(crate) fn valid_range(
    n_out: usize,
    input: usize,
    stride: usize,
    pad: usize,
    offset: usize,
) -> (usize, usize) {
    let lo = if pad > offset { (pad - offset).div_ceil(stride) } else { 0 };
    // o * stride + offset - pad <= input - 1
    let limit = input + pad;
    let hi = if limit <= offset { 0 } else { ((limit - offset - 1) / stride + 1).min(n_out) };
    (lo.min(hi), hi)
}
