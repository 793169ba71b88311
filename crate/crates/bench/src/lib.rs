//! Shared fixtures for the criterion benches.

use pdnet_core::phantom::{generate_subject, PhantomParams};
use pdnet_core::seed;
use pdnet_core::{Label, Tensor, Volume};
use rand::Rng;

pub fn random_tensor(dims: &[usize], seed: u64) -> Tensor {
    let mut rng = seed::rng(seed);
    let n = dims.iter().product();
    Tensor::from_vec(dims, (0..n).map(|_| rng.gen_range(-1.0f32..1.0)).collect()).expect("valid dims")
}

pub fn phantom_volume(shape: [usize; 3], seed: u64) -> Volume {
    let params = PhantomParams::with_shape(shape);
    generate_subject(&params, Label::Control, seed).expect("default phantom params are valid").0
}
