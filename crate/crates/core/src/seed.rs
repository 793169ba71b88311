//! Per-purpose seed derivation.
//!
//! Every random stream in the pipeline is keyed by `(top-level seed, purpose,
//! index)`: the derived seed is the first eight bytes (little endian) of
//! `SHA-256(top_le || purpose || index_le)`. Streams for different folds,
//! subjects or epochs are therefore independent of iteration order.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub fn derive(top: u64, purpose: &str, index: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(top.to_le_bytes());
    h.update(purpose.as_bytes());
    h.update(index.to_le_bytes());
    let out = h.finalize();
    u64::from_le_bytes(out[..8].try_into().expect("sha256 yields 32 bytes"))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn derived_rng(top: u64, purpose: &str, index: u64) -> ChaCha8Rng {
    rng(derive(top, purpose, index))
}
