//! Allocation-only engine behind the WSense experiments.
//!
//! Everything here is pure computation: dense `f64` tensors, the layer set
//! with forward/backward passes, the WSense and squeeze-and-excitation
//! blocks, the six activity-recognition pipelines with their parameter
//! auditor, sliding-window segmentation, the training loop and the
//! classification metrics. File formats, dataset parsing and the CLI live in
//! the `wsense` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod attention;
pub mod dataset;
mod error;
pub mod golden;
pub mod metrics;
pub mod nn;
pub mod segment;
pub mod synthetic;
pub mod tensor;
pub mod train;
pub mod zoo;

pub use error::{Error, Result};
pub use tensor::Tensor;

/// Seedable generator used for initialization, dropout masks and shuffling.
pub type Rng = rand_chacha::ChaCha8Rng;

/// Build the crate's generator from a 64-bit seed.
pub fn rng_from_seed(seed: u64) -> Rng {
    use rand::SeedableRng;
    Rng::seed_from_u64(seed)
}
