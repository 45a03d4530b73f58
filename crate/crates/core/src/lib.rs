// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod dataset;
pub mod diffusion;
pub mod error;
pub mod eval;
pub mod grad;
pub mod metrics;
pub mod model;
pub mod navsim;
pub mod nn;
pub mod oracle;
pub mod perception;
pub mod training;
pub mod trajectory;
pub mod world;

pub use error::{Error, Result};

/// Independent child seed for stream `stream` of a run seeded with `seed`
/// (one SplitMix64 round over the pair).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
