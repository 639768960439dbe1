//! Shared fixtures for the criterion benches.

use otl_core::{datagen, ScoreMatrix};

/// Uniform matrix used by every bench at a given shape.
pub fn fixture(n: usize, k: usize) -> ScoreMatrix {
    datagen::gen_uniform(n, k, 0x5eed).expect("valid bench shape")
}
