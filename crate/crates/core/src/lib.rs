//! Manifold-learning primitives with no operating-system dependencies.
//!
//! The pipeline is: a dense feature matrix → a k-nearest-neighbor graph
//! ([`neighbors`]) → a symmetric fuzzy membership graph ([`fuzzy_graph`]) →
//! a low-dimensional layout minimizing the fuzzy cross-entropy
//! ([`init`], [`optimizer`]). [`project`] places new points onto a frozen
//! layout and [`evaluate`] scores layouts.
//!
//! The crate is `no_std` (with `alloc`) unless the `std` feature is enabled.
//! The `parallel` feature adds rayon-backed row parallelism and the
//! asynchronous optimizer mode.

#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

mod error;
mod math;
mod matrix;

pub mod evaluate;
pub mod fuzzy_graph;
pub mod init;
pub mod kernel;
pub mod neighbors;
pub mod optimizer;
pub mod project;

pub use error::{Error, Result};
pub use fuzzy_graph::{
    build_fuzzy_graph, calibrate_sigma, local_strengths, symmetrize, Calibration,
    CalibrationOptions, DirectedStrengths, Edge, FuzzyGraph,
};
pub use init::{initialize, InitMethod, Initialization};
pub use kernel::{fit_kernel, LowDimKernel};
pub use matrix::DenseMatrix;
pub use neighbors::{knn, knn_approx, knn_exact, Metric, NeighborGraph};
pub use optimizer::{
    cross_entropy, optimize, Embedding, EmbeddingConfig, ExecutionMode, NegativeTerm,
};
pub use project::{project, Projection, ProjectionParams};

/// Seeds a ChaCha generator. Every stochastic routine in the crate goes
/// through this so that a single `u64` reproduces a run.
pub(crate) fn rng_from(seed: u64, stream: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
