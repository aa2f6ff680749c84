//! Slow, obviously-correct reference implementations and synthetic data
//! for testing `billmap-core` and `billmap`.
//!
//! Nothing here calls into the numerical code it is used to check: the
//! distances, kernel, calibration and loss are all rewritten from their
//! definitions. Everything is guarded to small inputs.

mod blobs;
mod corpus;
mod dense;

pub use blobs::{gaussian_blobs, Blobs};
pub use corpus::{generate_corpus, SyntheticSpec};
pub use dense::{
    dense_cross_entropy, dense_knn, dense_membership, fit_kernel_nelder_mead, fuzzy_to_dense, numerical_gradient,
    trustworthiness_direct, OracleError, DENSE_KNN_LIMIT, DENSE_LOSS_LIMIT,
};
