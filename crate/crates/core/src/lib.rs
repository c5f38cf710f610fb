//! Random walks on the cone of positive definite matrices driven by Wishart
//! steps, explicit tail bounds for their maximal functionals, a
//! Hoffmann-Jorgensen inequality evaluator, and Monte Carlo verification.

pub mod bounds;
pub mod error;
pub mod hj;
pub mod mc;
pub mod rng;
pub mod sampling;
pub mod special;
pub mod spd;

pub use error::{Error, Result};
pub use rng::RngStream;
pub use sampling::{
    generate_walk, haar_orthogonal, walk_statistics, wishart_sample, WalkDump, WalkPath, WalkStats, WishartParams,
    WishartSampler,
};
pub use spd::{
    compose, matrix_sqrt, riemannian_distance, sym_eigenvalues, thompson_distance, OrthogonalMatrix, SpdMatrix,
    Spectrum,
};
