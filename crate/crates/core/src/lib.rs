//! Compressive principal component pursuit: recover a low-rank plus sparse
//! decomposition `M = L + S` from Gaussian linear measurements of `M`, and
//! build and check the dual certificates that guarantee recovery.

pub mod certificates;
pub mod error;
pub mod experiments;
pub mod instances;
pub mod linalg;
pub mod operators;
pub mod rng;
pub mod solvers;

pub use error::{Error, Result};
pub use linalg::DenseMatrix;
