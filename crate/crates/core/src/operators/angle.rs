use nalgebra::DMatrix;
use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::error::{mismatch, Error, Result};
use crate::linalg::op_norm;
use crate::operators::subspace::SubspaceDescriptor;
use crate::rng::rng_from_seed;

pub const DEFAULT_ANGLE_TOL: f64 = 1e-8;
pub const DEFAULT_ANGLE_MAX_ITERS: usize = 500;
const START_SEED: u64 = 0x5eed_a9_1e;

/// `||P_A P_B||` by power iteration on `P_B P_A P_B`, started from a fixed
/// pseudo-random vector inside `B`. Stops when the Rayleigh quotient moves by
/// less than `tol`.
pub fn subspace_angle(a: &SubspaceDescriptor, b: &SubspaceDescriptor, tol: f64) -> Result<f64> {
    subspace_angle_with(a, b, tol, DEFAULT_ANGLE_MAX_ITERS)
}

pub fn subspace_angle_with(
    a: &SubspaceDescriptor,
    b: &SubspaceDescriptor,
    tol: f64,
    max_iters: usize,
) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(mismatch(format!("{:?}", a.shape()), format!("{:?}", b.shape())));
    }
    if a.dim() == 0 || b.dim() == 0 {
        return Ok(0.0);
    }
    let (m, n) = a.shape();
    let mut rng = rng_from_seed(START_SEED);
    let start = DMatrix::from_fn(m, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut x = b.project(&start)?;
    let nrm = x.norm();
    if nrm == 0.0 {
        return Ok(0.0);
    }
    x /= nrm;
    let mut prev = f64::NAN;
    for _ in 0..max_iters {
        let y = b.project(&a.project(&x)?)?;
        let rq = x.dot(&y).max(0.0);
        let ny = y.norm();
        if ny == 0.0 {
            return Ok(0.0);
        }
        if (rq - prev).abs() < tol {
            return Ok(rq.sqrt());
        }
        prev = rq;
        x = y / ny;
    }
    Err(Error::NoConvergence { iterations: max_iters })
}

/// `||P_A P_B||` as the largest singular value of the cross-Gram matrix of
/// the two orthonormal bases. Exact but dense in `dim A x dim B`.
pub fn subspace_angle_exact(a: &SubspaceDescriptor, b: &SubspaceDescriptor) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(mismatch(format!("{:?}", a.shape()), format!("{:?}", b.shape())));
    }
    if a.dim() == 0 || b.dim() == 0 {
        return Ok(0.0);
    }
    op_norm(&a.basis().tr_mul(&b.basis()))
}

/// Power iteration first; a stalled iteration (clustered top of the
/// spectrum) falls back to the exact cross-Gram computation.
pub(crate) fn angle_or_exact(a: &SubspaceDescriptor, b: &SubspaceDescriptor) -> Result<f64> {
    match subspace_angle(a, b, DEFAULT_ANGLE_TOL) {
        Err(Error::NoConvergence { .. }) => subspace_angle_exact(a, b),
        other => other,
    }
}
