use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{thin_svd, DenseMatrix};

/// Entrywise shrinkage `sign(x) max(|x| - tau, 0)`: the proximal map of
/// `tau ||.||_1`.
pub fn soft_threshold(m: &DenseMatrix, tau: f64) -> DenseMatrix {
    m.map(|x| x.signum() * (x.abs() - tau).max(0.0))
}

/// Singular-value thresholding: the proximal map of `tau ||.||_*`.
pub fn svt(m: &DenseMatrix, tau: f64) -> Result<DenseMatrix> {
    Ok(svt_with_norm(m, tau)?.0)
}

/// [`svt`] that also returns the nuclear norm of its output.
pub(crate) fn svt_with_norm(m: &DenseMatrix, tau: f64) -> Result<(DenseMatrix, f64)> {
    if tau < 0.0 || !tau.is_finite() {
        return Err(Error::InvalidParameter(format!("threshold {tau}")));
    }
    if m.is_empty() {
        return Ok((m.clone(), 0.0));
    }
    let (u, s, v_t) = thin_svd(m)?;
    let keep = s.iter().take_while(|&&x| x > tau).count();
    if keep == 0 {
        return Ok((DMatrix::zeros(m.nrows(), m.ncols()), 0.0));
    }
    let shrunk: Vec<f64> = s.iter().take(keep).map(|x| x - tau).collect();
    let mut us = u.columns(0, keep).into_owned();
    for (k, &sk) in shrunk.iter().enumerate() {
        us.column_mut(k).scale_mut(sk);
    }
    let out = us * v_t.rows(0, keep);
    Ok((out, shrunk.iter().sum()))
}
