//! Dense linear-algebra helpers shared by every module.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub type DenseMatrix = DMatrix<f64>;

/// Column-major vectorization (the crate-wide `vec` convention).
pub fn vectorize(m: &DenseMatrix) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

pub fn unvectorize(v: &[f64], rows: usize, cols: usize) -> DenseMatrix {
    DMatrix::from_column_slice(rows, cols, v)
}

#[inline]
pub fn inner(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    a.dot(b)
}

#[inline]
pub fn max_abs(m: &DenseMatrix) -> f64 {
    if m.is_empty() {
        0.0
    } else {
        m.amax()
    }
}

pub fn l1_norm(m: &DenseMatrix) -> f64 {
    m.iter().map(|x| x.abs()).sum()
}

fn to_faer(m: &DenseMatrix) -> faer::Mat<f64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Thin SVD, singular values sorted descending.
///
/// Backed by faer: nalgebra's bidiagonal SVD can return factors that do not
/// reconstruct the input when most singular values are (numerically) zero,
/// which is exactly the regime of singular-value thresholding.
pub fn thin_svd(m: &DenseMatrix) -> Result<(DenseMatrix, DVector<f64>, DenseMatrix)> {
    let (r, c) = m.shape();
    let k = r.min(c);
    if k == 0 {
        return Ok((DMatrix::zeros(r, 0), DVector::zeros(0), DMatrix::zeros(0, c)));
    }
    let svd = to_faer(m).thin_svd().map_err(|_| Error::SvdFailure)?;
    let (u, s, v) = (svd.U(), svd.S(), svd.V());
    let u = DMatrix::from_fn(r, k, |i, j| u[(i, j)]);
    let s = DVector::from_fn(k, |i, _| s[i]);
    let v_t = DMatrix::from_fn(k, c, |i, j| v[(j, i)]);
    Ok((u, s, v_t))
}

pub fn singular_values(m: &DenseMatrix) -> Result<DVector<f64>> {
    if m.is_empty() {
        return Ok(DVector::zeros(0));
    }
    let s = to_faer(m).singular_values().map_err(|_| Error::SvdFailure)?;
    Ok(DVector::from_vec(s))
}

/// Spectral norm (largest singular value).
pub fn op_norm(m: &DenseMatrix) -> Result<f64> {
    Ok(singular_values(m)?.iter().cloned().fold(0.0, f64::max))
}

pub fn nuclear_norm(m: &DenseMatrix) -> Result<f64> {
    Ok(singular_values(m)?.sum())
}

/// Extreme eigenvalues `(min, max)` of a symmetric matrix.
pub fn sym_eig_extremes(m: &DenseMatrix) -> (f64, f64) {
    if m.is_empty() {
        return (0.0, 0.0);
    }
    let eig = SymmetricEigen::new(m.clone());
    eig.eigenvalues
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        })
}

/// Spectral norm of a symmetric matrix via its eigenvalues.
pub fn sym_op_norm(m: &DenseMatrix) -> f64 {
    let (lo, hi) = sym_eig_extremes(m);
    lo.abs().max(hi.abs())
}

/// Orthonormal basis for the span of the columns of `a`, computed by
/// Gram-Schmidt with column-norm pivoting and one full re-orthogonalization
/// pass per accepted column. A column is dropped once its residual norm falls
/// below `drop_tol` times the largest original column norm.
pub fn orthonormal_span(a: &DenseMatrix, drop_tol: f64) -> DenseMatrix {
    let (rows, cols) = a.shape();
    if cols == 0 || rows == 0 {
        return DMatrix::zeros(rows, 0);
    }
    let mut work = a.clone();
    let scale = (0..cols)
        .map(|j| work.column(j).norm())
        .fold(0.0, f64::max);
    if scale == 0.0 {
        return DMatrix::zeros(rows, 0);
    }
    let threshold = drop_tol * scale;
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut remaining: Vec<usize> = (0..cols).collect();
    while !remaining.is_empty() && basis.len() < rows {
        let (pos, best_norm) = remaining
            .iter()
            .enumerate()
            .map(|(p, &j)| (p, work.column(j).norm()))
            .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best_norm <= threshold {
            break;
        }
        let j = remaining.swap_remove(pos);
        let mut q = work.column(j).into_owned();
        // second pass against the accepted basis
        for b in &basis {
            let c = b.dot(&q);
            q.axpy(-c, b, 1.0);
        }
        let norm = q.norm();
        if norm <= threshold {
            continue;
        }
        q /= norm;
        for &k in &remaining {
            let c = q.dot(&work.column(k));
            let mut col = work.column_mut(k);
            col.axpy(-c, &q, 1.0);
        }
        basis.push(q);
    }
    DMatrix::from_columns(&basis)
}

/// Orthonormal basis of the orthogonal complement of the column span of `u`
/// (which must itself have orthonormal columns).
pub fn orthonormal_complement(u: &DenseMatrix) -> DenseMatrix {
    let m = u.nrows();
    let proj = DMatrix::identity(m, m) - u * u.transpose();
    orthonormal_span(&proj, 1e-8)
}
