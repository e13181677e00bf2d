use nalgebra::DMatrix;

use crate::error::{mismatch, Error, Result};
use crate::linalg::{orthonormal_complement, orthonormal_span, unvectorize, vectorize, DenseMatrix};

/// Residual cutoff for accepting a pooled basis vector of a direct sum.
pub const DIRECT_SUM_DROP_TOL: f64 = 1e-10;
const ORTHONORMAL_TOL: f64 = 1e-8;

/// A linear subspace of `m x n` matrices together with its orthogonal
/// projector.
#[derive(Debug, Clone)]
pub enum SubspaceDescriptor {
    /// `{U X^T + Y V^T}` for orthonormal `U` (m x r) and `V` (n x r).
    NuclearTangent { u: DenseMatrix, v: DenseMatrix },
    /// Matrices supported on `indices`; `mask` is the column-major indicator.
    Support {
        rows: usize,
        cols: usize,
        indices: Vec<(usize, usize)>,
        mask: Vec<bool>,
    },
    /// Span of an orthonormal family; columns of `basis` are vectorized members.
    ExplicitBasis { rows: usize, cols: usize, basis: DMatrix<f64> },
    /// Sum of subspaces, represented by an orthonormalized pooled basis.
    DirectSum {
        rows: usize,
        cols: usize,
        parts: Vec<SubspaceDescriptor>,
        basis: DMatrix<f64>,
    },
}

fn check_orthonormal(b: &DenseMatrix, tol: f64, what: &str) -> Result<()> {
    if b.ncols() == 0 {
        return Ok(());
    }
    let gram = b.transpose() * b;
    let dev = (gram - DMatrix::identity(b.ncols(), b.ncols())).amax();
    if dev > tol {
        return Err(Error::InvalidParameter(format!(
            "{what} not orthonormal (deviation {dev:.3e})"
        )));
    }
    Ok(())
}

impl SubspaceDescriptor {
    pub fn nuclear_tangent(u: DenseMatrix, v: DenseMatrix) -> Result<Self> {
        if u.ncols() != v.ncols() {
            return Err(mismatch(u.ncols(), v.ncols()));
        }
        check_orthonormal(&u, ORTHONORMAL_TOL, "U")?;
        check_orthonormal(&v, ORTHONORMAL_TOL, "V")?;
        Ok(Self::NuclearTangent { u, v })
    }

    pub fn support(rows: usize, cols: usize, indices: &[(usize, usize)]) -> Result<Self> {
        let mut mask = vec![false; rows * cols];
        let mut kept = Vec::with_capacity(indices.len());
        for &(i, j) in indices {
            if i >= rows || j >= cols {
                return Err(Error::InvalidDimension(format!(
                    "index ({i}, {j}) outside {rows}x{cols}"
                )));
            }
            if !mask[i + j * rows] {
                mask[i + j * rows] = true;
                kept.push((i, j));
            }
        }
        Ok(Self::Support { rows, cols, indices: kept, mask })
    }

    /// Span of matrices that must already be orthonormal (to 1e-10).
    pub fn explicit_basis(rows: usize, cols: usize, members: &[DenseMatrix]) -> Result<Self> {
        let mut basis = DMatrix::zeros(rows * cols, members.len());
        for (k, b) in members.iter().enumerate() {
            if b.shape() != (rows, cols) {
                return Err(mismatch(format!("{:?}", (rows, cols)), format!("{:?}", b.shape())));
            }
            basis.column_mut(k).copy_from_slice(b.as_slice());
        }
        check_orthonormal(&basis, 1e-10, "basis")?;
        Ok(Self::ExplicitBasis { rows, cols, basis })
    }

    /// Span of arbitrary matrices, orthonormalized internally.
    pub fn span_of(rows: usize, cols: usize, members: &[DenseMatrix]) -> Result<Self> {
        let mut pooled = DMatrix::zeros(rows * cols, members.len());
        for (k, b) in members.iter().enumerate() {
            if b.shape() != (rows, cols) {
                return Err(mismatch(format!("{:?}", (rows, cols)), format!("{:?}", b.shape())));
            }
            pooled.column_mut(k).copy_from_slice(b.as_slice());
        }
        let basis = orthonormal_span(&pooled, DIRECT_SUM_DROP_TOL);
        Ok(Self::ExplicitBasis { rows, cols, basis })
    }

    /// Orthonormal columns given directly as `mn x d` vectorized storage.
    pub fn from_basis_columns(rows: usize, cols: usize, basis: DMatrix<f64>) -> Result<Self> {
        if basis.nrows() != rows * cols {
            return Err(mismatch(rows * cols, basis.nrows()));
        }
        check_orthonormal(&basis, 1e-10, "basis")?;
        Ok(Self::ExplicitBasis { rows, cols, basis })
    }

    pub fn direct_sum(parts: Vec<SubspaceDescriptor>) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidDimension("empty direct sum".into()))?;
        let (rows, cols) = first.shape();
        let mut blocks = Vec::with_capacity(parts.len());
        for p in &parts {
            if p.shape() != (rows, cols) {
                return Err(mismatch(format!("{:?}", (rows, cols)), format!("{:?}", p.shape())));
            }
            blocks.push(p.basis());
        }
        let total: usize = blocks.iter().map(|b| b.ncols()).sum();
        let mut pooled = DMatrix::zeros(rows * cols, total);
        let mut at = 0;
        for b in &blocks {
            pooled.columns_mut(at, b.ncols()).copy_from(b);
            at += b.ncols();
        }
        let basis = orthonormal_span(&pooled, DIRECT_SUM_DROP_TOL);
        Ok(Self::DirectSum { rows, cols, parts, basis })
    }

    pub fn shape(&self) -> (usize, usize) {
        match self {
            Self::NuclearTangent { u, v } => (u.nrows(), v.nrows()),
            Self::Support { rows, cols, .. }
            | Self::ExplicitBasis { rows, cols, .. }
            | Self::DirectSum { rows, cols, .. } => (*rows, *cols),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::NuclearTangent { u, v } => {
                let r = u.ncols();
                r * (u.nrows() + v.nrows() - r)
            }
            Self::Support { indices, .. } => indices.len(),
            Self::ExplicitBasis { basis, .. } | Self::DirectSum { basis, .. } => basis.ncols(),
        }
    }

    /// For a direct sum: whether the summands were linearly independent, i.e.
    /// no pooled direction was dropped. Always true for the other variants.
    pub fn is_independent_sum(&self) -> bool {
        match self {
            Self::DirectSum { parts, basis, .. } => {
                parts.iter().map(|p| p.dim()).sum::<usize>() == basis.ncols()
            }
            _ => true,
        }
    }

    fn check(&self, m: &DenseMatrix) -> Result<()> {
        if m.shape() != self.shape() {
            return Err(mismatch(format!("{:?}", self.shape()), format!("{:?}", m.shape())));
        }
        Ok(())
    }

    pub fn project(&self, m: &DenseMatrix) -> Result<DenseMatrix> {
        self.check(m)?;
        Ok(match self {
            Self::NuclearTangent { u, v } => {
                if u.ncols() == 0 {
                    return Ok(DMatrix::zeros(m.nrows(), m.ncols()));
                }
                // U U^T M + (I - U U^T) M V V^T
                let utm = u.tr_mul(m);
                let pu = u * &utm;
                let mv = m * v;
                let uutmv = u * (&utm * v);
                pu + (mv - uutmv) * v.transpose()
            }
            Self::Support { mask, .. } => {
                let mut out = m.clone();
                for (x, &keep) in out.as_mut_slice().iter_mut().zip(mask) {
                    if !keep {
                        *x = 0.0;
                    }
                }
                out
            }
            Self::ExplicitBasis { rows, cols, basis } | Self::DirectSum { rows, cols, basis, .. } => {
                let coeffs = basis.tr_mul(&vectorize(m));
                let v = basis * coeffs;
                unvectorize(v.as_slice(), *rows, *cols)
            }
        })
    }

    pub fn project_complement(&self, m: &DenseMatrix) -> Result<DenseMatrix> {
        Ok(m - self.project(m)?)
    }

    /// Orthonormal basis as `mn x dim` vectorized columns. For a tangent space
    /// this is `{u_a e_j^T} U {w_c v_b^T}` with `W` completing `U`.
    pub fn basis(&self) -> DMatrix<f64> {
        match self {
            Self::NuclearTangent { u, v } => {
                let (m, n, r) = (u.nrows(), v.nrows(), u.ncols());
                let w = orthonormal_complement(u);
                let mut out = DMatrix::zeros(m * n, r * n + w.ncols() * r);
                let mut k = 0;
                for a in 0..r {
                    for j in 0..n {
                        let mut col = out.column_mut(k);
                        for i in 0..m {
                            col[i + j * m] = u[(i, a)];
                        }
                        k += 1;
                    }
                }
                for c in 0..w.ncols() {
                    for b in 0..r {
                        let block = w.column(c) * v.column(b).transpose();
                        out.column_mut(k).copy_from_slice(block.as_slice());
                        k += 1;
                    }
                }
                out
            }
            Self::Support { rows, cols, indices, .. } => {
                let mut out = DMatrix::zeros(rows * cols, indices.len());
                for (k, &(i, j)) in indices.iter().enumerate() {
                    out[(i + j * rows, k)] = 1.0;
                }
                out
            }
            Self::ExplicitBasis { basis, .. } | Self::DirectSum { basis, .. } => basis.clone(),
        }
    }
}
