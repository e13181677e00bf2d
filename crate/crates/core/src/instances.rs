//! Random problem instances: incoherent low-rank matrices and
//! Bernoulli-Rademacher sparse matrices.

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{thin_svd, DenseMatrix};
use crate::rng::rng_from_seed;

/// Rank-`r` matrix stored together with its thin SVD `L = U diag(sigma) V^T`.
#[derive(Debug, Clone)]
pub struct LowRankInstance {
    pub l: DenseMatrix,
    pub u: DenseMatrix,
    pub v: DenseMatrix,
    pub sigma: Vec<f64>,
    pub rank: usize,
}

impl LowRankInstance {
    /// Builds `U diag(sigma) V^T` from given factors. `U` and `V` must have
    /// orthonormal columns.
    pub fn from_factors(u: DenseMatrix, sigma: Vec<f64>, v: DenseMatrix) -> Result<Self> {
        let r = sigma.len();
        if r == 0 || u.ncols() != r || v.ncols() != r {
            return Err(Error::InvalidDimension(format!(
                "factor widths {}/{} do not match {} singular values",
                u.ncols(),
                v.ncols(),
                r
            )));
        }
        if sigma.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::InvalidParameter("singular values must be positive".into()));
        }
        let l = &u * DMatrix::from_diagonal(&DVector::from_vec(sigma.clone())) * v.transpose();
        Ok(Self { l, u, v, sigma, rank: r })
    }

    /// Re-factors an arbitrary matrix, keeping singular values above
    /// `rel_cutoff * sigma_max`.
    pub fn from_matrix(l: &DenseMatrix, rel_cutoff: f64) -> Result<Self> {
        let (u, s, v_t) = thin_svd(l)?;
        let smax = s.iter().cloned().fold(0.0, f64::max);
        if smax == 0.0 {
            return Err(Error::ZeroLowRank);
        }
        let r = s.iter().filter(|&&x| x > rel_cutoff * smax).count();
        Ok(Self {
            l: l.clone(),
            u: u.columns(0, r).into_owned(),
            v: v_t.rows(0, r).transpose(),
            sigma: s.iter().take(r).cloned().collect(),
            rank: r,
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        self.l.shape()
    }

    /// `U V^T`, the anchor of the nuclear-norm subdifferential.
    pub fn uv_t(&self) -> DenseMatrix {
        &self.u * self.v.transpose()
    }
}

/// Sparse matrix whose support and signs were drawn from the iid
/// Bernoulli-Rademacher model.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseInstance {
    pub s: DenseMatrix,
    /// Support in row-major order.
    pub support: Vec<(usize, usize)>,
    /// Sign of each support entry, aligned with `support`.
    pub signs: Vec<i8>,
    pub rho: f64,
}

impl SparseInstance {
    pub fn from_support(
        rows: usize,
        cols: usize,
        support: Vec<(usize, usize)>,
        signs: Vec<i8>,
        magnitude: f64,
        rho: f64,
    ) -> Result<Self> {
        if support.len() != signs.len() {
            return Err(Error::InvalidParameter("support and signs differ in length".into()));
        }
        let mut s = DMatrix::zeros(rows, cols);
        for (&(i, j), &sg) in support.iter().zip(&signs) {
            if i >= rows || j >= cols {
                return Err(Error::InvalidDimension(format!("support entry ({i}, {j}) out of range")));
            }
            if sg != 1 && sg != -1 {
                return Err(Error::InvalidParameter("signs must be +1 or -1".into()));
            }
            s[(i, j)] = magnitude * sg as f64;
        }
        Ok(Self { s, support, signs, rho })
    }

    pub fn shape(&self) -> (usize, usize) {
        self.s.shape()
    }

    /// `sign(S)` as a matrix.
    pub fn sign_matrix(&self) -> DenseMatrix {
        let (m, n) = self.shape();
        let mut out = DMatrix::zeros(m, n);
        for (&(i, j), &sg) in self.support.iter().zip(&self.signs) {
            out[(i, j)] = sg as f64;
        }
        out
    }

    /// Realized fraction of non-zero entries.
    pub fn realized_fraction(&self) -> f64 {
        let (m, n) = self.shape();
        self.support.len() as f64 / (m * n) as f64
    }
}

/// Row, column and entrywise incoherence of a low-rank instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IncoherenceScore {
    pub mu_row: f64,
    pub mu_col: f64,
    pub mu_entry: f64,
    pub mu: f64,
}

/// `L = A B^T` with iid standard Gaussian `A (m x r)`, `B (n x r)`,
/// re-factored through a thin SVD.
pub fn gen_low_rank(m: usize, n: usize, r: usize, seed: u64) -> Result<LowRankInstance> {
    if r == 0 || r > m.min(n) {
        return Err(Error::InvalidDimension(format!(
            "rank {r} outside [1, {}]",
            m.min(n)
        )));
    }
    let mut rng = rng_from_seed(seed);
    let a = DMatrix::from_fn(m, r, |_, _| rng.sample::<f64, _>(StandardNormal));
    let b = DMatrix::from_fn(n, r, |_, _| rng.sample::<f64, _>(StandardNormal));
    let (u, s, v_t) = thin_svd(&(&a * b.transpose()))?;
    let u = u.columns(0, r).into_owned();
    let v = v_t.rows(0, r).transpose();
    let sigma: Vec<f64> = s.iter().take(r).cloned().collect();
    if sigma.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::InvalidParameter("degenerate Gaussian factors".into()));
    }
    // rebuild from the factors so that the stored triple is exactly consistent
    LowRankInstance::from_factors(u, sigma, v)
}

/// Entries independently non-zero with probability `rho`; each non-zero is
/// `magnitude` times an independent Rademacher sign. Entries are visited in
/// row-major order.
pub fn gen_sparse(m: usize, n: usize, rho: f64, magnitude: f64, seed: u64) -> Result<SparseInstance> {
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::InvalidParameter(format!("rho = {rho} outside [0, 1)")));
    }
    if !(magnitude > 0.0) || !magnitude.is_finite() {
        return Err(Error::InvalidParameter(format!("magnitude = {magnitude} must be positive")));
    }
    let mut rng = rng_from_seed(seed);
    let mut support = Vec::new();
    let mut signs = Vec::new();
    for i in 0..m {
        for j in 0..n {
            let on = rng.random::<f64>() < rho;
            let positive = rng.random::<bool>();
            if on {
                support.push((i, j));
                signs.push(if positive { 1 } else { -1 });
            }
        }
    }
    SparseInstance::from_support(m, n, support, signs, magnitude, rho)
}

/// Smallest `mu` for which the three incoherence inequalities hold.
pub fn incoherence_mu(inst: &LowRankInstance) -> IncoherenceScore {
    let (m, n) = inst.shape();
    let r = inst.rank as f64;
    let max_row = |f: &DenseMatrix| {
        f.row_iter()
            .map(|row| row.norm_squared())
            .fold(0.0, f64::max)
    };
    let mu_row = m as f64 / r * max_row(&inst.u);
    let mu_col = n as f64 / r * max_row(&inst.v);
    let entry = inst.uv_t().amax();
    let mu_entry = (m * n) as f64 / r * entry * entry;
    IncoherenceScore {
        mu_row,
        mu_col,
        mu_entry,
        mu: mu_row.max(mu_col).max(mu_entry),
    }
}
