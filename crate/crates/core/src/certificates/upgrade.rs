use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::certificates::data::DecomposableData;
use crate::certificates::neumann::neumann_series;
use crate::certificates::pcp::default_rounds;
use crate::error::{Error, Result};
use crate::linalg::{thin_svd, unvectorize, vectorize, DenseMatrix};
use crate::operators::{angle_or_exact, GolfingBlock, MeasurementEnsemble, SubspaceDescriptor};

/// Result of pushing an inexact certificate into `span(Q)` by golfing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GolfingOutcome {
    #[serde(skip)]
    pub lambda_star: DenseMatrix,
    /// `||E^(j)||_F` for `j = 0..=k`.
    pub error_norms: Vec<f64>,
    /// Set when some round increased the error.
    pub contraction_failed: bool,
    pub k: usize,
    pub gamma: usize,
    /// Dimension of `T_1 + ... + T_tau + span(Lambda_hat)`.
    pub dim_s: usize,
}

/// The subspace `T_1 + ... + T_tau + span(Lambda_hat)` the golfing recursion
/// works in.
pub fn golfing_subspace(lambda_hat: &DenseMatrix, terms: &[DecomposableData]) -> Result<SubspaceDescriptor> {
    if terms.is_empty() {
        return Err(Error::InvalidParameter("at least one term is required".into()));
    }
    let (m, n) = lambda_hat.shape();
    let mut parts: Vec<SubspaceDescriptor> = terms.iter().map(|t| t.subspace.clone()).collect();
    parts.push(SubspaceDescriptor::span_of(m, n, std::slice::from_ref(lambda_hat))?);
    SubspaceDescriptor::direct_sum(parts)
}

/// Moves `Lambda_hat` into `span(Q)` by `k` golfing rounds over disjoint
/// blocks of `gamma = floor(q / k)` measurement matrices:
/// `Lambda_j = Lambda_{j-1} - A_j E_{j-1}`, `E_j = P_S Lambda_j - Lambda_hat`,
/// starting from `Lambda_0 = 0`, with `A_j` the block rescaled by `mn/gamma`.
pub fn golfing_upgrade(
    lambda_hat: &DenseMatrix,
    terms: &[DecomposableData],
    ens: &MeasurementEnsemble,
    k: Option<usize>,
) -> Result<GolfingOutcome> {
    let s = golfing_subspace(lambda_hat, terms)?;
    let (m, _) = lambda_hat.shape();
    let k = k.unwrap_or_else(|| default_rounds(m));
    let blocks = GolfingBlock::partition(ens, k)?;
    let gamma = blocks[0].gamma();

    let mut lambda = DMatrix::zeros(lambda_hat.nrows(), lambda_hat.ncols());
    let mut err = -lambda_hat;
    let mut error_norms = vec![err.norm()];
    let mut contraction_failed = false;
    for block in &blocks {
        lambda -= block.apply_normalized(&err)?;
        err = s.project(&lambda)? - lambda_hat;
        let e = err.norm();
        if e > *error_norms.last().unwrap() {
            contraction_failed = true;
        }
        error_norms.push(e);
    }
    Ok(GolfingOutcome {
        lambda_star: lambda,
        error_norms,
        contraction_failed,
        k,
        gamma,
        dim_s: s.dim(),
    })
}

/// Gram matrix of the stacked orthonormal bases of the term subspaces.
pub fn stacked_gram(subspaces: &[&SubspaceDescriptor]) -> DMatrix<f64> {
    let b = stacked_basis(subspaces);
    b.transpose() * b
}

fn stacked_basis(subspaces: &[&SubspaceDescriptor]) -> DMatrix<f64> {
    let blocks: Vec<DMatrix<f64>> = subspaces.iter().map(|s| s.basis()).collect();
    let rows = blocks.first().map_or(0, |b| b.nrows());
    let total: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, total);
    let mut at = 0;
    for b in &blocks {
        out.columns_mut(at, b.ncols()).copy_from(b);
        at += b.ncols();
    }
    out
}

/// Least-norm `Delta` in `T_1 + ... + T_tau` with
/// `P_Ti Delta = lambda_i S_i - P_Ti Lambda_hat` for every term, from the
/// block system on the stacked bases.
pub fn least_norm_correction(lambda_hat: &DenseMatrix, terms: &[DecomposableData]) -> Result<DenseMatrix> {
    if terms.is_empty() {
        return Err(Error::InvalidParameter("at least one term is required".into()));
    }
    let (m, n) = lambda_hat.shape();
    let subspaces: Vec<&SubspaceDescriptor> = terms.iter().map(|t| &t.subspace).collect();
    let b = stacked_basis(&subspaces);
    if b.ncols() == 0 {
        return Ok(DMatrix::zeros(m, n));
    }
    let mut rhs = DVector::zeros(b.ncols());
    let mut at = 0;
    for t in terms {
        let target = &t.anchor * t.weight - lambda_hat;
        let basis = t.subspace.basis();
        let coeffs = basis.tr_mul(&vectorize(&target));
        rhs.rows_mut(at, coeffs.len()).copy_from(&coeffs);
        at += coeffs.len();
    }
    let gram = b.transpose() * &b;
    // pseudo-inverse solve: the Gram is singular when the terms overlap
    let (u, sv, v_t) = thin_svd(&gram)?;
    let cutoff = 1e-12 * sv.max();
    let mut coeffs = u.tr_mul(&rhs);
    for (c, &s) in coeffs.iter_mut().zip(sv.iter()) {
        *c = if s > cutoff { *c / s } else { 0.0 };
    }
    let c = v_t.tr_mul(&coeffs);
    let v = &b * c;
    Ok(unvectorize(v.as_slice(), m, n))
}

/// Turns an approximate certificate into one satisfying every equality
/// exactly: `Lambda_hat` is projected into `span(Q)`, the least-norm
/// correction `Delta_0` is computed, and `Delta = P_Q sum_i (P_T P_Q^perp P_T)^i
/// Delta_0` is added, where `T` is the sum of the term subspaces.
pub fn exact_upgrade(
    lambda_hat: &DenseMatrix,
    terms: &[DecomposableData],
    ens: &MeasurementEnsemble,
) -> Result<DenseMatrix> {
    if terms.is_empty() {
        return Err(Error::InvalidParameter("at least one term is required".into()));
    }
    let tau = terms.len();
    if tau > 1 {
        let bound = 1.0 / (tau - 1) as f64;
        for i in 0..tau {
            for j in i + 1..tau {
                let angle = angle_or_exact(&terms[i].subspace, &terms[j].subspace)?;
                if angle >= bound {
                    return Err(Error::AngleViolation { angle, bound });
                }
            }
        }
    }
    let base = ens.project_span(lambda_hat)?;
    let delta0 = least_norm_correction(&base, terms)?;
    let t_sum = SubspaceDescriptor::direct_sum(terms.iter().map(|t| t.subspace.clone()).collect())?;
    let x = neumann_series(&delta0, |x| t_sum.project(&ens.project_span_complement(x)?))?;
    Ok(base + ens.project_span(&x)?)
}
