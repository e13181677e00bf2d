use serde::{Deserialize, Serialize};

use crate::certificates::data::{DecomposableData, DualNorm};
use crate::error::{mismatch, Error, Result};
use crate::linalg::{max_abs, thin_svd, DenseMatrix};
use crate::operators::{MeasurementEnsemble, SubspaceDescriptor};

/// Singular values below this fraction of the largest are treated as zero.
pub const RANK_CUTOFF: f64 = 1e-6;
/// Entries below this fraction of the largest magnitude are off-support.
pub const SUPPORT_CUTOFF: f64 = 1e-6;

/// Outcome of checking the sufficient conditions for `(L, S)` to be the
/// unique minimizer, given a dual vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalityVerdict {
    pub rank: usize,
    pub support_size: usize,
    /// `||P_T Lambda - U V^T||_F`.
    pub tangent_residual: f64,
    /// `||P_Omega Lambda - lambda sign(S)||_F`.
    pub support_residual: f64,
    /// `1 - ||P_T^perp Lambda||`.
    pub tangent_margin: f64,
    /// `lambda - ||P_Omega^perp Lambda||_inf`.
    pub support_margin: f64,
    /// `||P_Q^perp Lambda||_F`, zero when no ensemble is given.
    pub q_residual: f64,
    pub tangent_equality: bool,
    pub support_equality: bool,
    pub tangent_strict: bool,
    pub support_strict: bool,
    pub in_span: bool,
    pub independent: bool,
    pub passed: bool,
}

/// Tangent-space and support terms read off a numerical pair `(L, S)`.
pub fn terms_from_pair(l: &DenseMatrix, s: &DenseMatrix, lambda: f64) -> Result<Vec<DecomposableData>> {
    if l.shape() != s.shape() {
        return Err(mismatch(format!("{:?}", l.shape()), format!("{:?}", s.shape())));
    }
    if l.iter().chain(s.iter()).any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter("non-finite entries".into()));
    }
    let (m, n) = l.shape();
    let (u, sv, v_t) = thin_svd(l)?;
    let top = sv.iter().cloned().fold(0.0, f64::max);
    let rank = if top == 0.0 { 0 } else { sv.iter().filter(|&&x| x > RANK_CUTOFF * top).count() };
    let u = u.columns(0, rank).into_owned();
    let v = v_t.rows(0, rank).transpose();
    let uv = &u * v.transpose();
    let tangent = SubspaceDescriptor::nuclear_tangent(u, v)?;

    let peak = max_abs(s);
    let mut support = Vec::new();
    let mut signs = DenseMatrix::zeros(m, n);
    if peak > 0.0 {
        for j in 0..n {
            for i in 0..m {
                if s[(i, j)].abs() > SUPPORT_CUTOFF * peak {
                    support.push((i, j));
                    signs[(i, j)] = s[(i, j)].signum();
                }
            }
        }
    }
    let omega = SubspaceDescriptor::support(m, n, &support)?;
    Ok(vec![
        DecomposableData::new(tangent, uv, DualNorm::Operator, 1.0)?,
        DecomposableData::new(omega, signs, DualNorm::MaxAbs, lambda)?,
    ])
}

/// Checks that `Lambda` proves `(L, S)` is the unique solution of the
/// (compressive) PCP program with weight `lambda`: the equalities
/// `P_T Lambda = U V^T`, `P_Omega Lambda = lambda sign(S)` and `Lambda in
/// span(Q)` within `tol`, the strict bounds `||P_T^perp Lambda|| < 1` and
/// `||P_Omega^perp Lambda||_inf < lambda`, and independence of `T` and
/// `Omega`.
pub fn verify_optimality(
    l: &DenseMatrix,
    s: &DenseMatrix,
    lambda_cert: &DenseMatrix,
    ens: Option<&MeasurementEnsemble>,
    lambda: f64,
    tol: f64,
) -> Result<OptimalityVerdict> {
    if lambda_cert.shape() != l.shape() {
        return Err(mismatch(format!("{:?}", l.shape()), format!("{:?}", lambda_cert.shape())));
    }
    let terms = terms_from_pair(l, s, lambda)?;
    let (t, o) = (&terms[0], &terms[1]);

    let tangent_residual = (t.subspace.project(lambda_cert)? - &t.anchor).norm();
    let support_residual = (o.subspace.project(lambda_cert)? - &o.anchor * lambda).norm();
    let tangent_margin = 1.0 - DualNorm::Operator.eval(&t.subspace.project_complement(lambda_cert)?)?;
    let support_margin = lambda - max_abs(&o.subspace.project_complement(lambda_cert)?);
    let q_residual = match ens {
        Some(e) => e.project_span_complement(lambda_cert)?.norm(),
        None => 0.0,
    };
    let sum = SubspaceDescriptor::direct_sum(vec![t.subspace.clone(), o.subspace.clone()])?;

    let tangent_equality = tangent_residual <= tol;
    let support_equality = support_residual <= tol;
    let tangent_strict = tangent_margin > tol;
    let support_strict = support_margin > tol;
    let in_span = q_residual <= tol;
    let independent = sum.is_independent_sum();
    let passed = tangent_equality
        && support_equality
        && tangent_strict
        && support_strict
        && in_span
        && independent;
    Ok(OptimalityVerdict {
        rank: match &t.subspace {
            SubspaceDescriptor::NuclearTangent { u, .. } => u.ncols(),
            _ => unreachable!("first term is always a tangent space"),
        },
        support_size: o.subspace.dim(),
        tangent_residual,
        support_residual,
        tangent_margin,
        support_margin,
        q_residual,
        tangent_equality,
        support_equality,
        tangent_strict,
        support_strict,
        in_span,
        independent,
        passed,
    })
}
