use serde::{Deserialize, Serialize};

use crate::error::{mismatch, Error, Result};
use crate::instances::{LowRankInstance, SparseInstance};
use crate::linalg::{max_abs, op_norm, DenseMatrix};
use crate::operators::{MeasurementEnsemble, SubspaceDescriptor};

const ANCHOR_TOL: f64 = 1e-10;

/// Dual of the norm attached to a decomposable term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DualNorm {
    /// Spectral norm, dual to the nuclear norm.
    Operator,
    /// Entrywise max, dual to the entrywise l1 norm.
    MaxAbs,
}

impl DualNorm {
    pub fn eval(self, m: &DenseMatrix) -> Result<f64> {
        match self {
            Self::Operator => op_norm(m),
            Self::MaxAbs => Ok(max_abs(m)),
        }
    }
}

/// One weighted decomposable norm at a point: its subspace `T`, the anchor
/// `S` of the subdifferential inside `T`, the dual norm, and the weight.
#[derive(Debug, Clone)]
pub struct DecomposableData {
    pub subspace: SubspaceDescriptor,
    pub anchor: DenseMatrix,
    pub dual_norm: DualNorm,
    pub weight: f64,
}

impl DecomposableData {
    pub fn new(
        subspace: SubspaceDescriptor,
        anchor: DenseMatrix,
        dual_norm: DualNorm,
        weight: f64,
    ) -> Result<Self> {
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(Error::InvalidParameter(format!("weight {weight}")));
        }
        match (&subspace, dual_norm) {
            (SubspaceDescriptor::NuclearTangent { .. }, DualNorm::MaxAbs)
            | (SubspaceDescriptor::Support { .. }, DualNorm::Operator) => {
                return Err(Error::InvalidParameter(
                    "dual norm does not match the subspace kind".into(),
                ))
            }
            _ => {}
        }
        let off = subspace.project_complement(&anchor)?.norm();
        if off > ANCHOR_TOL * anchor.norm().max(1.0) {
            return Err(Error::InvalidParameter(format!(
                "anchor leaves its subspace by {off:.3e}"
            )));
        }
        Ok(Self { subspace, anchor, dual_norm, weight })
    }

    /// Nuclear-norm term at a low-rank point: `T` is its tangent space and the
    /// anchor is `U V^T`.
    pub fn nuclear(low: &LowRankInstance, weight: f64) -> Result<Self> {
        let t = SubspaceDescriptor::nuclear_tangent(low.u.clone(), low.v.clone())?;
        Self::new(t, low.uv_t(), DualNorm::Operator, weight)
    }

    /// l1 term at a sparse point: `T` is the support and the anchor is the
    /// sign pattern.
    pub fn l1(sparse: &SparseInstance, weight: f64) -> Result<Self> {
        let (m, n) = sparse.shape();
        let omega = SubspaceDescriptor::support(m, n, &sparse.support)?;
        Self::new(omega, sparse.sign_matrix(), DualNorm::MaxAbs, weight)
    }
}

/// The two terms of PCP with weights `1` and `lambda`.
pub fn pcp_terms(
    low: &LowRankInstance,
    sparse: &SparseInstance,
    lambda: f64,
) -> Result<Vec<DecomposableData>> {
    if low.shape() != sparse.shape() {
        return Err(mismatch(format!("{:?}", low.shape()), format!("{:?}", sparse.shape())));
    }
    Ok(vec![DecomposableData::nuclear(low, 1.0)?, DecomposableData::l1(sparse, lambda)?])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    /// `||P_Ti L - lambda_i S_i||_F` per term.
    pub alphas: Vec<f64>,
    /// `||P_Ti^perp L||_(i),* / lambda_i` per term.
    pub betas: Vec<f64>,
    /// `||P_Q^perp L||_F`, zero without an ensemble.
    pub q_residual: f64,
    pub alpha: f64,
    pub beta: f64,
}

/// Scores a candidate dual vector against every term: how far it is from
/// matching the anchors inside each subspace, and how large it is outside.
pub fn score_certificate(
    lambda: &DenseMatrix,
    terms: &[DecomposableData],
    ens: Option<&MeasurementEnsemble>,
) -> Result<CertificateReport> {
    let mut alphas = Vec::with_capacity(terms.len());
    let mut betas = Vec::with_capacity(terms.len());
    for t in terms {
        let inside = t.subspace.project(lambda)?;
        alphas.push((inside - &t.anchor * t.weight).norm());
        let outside = t.subspace.project_complement(lambda)?;
        betas.push(t.dual_norm.eval(&outside)? / t.weight);
    }
    let q_residual = match ens {
        Some(e) => e.project_span_complement(lambda)?.norm(),
        None => 0.0,
    };
    let alpha = alphas.iter().cloned().fold(0.0, f64::max);
    let beta = betas.iter().cloned().fold(0.0, f64::max);
    Ok(CertificateReport { alphas, betas, q_residual, alpha, beta })
}
