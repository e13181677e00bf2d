//! Dual certificates for low-rank plus sparse recovery: scoring, the PCP
//! construction, golfing and exact upgrades into the measurement span, and
//! the final optimality check.

mod data;
mod dual;
mod neumann;
mod pcp;
mod upgrade;
mod verify;

pub use data::{pcp_terms, score_certificate, CertificateReport, DecomposableData, DualNorm};
pub use dual::{expected_dual_norm, DualNormEstimate};
pub use neumann::{neumann_series, NEUMANN_DIVERGENCE_TOL, NEUMANN_MAX_TERMS, NEUMANN_TERM_TOL};
pub use pcp::{build_pcp_certificate, default_rounds, PcpCertificate, MAX_SUPPORT_TANGENT_ANGLE};
pub use upgrade::{
    exact_upgrade, golfing_subspace, golfing_upgrade, least_norm_correction, stacked_gram,
    GolfingOutcome,
};
pub use verify::{terms_from_pair, verify_optimality, OptimalityVerdict, RANK_CUTOFF, SUPPORT_CUTOFF};
