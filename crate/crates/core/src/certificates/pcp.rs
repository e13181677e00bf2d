use nalgebra::DMatrix;
use rand::Rng as _;

use crate::certificates::neumann::neumann_series;
use crate::error::{mismatch, Error, Result};
use crate::instances::{LowRankInstance, SparseInstance};
use crate::linalg::DenseMatrix;
use crate::operators::{angle_or_exact, SubspaceDescriptor};
use crate::rng::rng_from_seed;

/// Largest admissible `||P_Omega P_T||` before the sparse-part series is
/// considered divergent.
pub const MAX_SUPPORT_TANGENT_ANGLE: f64 = 1.0 - 1e-6;

/// The inexact PCP dual certificate `U V^T + W^L + W^S`.
#[derive(Debug, Clone)]
pub struct PcpCertificate {
    pub lambda_pcp: DenseMatrix,
    pub w_l: DenseMatrix,
    pub w_s: DenseMatrix,
    /// Number of golfing rounds used for `W^L`.
    pub j0: usize,
    /// Per-round Bernoulli parameter of the off-support partition.
    pub q: f64,
    /// `||Z_j||_F` after each golfing round.
    pub z_norms: Vec<f64>,
}

/// Default number of golfing rounds, `ceil(3 log2 m)`.
pub fn default_rounds(m: usize) -> usize {
    ((3.0 * (m as f64).log2()).ceil() as usize).max(1)
}

/// Builds the PCP certificate for the pair `(L0, S0)`:
/// `W^L` by golfing over a random partition of the off-support entries into
/// `j0` Bernoulli rounds, and `W^S` as the minimum-norm correction that makes
/// the support part equal `lambda sign(S0)`.
pub fn build_pcp_certificate(
    low: &LowRankInstance,
    sparse: &SparseInstance,
    lambda: f64,
    j0: Option<usize>,
    seed: u64,
) -> Result<PcpCertificate> {
    let (m, n) = low.shape();
    if sparse.shape() != (m, n) {
        return Err(mismatch(format!("{:?}", (m, n)), format!("{:?}", sparse.shape())));
    }
    if low.rank == 0 || low.l.norm() == 0.0 {
        return Err(Error::ZeroLowRank);
    }
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(format!("lambda {lambda}")));
    }
    let j0 = j0.unwrap_or_else(|| default_rounds(m));
    if j0 == 0 {
        return Err(Error::InvalidParameter("j0 must be at least 1".into()));
    }

    let t = SubspaceDescriptor::nuclear_tangent(low.u.clone(), low.v.clone())?;
    let omega = SubspaceDescriptor::support(m, n, &sparse.support)?;
    let angle = angle_or_exact(&omega, &t)?;
    if angle >= MAX_SUPPORT_TANGENT_ANGLE {
        return Err(Error::AngleTooLarge { angle });
    }

    // rho = (1 - q)^j0 makes the union of the rounds a Bernoulli(1 - rho) set
    let q = 1.0 - sparse.rho.powf(1.0 / j0 as f64);
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::BernoulliPartition { q });
    }
    let rounds = partition_off_support(m, n, &omega, j0, q, seed);

    let uv = low.uv_t();
    let mut y = DMatrix::zeros(m, n);
    let mut z = -&uv;
    let mut z_norms = Vec::with_capacity(j0);
    for mask in &rounds {
        for (k, &hit) in mask.iter().enumerate() {
            if hit {
                y.as_mut_slice()[k] -= z.as_slice()[k] / q;
            }
        }
        z = t.project(&y)? - &uv;
        z_norms.push(z.norm());
    }
    let w_l = t.project_complement(&y)?;

    let signs = sparse.sign_matrix() * lambda;
    let series = neumann_series(&signs, |x| omega.project(&t.project(x)?))?;
    let w_s = t.project_complement(&series)?;

    let lambda_pcp = &uv + &w_l + &w_s;
    Ok(PcpCertificate { lambda_pcp, w_l, w_s, j0, q, z_norms })
}

/// Assigns every off-support entry to a subset of `j0` rounds, each
/// membership Bernoulli(`q`), conditioned on the entry landing in at least
/// one round (so the rounds cover exactly the complement of the support).
/// Returns one column-major mask per round.
fn partition_off_support(
    m: usize,
    n: usize,
    omega: &SubspaceDescriptor,
    j0: usize,
    q: f64,
    seed: u64,
) -> Vec<Vec<bool>> {
    let mut rng = rng_from_seed(seed);
    let mut rounds = vec![vec![false; m * n]; j0];
    let on_support = match omega {
        SubspaceDescriptor::Support { mask, .. } => mask.clone(),
        _ => vec![false; m * n],
    };
    let miss_all = (1.0 - q).powi(j0 as i32);
    for k in 0..m * n {
        if on_support[k] {
            continue;
        }
        // first round containing the entry, from the truncated geometric law
        let first = if q >= 1.0 {
            0
        } else {
            let u: f64 = rng.random();
            let x = (1.0 - u * (1.0 - miss_all)).ln() / (1.0 - q).ln();
            (x.floor() as usize).min(j0 - 1)
        };
        rounds[first][k] = true;
        for round in rounds.iter_mut().skip(first + 1) {
            if rng.random::<f64>() < q {
                round[k] = true;
            }
        }
    }
    rounds
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{gen_low_rank, gen_sparse};

    #[test]
    fn partition_covers_complement_exactly() {
        let omega = SubspaceDescriptor::support(6, 5, &[(0, 0), (3, 2)]).unwrap();
        let rounds = partition_off_support(6, 5, &omega, 4, 0.3, 9);
        for k in 0..30 {
            let hits = rounds.iter().filter(|r| r[k]).count();
            let on = k == 0 || k == 3 + 2 * 6;
            assert_eq!(hits == 0, on, "entry {k}");
        }
    }

    #[test]
    fn partition_membership_rate() {
        // conditional on coverage, a round holds an entry with probability
        // q / (1 - (1 - q)^j0)
        let omega = SubspaceDescriptor::support(60, 60, &[]).unwrap();
        let (j0, q) = (5, 0.2);
        let rounds = partition_off_support(60, 60, &omega, j0, q, 3);
        let expected = q / (1.0 - (1.0f64 - q).powi(j0 as i32));
        for r in &rounds {
            let rate = r.iter().filter(|&&b| b).count() as f64 / 3600.0;
            assert!((rate - expected).abs() < 0.03, "{rate} vs {expected}");
        }
    }

    #[test]
    fn empty_support_gives_zero_sparse_part() {
        let low = gen_low_rank(10, 10, 1, 1).unwrap();
        let sparse = gen_sparse(10, 10, 0.0, 1.0, 2).unwrap();
        let cert = build_pcp_certificate(&low, &sparse, 0.3, None, 3).unwrap();
        assert_eq!(cert.w_s.amax(), 0.0);
        assert_eq!(cert.q, 1.0);
    }

    #[test]
    fn zero_low_rank_rejected() {
        let low = gen_low_rank(4, 4, 1, 1).unwrap();
        let zero = LowRankInstance { l: DMatrix::zeros(4, 4), rank: 0, sigma: vec![], ..low };
        let sparse = gen_sparse(4, 4, 0.1, 1.0, 2).unwrap();
        assert_eq!(build_pcp_certificate(&zero, &sparse, 0.5, None, 0).unwrap_err(), Error::ZeroLowRank);
    }
}
