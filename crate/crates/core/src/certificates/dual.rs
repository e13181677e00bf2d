use nalgebra::DMatrix;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::certificates::data::DualNorm;
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualNormEstimate {
    /// Monte-Carlo mean of the dual norm of an `m x n` standard Gaussian.
    pub estimate: f64,
    /// Analytic upper bound: `sqrt(m) + sqrt(n)` for the operator norm,
    /// `3 sqrt(2 log max(m, n))` for the max-abs norm.
    pub analytic_bound: f64,
}

pub fn expected_dual_norm(
    norm: DualNorm,
    m: usize,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<DualNormEstimate> {
    if trials == 0 || m == 0 || n == 0 {
        return Err(Error::InvalidParameter("trials and dimensions must be positive".into()));
    }
    let mut rng = rng_from_seed(seed);
    let mut total = 0.0;
    for _ in 0..trials {
        let g = DMatrix::from_fn(m, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        total += if m * n == 1 { g[(0, 0)].abs() } else { norm.eval(&g)? };
    }
    let analytic_bound = match norm {
        DualNorm::Operator => (m as f64).sqrt() + (n as f64).sqrt(),
        DualNorm::MaxAbs => 3.0 * (2.0 * (m.max(n) as f64).ln()).sqrt(),
    };
    Ok(DualNormEstimate { estimate: total / trials as f64, analytic_bound })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_normal_mean() {
        let e = expected_dual_norm(DualNorm::Operator, 1, 1, 100_000, 1).unwrap();
        assert!((e.estimate - (2.0 / std::f64::consts::PI).sqrt()).abs() < 0.02);
    }

    #[test]
    fn within_analytic_bounds() {
        let op = expected_dual_norm(DualNorm::Operator, 20, 20, 200, 2).unwrap();
        assert!(op.estimate <= 2.0 * 20f64.sqrt());
        assert!((op.analytic_bound - 2.0 * 20f64.sqrt()).abs() < 1e-12);
        let mx = expected_dual_norm(DualNorm::MaxAbs, 20, 20, 2000, 3).unwrap();
        assert!(mx.estimate <= 3.0 * (2.0 * 20f64.ln()).sqrt());
    }

    #[test]
    fn zero_trials_rejected() {
        assert!(expected_dual_norm(DualNorm::MaxAbs, 2, 2, 0, 0).is_err());
    }
}
