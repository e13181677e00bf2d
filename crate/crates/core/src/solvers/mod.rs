//! Proximal maps and the accelerated proximal-gradient solvers for PCP and
//! its compressive variant.

mod apg;
mod prox;

pub use apg::{
    operator_norm_squared, relative_error, solve_cpcp, solve_pcp, SolveResult, SolveStatus,
    SolverConfig,
};
pub use prox::{soft_threshold, svt};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{gen_low_rank, gen_sparse};
    use crate::operators::{MeasurementEnsemble, MeasurementOperator};
    use nalgebra::{DMatrix, DVector};

    #[test]
    fn zero_data_gives_zero() {
        let ens = MeasurementEnsemble::gaussian(5, 5, 10, 1).unwrap();
        let res = solve_cpcp(&ens, &DVector::zeros(10), &SolverConfig::default()).unwrap();
        assert_eq!(res.status, SolveStatus::Converged);
        assert_eq!(res.l.amax(), 0.0);
        assert_eq!(res.s.amax(), 0.0);
        assert!(res.stage_residuals.len() <= 2);
        let pcp = solve_pcp(&DMatrix::zeros(4, 4), &SolverConfig::default()).unwrap();
        assert_eq!(pcp.l.amax() + pcp.s.amax(), 0.0);
    }

    #[test]
    fn single_spike_goes_to_sparse_part() {
        let mut m = DMatrix::zeros(10, 10);
        m[(0, 0)] = 5.0;
        // the two pure splits cost 5 (all low-rank) and 5/sqrt(10) (all sparse)
        let lambda = 1.0 / 10f64.sqrt();
        assert!(lambda * 5.0 < 5.0);
        let res = solve_pcp(&m, &SolverConfig::default()).unwrap();
        assert!(res.l.norm() <= 1e-4, "L = {}", res.l.norm());
        assert!((&res.s - &m).norm() <= 1e-4 * 5.0);
    }

    #[test]
    fn invalid_config_rejected() {
        let cfg = SolverConfig { continuation_factor: 1.5, ..Default::default() };
        assert!(solve_pcp(&DMatrix::zeros(2, 2), &cfg).is_err());
        let ens = MeasurementEnsemble::gaussian(3, 3, 4, 0).unwrap();
        assert!(solve_cpcp(&ens, &DVector::zeros(3), &SolverConfig::default()).is_err());
    }

    #[test]
    fn repeated_solves_are_bit_identical_with_monotone_stages() {
        let lr = gen_low_rank(12, 12, 1, 3).unwrap();
        let sp = gen_sparse(12, 12, 0.05, 10.0, 4).unwrap();
        let ens = MeasurementEnsemble::gaussian(12, 12, 110, 5).unwrap();
        let d = ens.apply(&(&lr.l + &sp.s)).unwrap();
        let cfg = SolverConfig::default();
        let a = solve_cpcp(&ens, &d, &cfg).unwrap();
        let b = solve_cpcp(&ens, &d, &cfg).unwrap();
        assert_eq!(a.iterations, b.iterations);
        assert_eq!(a.l, b.l);
        assert_eq!(a.s, b.s);
        assert_eq!(a.residual_history.len(), a.iterations);
        for w in a.stage_residuals.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{} then {}", w[0], w[1]);
        }
    }

    #[test]
    fn operator_norm_of_identity_is_one() {
        let id = crate::operators::IdentityMeasurement { rows: 3, cols: 4 };
        assert!((operator_norm_squared(&id, 30).unwrap() - 1.0).abs() < 1e-12);
    }
}
