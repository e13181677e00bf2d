use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use cpcp::certificates::{
    build_pcp_certificate, expected_dual_norm, golfing_subspace, golfing_upgrade, pcp_terms,
    score_certificate, DualNorm,
};
use cpcp::instances::{gen_low_rank, gen_sparse, incoherence_mu, LowRankInstance};
use cpcp::operators::{MeasurementEnsemble, MeasurementOperator};
use cpcp::rng::{mix_seed, rng_from_seed};

fn gaussian(m: usize, n: usize, seed: u64) -> DMatrix<f64> {
    use rand::Rng as _;
    let mut rng = rng_from_seed(seed);
    DMatrix::from_fn(m, n, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn incoherence_ignores_basis_rotation(m in 4usize..16, n in 4usize..16, r in 1usize..4, seed: u64) {
        let r = r.min(m).min(n);
        let inst = gen_low_rank(m, n, r, seed).unwrap();
        let rot = gaussian(r, r, seed ^ 0x5a5a).qr().q();
        let sigma: Vec<f64> = (0..r).map(|i| 1.0 + i as f64).collect();
        let turned = LowRankInstance::from_factors(&inst.u * &rot, sigma, &inst.v * &rot).unwrap();
        let (a, b) = (incoherence_mu(&inst), incoherence_mu(&turned));
        prop_assert!((a.mu_row - b.mu_row).abs() <= 1e-9 * a.mu_row);
        prop_assert!((a.mu_col - b.mu_col).abs() <= 1e-9 * a.mu_col);
        prop_assert!((a.mu_entry - b.mu_entry).abs() <= 1e-9 * a.mu_entry);
        prop_assert!(a.mu_row >= 1.0 - 1e-12 && a.mu_col >= 1.0 - 1e-12);
        prop_assert!(a.mu >= a.mu_row.max(a.mu_col).max(a.mu_entry) - 1e-12);
    }

    #[test]
    fn generators_are_bit_reproducible(m in 2usize..12, n in 2usize..12, rho in 0.0f64..0.9, seed: u64) {
        let a = gen_low_rank(m, n, 1, seed).unwrap();
        let b = gen_low_rank(m, n, 1, seed).unwrap();
        prop_assert_eq!(a.l, b.l);
        let s1 = gen_sparse(m, n, rho, 3.0, seed).unwrap();
        let s2 = gen_sparse(m, n, rho, 3.0, seed).unwrap();
        prop_assert_eq!(&s1.s, &s2.s);
        prop_assert!(s1.s.iter().all(|&x| x == 0.0 || x.abs() == 3.0));
    }

    #[test]
    fn ensemble_adjoint_identity(m in 1usize..7, n in 1usize..7, q in 1usize..30, seed: u64) {
        let q = q.min(m * n);
        let ens = MeasurementEnsemble::gaussian(m, n, q, seed).unwrap();
        let x = gaussian(m, n, seed.wrapping_add(1));
        let y = DVector::from_column_slice(gaussian(q, 1, seed.wrapping_add(2)).as_slice());
        let lhs = ens.apply(&x).unwrap().dot(&y);
        let rhs = x.dot(&ens.adjoint(&y).unwrap());
        prop_assert!((lhs - rhs).abs() <= 1e-12 * x.norm() * y.norm());
    }
}

#[test]
fn golfing_beta_degrades_within_concentration_bound() {
    let (m, r, rho) = (30, 2, 0.04);
    let lambda = 1.0 / (m as f64).sqrt();
    let log_m = (m as f64).ln();
    let nu_op = expected_dual_norm(DualNorm::Operator, m, m, 200, 1).unwrap().estimate;
    let nu_inf = expected_dual_norm(DualNorm::MaxAbs, m, m, 200, 2).unwrap().estimate;
    let spread = ((nu_op + log_m.sqrt()) / 1.0).max((nu_inf + log_m.sqrt()) / lambda);
    let mut ok = 0;
    for t in 0..10u64 {
        let low = gen_low_rank(m, m, r, mix_seed(&[t, 51])).unwrap();
        let sparse = gen_sparse(m, m, rho, 10.0, mix_seed(&[t, 52])).unwrap();
        let terms = pcp_terms(&low, &sparse, lambda).unwrap();
        let hat = build_pcp_certificate(&low, &sparse, lambda, None, mix_seed(&[t, 53])).unwrap().lambda_pcp;
        let q = 20 * golfing_subspace(&hat, &terms).unwrap().dim();
        let ens = MeasurementEnsemble::gaussian(m, m, q, mix_seed(&[t, 54])).unwrap();
        let out = golfing_upgrade(&hat, &terms, &ens, None).unwrap();
        let before = score_certificate(&hat, &terms, None).unwrap().beta;
        let after = score_certificate(&out.lambda_star, &terms, Some(&ens)).unwrap();
        let allowance = 25.0 * spread * (hat.norm_squared() * log_m / q as f64).sqrt();
        ok += (after.beta <= before + allowance) as usize;
        // the golfed certificate is built from measurement matrices only
        assert!(after.q_residual <= 1e-10 * out.lambda_star.norm().max(1.0));
    }
    assert!(ok >= 9, "{ok}/10");
}
