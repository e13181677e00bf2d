use nalgebra::DMatrix;

use cpcp::certificates::verify_optimality;
use cpcp::experiments::{certify_pair, run_sweep, SweepConfig};
use cpcp::instances::{gen_low_rank, gen_sparse, LowRankInstance, SparseInstance};
use cpcp::linalg::{l1_norm, nuclear_norm, thin_svd};
use cpcp::operators::{MeasurementEnsemble, MeasurementOperator};
use cpcp::rng::mix_seed;
use cpcp::solvers::{relative_error, solve_cpcp, SolveStatus, SolverConfig};
use cpcp::DenseMatrix;

fn objective(l: &DenseMatrix, s: &DenseMatrix, lambda: f64) -> f64 {
    nuclear_norm(l).unwrap() + lambda * l1_norm(s)
}

/// Rank-1 matrix with sign-pattern singular vectors, so `||UV^T||_inf = 1/m`.
fn flat_rank_one(m: usize, sigma: f64) -> LowRankInstance {
    let signs = [1.0, -1.0, 1.0, 1.0, -1.0, 1.0, -1.0, -1.0, 1.0, -1.0];
    let u = DMatrix::from_fn(m, 1, |i, _| signs[i % 10] / (m as f64).sqrt());
    let v = DMatrix::from_fn(m, 1, |i, _| signs[(3 * i + 1) % 10] / (m as f64).sqrt());
    LowRankInstance::from_factors(u, vec![sigma], v).unwrap()
}

/// Plain subgradient descent on `||L||_* + lambda ||M - L||_1` with
/// diminishing steps, tracking the best iterate.
fn subgradient_oracle(m: &DenseMatrix, lambda: f64, iters: usize) -> (DenseMatrix, f64) {
    let mut l = DMatrix::zeros(m.nrows(), m.ncols());
    let mut best = (l.clone(), objective(&l, m, lambda));
    for k in 1..=iters {
        let (u, s, v_t) = thin_svd(&l).unwrap();
        let r = s.iter().filter(|&&x| x > 1e-12).count();
        let nuc = u.columns(0, r) * v_t.rows(0, r);
        let sign = (m - &l).map(|x| if x > 0.0 { 1.0 } else if x < 0.0 { -1.0 } else { 0.0 });
        let g = nuc - sign * lambda;
        let step = 0.2 / (k as f64).sqrt();
        l -= g * step;
        let f = objective(&l, &(m - &l), lambda);
        if f < best.1 {
            best = (l.clone(), f);
        }
    }
    best
}

#[test]
fn full_rank_ensemble_recovers_spiked_rank_one() {
    let m = 10;
    let lambda = 1.0 / (m as f64).sqrt();
    let low = flat_rank_one(m, 5.0);
    let support = vec![(1, 2), (4, 7), (8, 3)];
    let sparse = SparseInstance::from_support(m, m, support, vec![1, -1, 1], 10.0, 0.03).unwrap();
    let ens = MeasurementEnsemble::gaussian(m, m, m * m, 17).unwrap();
    let data = &low.l + &sparse.s;
    let d = ens.apply(&data).unwrap();
    let res = solve_cpcp(&ens, &d, &SolverConfig::default()).unwrap();
    assert!(relative_error(&res.l, &low.l) <= 1e-3);
    assert!(relative_error(&res.s, &sparse.s) <= 1e-3);

    // the planted pair carries a certificate that the returned pair passes
    let cert = certify_pair(&low, &sparse, &ens, lambda, 5).unwrap();
    let dual = cert.certificate.expect("planted pair certifies");
    let verdict = verify_optimality(&res.l, &res.s, &dual, Some(&ens), lambda, 1e-5).unwrap();
    assert!(verdict.passed, "{verdict:?}");

    // an unrelated first-order method lands on the same decomposition
    let (oracle, oracle_obj) = subgradient_oracle(&data, lambda, 50_000);
    let ours = objective(&res.l, &res.s, lambda);
    let gap = relative_error(&oracle, &res.l);
    assert!(ours <= oracle_obj + 1e-6, "{ours} vs {oracle_obj}");
    assert!((oracle_obj - ours) / ours <= 1e-3, "{ours} vs {oracle_obj}");
    assert!(gap <= 5e-3, "{gap}");
}

#[test]
fn compressive_recovery_at_sixty_percent() {
    let cfg = SolverConfig::default();
    let (m, q) = (30, 540);
    let lambda = cfg.lambda_for(m);
    let mut ok = 0;
    for t in 0..10u64 {
        let low = gen_low_rank(m, m, 2, mix_seed(&[t, 41])).unwrap();
        let sparse = gen_sparse(m, m, 0.05, 10.0, mix_seed(&[t, 42])).unwrap();
        let ens = MeasurementEnsemble::gaussian(m, m, q, mix_seed(&[t, 43])).unwrap();
        let d = ens.apply(&(&low.l + &sparse.s)).unwrap();
        let res = solve_cpcp(&ens, &d, &cfg).unwrap();
        if relative_error(&res.l, &low.l) <= 1e-3 && relative_error(&res.s, &sparse.s) <= 1e-3 {
            ok += 1;
        }
        // never worse than the planted pair, which is feasible for the same data
        if res.status == SolveStatus::Converged {
            let planted = objective(&low.l, &sparse.s, lambda);
            let found = objective(&res.l, &res.s, lambda);
            let slack = 1e-6 * (1.0 + nuclear_norm(&low.l).unwrap());
            let misfit = (ens.apply(&(&res.l + &res.s)).unwrap() - &d).norm() / d.norm();
            assert!(misfit < 1e-6, "trial {t}: misfit {misfit}");
            assert!(found <= planted + slack, "trial {t}: {found} > {planted}");
        }
    }
    assert!(ok >= 8, "{ok}/10");
}

#[test]
fn overloaded_cell_never_succeeds() {
    let cfg = SweepConfig {
        m: 30,
        n: 30,
        p: 450,
        rank_grid: vec![15],
        sparsity_grid: vec![0.4],
        trials: 2,
        ..Default::default()
    };
    let res = run_sweep(&cfg).unwrap();
    assert_eq!(res.cells[0].successes, 0);
}

#[test]
fn success_region_shrinks_with_withheld_measurements() {
    // fast variant of the phase-transition check: 8 x 8 grid at m = n = 20
    let mn = 400;
    let ranks: Vec<usize> = (1..=8).collect();
    let sparsities: Vec<f64> = (0..8).map(|i| 0.02 + 0.04 * i as f64).collect();
    let start = std::time::Instant::now();
    let panels: Vec<Vec<usize>> = [0, mn / 5, mn / 2]
        .into_iter()
        .map(|p| {
            let cfg = SweepConfig {
                m: 20,
                n: 20,
                p,
                rank_grid: ranks.clone(),
                sparsity_grid: sparsities.clone(),
                trials: 3,
                master_seed: 9,
                ..Default::default()
            };
            run_sweep(&cfg).unwrap().cells.iter().map(|c| c.successes).collect()
        })
        .collect();
    assert!(start.elapsed().as_secs() <= 600);
    for pair in panels.windows(2) {
        for (cell, (a, b)) in pair[0].iter().zip(&pair[1]).enumerate() {
            assert!(b <= &(a + 1), "cell {cell}: {a} -> {b}");
        }
    }
    let total = |p: &Vec<usize>| p.iter().sum::<usize>();
    assert!(total(&panels[2]) < total(&panels[0]));
}
