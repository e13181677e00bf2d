use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{mismatch, Error, Result};
use crate::linalg::{l1_norm, op_norm, DenseMatrix};
use crate::operators::{IdentityMeasurement, MeasurementOperator};
use crate::rng::rng_from_seed;
use crate::solvers::prox::{soft_threshold, svt_with_norm};

const POWER_SEED: u64 = 0x0b5e_55ed;
const DIVERGENCE_FACTOR: f64 = 10.0;
const MONOTONE_SLACK: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Weight on `||S||_1`; `None` means `1/sqrt(m)`.
    pub lambda: Option<f64>,
    pub mu0_scale: f64,
    pub continuation_factor: f64,
    pub mu_min_ratio: f64,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub step_safety: f64,
    /// Inner-iteration cap for every stage except the last.
    pub stage_iters: usize,
    /// Power iterations used to estimate `||Q||_op^2`.
    pub power_iters: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lambda: None,
            mu0_scale: 0.99,
            continuation_factor: 0.9,
            mu_min_ratio: 1e-8,
            max_iters: 5000,
            rel_tol: 1e-8,
            step_safety: 0.99,
            stage_iters: 10,
            power_iters: 30,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(what.to_string()));
        if let Some(l) = self.lambda {
            if !(l > 0.0 && l.is_finite()) {
                return bad("lambda must be positive");
            }
        }
        if !(self.mu0_scale > 0.0 && self.mu0_scale.is_finite()) {
            return bad("mu0_scale must be positive");
        }
        if !(self.continuation_factor > 0.0 && self.continuation_factor < 1.0) {
            return bad("continuation_factor must lie in (0, 1)");
        }
        if !(self.mu_min_ratio > 0.0 && self.mu_min_ratio <= 1.0) {
            return bad("mu_min_ratio must lie in (0, 1]");
        }
        if self.max_iters == 0 || self.stage_iters == 0 || self.power_iters == 0 {
            return bad("iteration limits must be positive");
        }
        if !(self.rel_tol > 0.0) {
            return bad("rel_tol must be positive");
        }
        if !(self.step_safety > 0.0 && self.step_safety <= 1.0) {
            return bad("step_safety must lie in (0, 1]");
        }
        Ok(())
    }

    pub fn lambda_for(&self, m: usize) -> f64 {
        self.lambda.unwrap_or(1.0 / (m as f64).sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Converged,
    MaxIters,
    Diverged,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub l: DenseMatrix,
    pub s: DenseMatrix,
    pub iterations: usize,
    pub final_mu: f64,
    /// Relative constraint residual after every iteration.
    pub residual_history: Vec<f64>,
    /// Relative constraint residual at the end of each continuation stage.
    pub stage_residuals: Vec<f64>,
    pub status: SolveStatus,
}

/// Relative Frobenius error, with the convention that recovering a zero
/// target exactly scores 0.
pub fn relative_error(estimate: &DenseMatrix, truth: &DenseMatrix) -> f64 {
    let diff = (estimate - truth).norm();
    let scale = truth.norm();
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// Solves `min ||L||_* + lambda ||S||_1  s.t.  Q[L + S] = d` by smoothed
/// accelerated proximal gradient with continuation on the smoothing weight.
pub fn solve_cpcp<O: MeasurementOperator + ?Sized>(
    op: &O,
    d: &DVector<f64>,
    cfg: &SolverConfig,
) -> Result<SolveResult> {
    cfg.validate()?;
    if d.len() != op.measurements() {
        return Err(mismatch(op.measurements(), d.len()));
    }
    let mu0 = cfg.mu0_scale * d.norm();
    let lip = 2.0 * operator_norm_squared(op, cfg.power_iters)?;
    run(op, d, cfg, mu0, lip)
}

/// Solves `min ||L||_* + lambda ||S||_1  s.t.  L + S = M` with the same
/// scheme, observing every entry directly.
pub fn solve_pcp(m: &DenseMatrix, cfg: &SolverConfig) -> Result<SolveResult> {
    cfg.validate()?;
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter("data matrix has non-finite entries".into()));
    }
    let op = IdentityMeasurement { rows: m.nrows(), cols: m.ncols() };
    let d = crate::linalg::vectorize(m);
    let mu0 = cfg.mu0_scale * op_norm(m)?;
    run(&op, &d, cfg, mu0, 2.0)
}

/// `||Q||_op^2` by power iteration on `Q^* Q` from a fixed start.
pub fn operator_norm_squared<O: MeasurementOperator + ?Sized>(op: &O, iters: usize) -> Result<f64> {
    let (m, n) = op.shape();
    let mut rng = rng_from_seed(POWER_SEED);
    let mut x = DMatrix::from_fn(m, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    x /= x.norm();
    let mut est = 0.0;
    for _ in 0..iters {
        let y = op.adjoint(&op.apply(&x)?)?;
        est = y.norm();
        if est == 0.0 {
            break;
        }
        x = y / est;
    }
    Ok(est)
}

fn run<O: MeasurementOperator + ?Sized>(
    op: &O,
    d: &DVector<f64>,
    cfg: &SolverConfig,
    mu0: f64,
    lip: f64,
) -> Result<SolveResult> {
    let (m, n) = op.shape();
    let lambda = cfg.lambda_for(m);
    let zero = DMatrix::zeros(m, n);
    let d_norm = d.norm();
    if d_norm == 0.0 || mu0 == 0.0 {
        return Ok(SolveResult {
            l: zero.clone(),
            s: zero,
            iterations: 0,
            final_mu: mu0,
            residual_history: Vec::new(),
            stage_residuals: Vec::new(),
            status: SolveStatus::Converged,
        });
    }
    if !(lip > 0.0 && lip.is_finite()) {
        return Err(Error::InvalidParameter("measurement operator has zero norm".into()));
    }

    let mu_min = mu0 * cfg.mu_min_ratio;
    let mut mu = mu0;
    let (mut l, mut s) = (zero.clone(), zero.clone());
    let (mut yl, mut ys) = (zero.clone(), zero);
    // measurements of the iterate and of the extrapolated point, kept in
    // sync linearly so each iteration costs one apply and one adjoint
    let mut z = DVector::zeros(d.len());
    let mut zy = DVector::zeros(d.len());
    let mut theta = 1.0f64;
    let mut iterations = 0;
    let mut history = Vec::new();
    let mut stage_residuals = Vec::new();
    let mut best_residual = f64::INFINITY;
    let mut prev_stage_residual = f64::INFINITY;
    let mut status = SolveStatus::Converged;

    'outer: loop {
        let step = cfg.step_safety * mu / lip;
        let last_stage = mu <= mu_min;
        let mut inner = 0;
        let mut f_old = f64::INFINITY;
        loop {
            let grad = op.adjoint(&((&zy - d) / mu))?;
            let (l_new, nuc) = svt_with_norm(&(&yl - &grad * step), step)?;
            let s_new = soft_threshold(&(&ys - &grad * step), step * lambda);
            let z_new = op.apply(&(&l_new + &s_new))?;
            let misfit = (&z_new - d).norm();
            let f = nuc + lambda * l1_norm(&s_new) + misfit * misfit / (2.0 * mu);
            if f > f_old {
                theta = 1.0;
            }
            f_old = f;
            let theta_next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
            let beta = (theta - 1.0) / theta_next;

            let change = ((&l_new - &l).norm_squared() + (&s_new - &s).norm_squared()).sqrt()
                / 1f64.max((l_new.norm_squared() + s_new.norm_squared()).sqrt());

            yl = &l_new + (&l_new - &l) * beta;
            ys = &s_new + (&s_new - &s) * beta;
            zy = &z_new + (&z_new - &z) * beta;
            l = l_new;
            s = s_new;
            z = z_new;
            theta = theta_next;
            iterations += 1;
            inner += 1;

            let residual = misfit / d_norm;
            history.push(residual);
            if !residual.is_finite() || residual > DIVERGENCE_FACTOR * best_residual {
                stage_residuals.push(residual);
                status = SolveStatus::Diverged;
                break 'outer;
            }
            best_residual = best_residual.min(residual);

            // a stage may only end once it has not lost ground on the
            // previous one, so stage-end residuals never increase
            let settled = residual <= prev_stage_residual + MONOTONE_SLACK;
            if settled && (change < cfg.rel_tol || (!last_stage && inner >= cfg.stage_iters)) {
                break;
            }
            if iterations >= cfg.max_iters {
                stage_residuals.push(residual);
                status = SolveStatus::MaxIters;
                break 'outer;
            }
        }
        prev_stage_residual = *history.last().unwrap_or(&1.0);
        stage_residuals.push(prev_stage_residual);
        if last_stage {
            break;
        }
        mu = (mu * cfg.continuation_factor).max(mu_min);
    }

    Ok(SolveResult {
        l,
        s,
        iterations,
        final_mu: mu,
        residual_history: history,
        stage_residuals,
        status,
    })
}
