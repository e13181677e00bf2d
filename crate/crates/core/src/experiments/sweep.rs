use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instances::{gen_low_rank, gen_sparse};
use crate::operators::{
    dense_footprint, MeasurementEnsemble, MeasurementOperator, StreamedEnsemble,
};
use crate::rng::mix_seed;
use crate::solvers::{relative_error, solve_cpcp, solve_pcp, SolveStatus, SolverConfig};

/// Default refusal threshold for dense ensemble storage.
pub const DEFAULT_MEM_CAP: u64 = 4 << 30;

/// Ranks `1..=floor(n/2)` in steps of `ceil(n/20)`.
pub fn default_rank_grid(n: usize) -> Vec<usize> {
    let step = n.div_ceil(20).max(1);
    (1..=(n / 2).max(1)).step_by(step).collect()
}

/// Sparsities `0.02, 0.05, ..., 0.50`.
pub fn default_sparsity_grid() -> Vec<f64> {
    (0..17).map(|k| (2 + 3 * k) as f64 / 100.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub m: usize,
    pub n: usize,
    /// Withheld measurements; `q = m n - p`.
    pub p: usize,
    pub rank_grid: Vec<usize>,
    pub sparsity_grid: Vec<f64>,
    pub trials: usize,
    pub success_tol: f64,
    pub solver: SolverConfig,
    pub master_seed: u64,
    pub output_dir: PathBuf,
    /// Magnitude of every nonzero of the sparse component.
    pub magnitude: f64,
    /// Largest dense ensemble footprint (bytes, summed over worker threads).
    pub mem_cap: u64,
    /// Regenerate measurement matrices on the fly instead of storing them.
    pub full_scale: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            m: 30,
            n: 30,
            p: 0,
            rank_grid: default_rank_grid(30),
            sparsity_grid: default_sparsity_grid(),
            trials: 10,
            success_tol: 1e-3,
            solver: SolverConfig::default(),
            master_seed: 0,
            output_dir: PathBuf::from("sweep-out"),
            magnitude: 10.0,
            mem_cap: DEFAULT_MEM_CAP,
            full_scale: false,
        }
    }
}

impl SweepConfig {
    pub fn q(&self) -> usize {
        self.m * self.n - self.p
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.m == 0 || self.n == 0 {
            return Err(Error::InvalidDimension(format!("{}x{}", self.m, self.n)));
        }
        if self.p >= self.m * self.n {
            return bad(format!("p = {} must be below mn = {}", self.p, self.m * self.n));
        }
        if self.rank_grid.is_empty() || self.sparsity_grid.is_empty() {
            return bad("grids must be non-empty".into());
        }
        if self.rank_grid.windows(2).any(|w| w[0] >= w[1])
            || self.sparsity_grid.windows(2).any(|w| !(w[0] < w[1]))
        {
            return bad("grids must be sorted ascending without repeats".into());
        }
        if self.rank_grid[0] == 0 || *self.rank_grid.last().unwrap() > self.m.min(self.n) {
            return bad("ranks must lie in 1..=min(m, n)".into());
        }
        if self.sparsity_grid.iter().any(|&s| !(0.0..1.0).contains(&s)) {
            return bad("sparsities must lie in [0, 1)".into());
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if !(self.success_tol > 0.0) || !(self.magnitude > 0.0) {
            return bad("success_tol and magnitude must be positive".into());
        }
        self.solver.validate()
    }

    /// Bytes of dense ensemble storage alive at once.
    pub fn memory_estimate(&self) -> u64 {
        if self.full_scale {
            return 0;
        }
        dense_footprint(self.m, self.n, self.q()) * rayon::current_num_threads() as u64
    }
}

/// One grid cell: the columns of the sweep CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub rank: usize,
    pub sparsity: f64,
    pub successes: usize,
    pub trials: usize,
    #[serde(rename = "mean_rel_err_L")]
    pub mean_rel_err_l: f64,
    #[serde(rename = "mean_rel_err_S")]
    pub mean_rel_err_s: f64,
    pub mean_iters: f64,
}

/// Per-cell bookkeeping that does not belong in the main table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellAudit {
    pub rank: usize,
    pub sparsity: f64,
    /// Mean realized `|Omega| / mn` over the trials.
    pub realized_sparsity: f64,
    pub diverged: usize,
    pub max_iters: usize,
    pub errors: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    /// Rank-major: cell `(i, j)` sits at `i * |sparsity_grid| + j`.
    pub cells: Vec<SweepCell>,
    pub audit: Vec<CellAudit>,
    pub config_echo: SweepConfig,
}

impl SweepResult {
    pub fn cell(&self, rank_idx: usize, sparsity_idx: usize) -> &SweepCell {
        &self.cells[rank_idx * self.config_echo.sparsity_grid.len() + sparsity_idx]
    }
}

struct TrialOutcome {
    success: bool,
    err_l: f64,
    err_s: f64,
    iters: usize,
    realized: f64,
    status: Option<SolveStatus>,
}

/// Seed of one trial, independent of sweep order and of `p`, so sweeps that
/// differ only in `p` see the same instances and nested ensembles.
pub fn trial_seed(master: u64, rank_idx: usize, sparsity_idx: usize, trial: usize) -> u64 {
    mix_seed(&[master, rank_idx as u64, sparsity_idx as u64, trial as u64])
}

fn run_trial(cfg: &SweepConfig, rank: usize, rho: f64, seed: u64) -> TrialOutcome {
    // a trial that could not be solved scores as the zero estimate
    let failed = |realized| TrialOutcome {
        success: false,
        err_l: 1.0,
        err_s: 1.0,
        iters: 0,
        realized,
        status: None,
    };
    let (m, n, q) = (cfg.m, cfg.n, cfg.q());
    let (low, sparse) = match (
        gen_low_rank(m, n, rank, mix_seed(&[seed, 1])),
        gen_sparse(m, n, rho, cfg.magnitude, mix_seed(&[seed, 2])),
    ) {
        (Ok(l), Ok(s)) => (l, s),
        _ => return failed(f64::NAN),
    };
    let realized = sparse.realized_fraction();
    let truth = &low.l + &sparse.s;
    let ens_seed = mix_seed(&[seed, 3]);
    // with nothing withheld an invertible Q gives the same feasible set as
    // the identity, so the full-observation cell is solved directly
    let solved = if q == m * n {
        solve_pcp(&truth, &cfg.solver)
    } else if cfg.full_scale {
        StreamedEnsemble::gaussian(m, n, q, ens_seed).and_then(|e| {
            let d = e.apply(&truth)?;
            solve_cpcp(&e, &d, &cfg.solver)
        })
    } else {
        MeasurementEnsemble::gaussian(m, n, q, ens_seed).and_then(|e| {
            let d = e.apply(&truth)?;
            solve_cpcp(&e, &d, &cfg.solver)
        })
    };
    match solved {
        Ok(res) => {
            let err_l = relative_error(&res.l, &low.l);
            let err_s = relative_error(&res.s, &sparse.s);
            TrialOutcome {
                success: err_l <= cfg.success_tol && err_s <= cfg.success_tol,
                err_l,
                err_s,
                iters: res.iterations,
                realized,
                status: Some(res.status),
            }
        }
        Err(_) => failed(realized),
    }
}

/// Runs every (rank, sparsity, trial) solve of the grid in parallel and
/// aggregates per cell. Solver failures count as unsuccessful trials.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let needed = cfg.memory_estimate();
    if needed > cfg.mem_cap {
        return Err(Error::MemoryCap { needed, cap: cfg.mem_cap });
    }
    let ns = cfg.sparsity_grid.len();
    let jobs: Vec<(usize, usize, usize)> = (0..cfg.rank_grid.len())
        .flat_map(|i| (0..ns).flat_map(move |j| (0..cfg.trials).map(move |t| (i, j, t))))
        .collect();
    let outcomes: Vec<TrialOutcome> = jobs
        .par_iter()
        .map(|&(i, j, t)| {
            let seed = trial_seed(cfg.master_seed, i, j, t);
            run_trial(cfg, cfg.rank_grid[i], cfg.sparsity_grid[j], seed)
        })
        .collect();

    let mut cells = Vec::with_capacity(cfg.rank_grid.len() * ns);
    let mut audit = Vec::with_capacity(cells.capacity());
    for (c, chunk) in outcomes.chunks(cfg.trials).enumerate() {
        let (i, j) = (c / ns, c % ns);
        let count = chunk.len() as f64;
        let mean = |f: &dyn Fn(&TrialOutcome) -> f64| chunk.iter().map(f).sum::<f64>() / count;
        cells.push(SweepCell {
            rank: cfg.rank_grid[i],
            sparsity: cfg.sparsity_grid[j],
            successes: chunk.iter().filter(|o| o.success).count(),
            trials: chunk.len(),
            mean_rel_err_l: mean(&|o| o.err_l),
            mean_rel_err_s: mean(&|o| o.err_s),
            mean_iters: mean(&|o| o.iters as f64),
        });
        audit.push(CellAudit {
            rank: cfg.rank_grid[i],
            sparsity: cfg.sparsity_grid[j],
            realized_sparsity: mean(&|o| o.realized),
            diverged: chunk.iter().filter(|o| o.status == Some(SolveStatus::Diverged)).count(),
            max_iters: chunk.iter().filter(|o| o.status == Some(SolveStatus::MaxIters)).count(),
            errors: chunk.iter().filter(|o| o.status.is_none()).count(),
        });
    }
    Ok(SweepResult { cells, audit, config_echo: cfg.clone() })
}
