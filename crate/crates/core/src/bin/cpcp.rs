use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;

use cpcp::experiments::{
    emit_cell_audit_csv, emit_csv, emit_pgm, read_matrix_csv, run_certificate_audit,
    run_lemma_checks_with, run_sweep, write_matrix_csv, write_rows, AuditConfig, LemmaConfig,
    SweepConfig,
};
use cpcp::operators::{MeasurementEnsemble, MeasurementOperator};
use cpcp::solvers::{solve_cpcp, solve_pcp, SolveStatus, SolverConfig};
use cpcp::Error;

#[derive(Parser)]
#[command(name = "cpcp", version, about = "Compressive principal component pursuit experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Phase-transition sweep over a rank x sparsity grid.
    Sweep(SweepArgs),
    /// Build, upgrade and verify dual certificates on random instances.
    Audit(AuditArgs),
    /// Monte-Carlo checks of the golfing block concentration bounds.
    Lemmas(LemmaArgs),
    /// Decompose one matrix read from CSV.
    Solve(SolveArgs),
}

#[derive(Args)]
struct SweepArgs {
    /// JSON file with a full or partial sweep configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    /// Withheld measurements.
    #[arg(long)]
    p: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    ranks: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    sparsities: Option<Vec<f64>>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Regenerate measurement matrices on demand instead of storing them.
    #[arg(long)]
    full_scale: bool,
    /// Cap on dense ensemble storage, in bytes.
    #[arg(long)]
    mem_cap: Option<u64>,
}

#[derive(Args)]
struct AuditArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    r: Option<usize>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "audit.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct LemmaArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "lemmas.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    /// Solver settings as JSON.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    input: PathBuf,
    /// Withheld measurements; 0 observes every entry directly.
    #[arg(long, default_value_t = 0)]
    p: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "solve-out")]
    out: PathBuf,
}

#[derive(Serialize)]
struct SolveSummary {
    m: usize,
    n: usize,
    q: usize,
    lambda: f64,
    iterations: usize,
    final_mu: f64,
    final_residual: Option<f64>,
    status: SolveStatus,
}

fn load_json<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, Error> {
    match path {
        Some(p) => Ok(serde_json::from_str(&fs::read_to_string(p)?)?),
        None => Ok(T::default()),
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn sweep(args: SweepArgs) -> Result<(), Error> {
    let mut cfg: SweepConfig = load_json(args.config.as_deref())?;
    let dims_changed = args.n.is_some() && args.ranks.is_none();
    set(&mut cfg.m, args.m);
    set(&mut cfg.n, args.n);
    set(&mut cfg.p, args.p);
    set(&mut cfg.rank_grid, args.ranks);
    set(&mut cfg.sparsity_grid, args.sparsities);
    set(&mut cfg.trials, args.trials);
    set(&mut cfg.master_seed, args.seed);
    set(&mut cfg.output_dir, args.out);
    set(&mut cfg.mem_cap, args.mem_cap);
    cfg.full_scale |= args.full_scale;
    if dims_changed && args.config.is_none() {
        cfg.rank_grid = cpcp::experiments::default_rank_grid(cfg.n);
    }

    let res = run_sweep(&cfg)?;
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir)?;
    emit_csv(&res, &dir.join("sweep.csv"))?;
    emit_pgm(&res, &dir.join("sweep.pgm"))?;
    emit_cell_audit_csv(&res, &dir.join("cell_audit.csv"))?;
    fs::write(dir.join("config.json"), serde_json::to_string_pretty(&res.config_echo)?)?;
    let total: usize = res.cells.iter().map(|c| c.successes).sum();
    println!(
        "{} cells, {} successful trials; results in {}",
        res.cells.len(),
        total,
        dir.display()
    );
    Ok(())
}

fn audit(args: AuditArgs) -> Result<(), Error> {
    let mut cfg: AuditConfig = load_json(args.config.as_deref())?;
    set(&mut cfg.m, args.m);
    set(&mut cfg.n, args.n);
    set(&mut cfg.r, args.r);
    set(&mut cfg.rho, args.rho);
    set(&mut cfg.p, args.p);
    set(&mut cfg.trials, args.trials);
    set(&mut cfg.seed, args.seed);
    let rows = run_certificate_audit(&cfg)?;
    write_rows(&rows, &args.out)?;
    let certified = rows.iter().filter(|r| r.certified).count();
    println!("{certified}/{} trials certified; rows in {}", rows.len(), args.out.display());
    Ok(())
}

fn lemmas(args: LemmaArgs) -> Result<(), Error> {
    let cfg: LemmaConfig = load_json(args.config.as_deref())?;
    let rows = run_lemma_checks_with(&cfg, args.seed)?;
    write_rows(&rows, &args.out)?;
    for r in &rows {
        println!(
            "{:<16} gamma={:<5} {}/{} {}",
            r.check,
            r.gamma,
            r.passes,
            r.trials,
            if r.passed { "pass" } else { "fail" }
        );
    }
    Ok(())
}

fn solve(args: SolveArgs) -> Result<(), Error> {
    let cfg: SolverConfig = load_json(args.config.as_deref())?;
    let data = read_matrix_csv(&args.input)?;
    let (m, n) = data.shape();
    let q = (m * n)
        .checked_sub(args.p)
        .filter(|&q| q > 0)
        .ok_or_else(|| Error::InvalidParameter(format!("p = {} must be below mn = {}", args.p, m * n)))?;
    let res = if args.p == 0 {
        solve_pcp(&data, &cfg)?
    } else {
        let ens = MeasurementEnsemble::gaussian(m, n, q, args.seed)?;
        let d = ens.apply(&data)?;
        solve_cpcp(&ens, &d, &cfg)?
    };
    fs::create_dir_all(&args.out)?;
    write_matrix_csv(&res.l, &args.out.join("L.csv"))?;
    write_matrix_csv(&res.s, &args.out.join("S.csv"))?;
    let summary = SolveSummary {
        m,
        n,
        q,
        lambda: cfg.lambda_for(m),
        iterations: res.iterations,
        final_mu: res.final_mu,
        final_residual: res.residual_history.last().copied(),
        status: res.status,
    };
    fs::write(args.out.join("solve.json"), serde_json::to_string_pretty(&summary)?)?;
    println!("{:?} after {} iterations; output in {}", res.status, res.iterations, args.out.display());
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidDimension(_)
        | Error::InvalidParameter(_)
        | Error::DimensionMismatch { .. }
        | Error::GramSingular { .. }
        | Error::MemoryCap { .. }
        | Error::Unsupported(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Sweep(a) => sweep(a),
        Command::Audit(a) => audit(a),
        Command::Lemmas(a) => lemmas(a),
        Command::Solve(a) => solve(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cpcp: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
