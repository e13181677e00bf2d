//! Phase-transition sweeps, certificate audits and statistical lemma
//! checks, with their CSV and PGM outputs.

mod audit;
mod lemmas;
mod matrix_io;
mod output;
mod sweep;

pub use audit::{
    certify_pair, run_certificate_audit, AuditConfig, AuditRow, Certification, VERIFY_TOL,
};
pub use lemmas::{
    block_isometry_deviation, leakage, leakage_of_matrix, range_projector_deviation,
    run_lemma_checks, run_lemma_checks_with, LemmaConfig, LemmaRow,
};
pub use matrix_io::{read_matrix_csv, write_matrix_csv};
pub use output::{
    emit_cell_audit_csv, emit_csv, emit_pgm, parse_csv, pixel_value, write_pgm, write_rows,
    SWEEP_CSV_HEADER,
};
pub use sweep::{
    default_rank_grid, default_sparsity_grid, run_sweep, trial_seed, CellAudit, SweepCell,
    SweepConfig, SweepResult, DEFAULT_MEM_CAP,
};
