use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::experiments::sweep::{SweepCell, SweepResult};

/// Header of the sweep table.
pub const SWEEP_CSV_HEADER: &str =
    "rank,sparsity,successes,trials,mean_rel_err_L,mean_rel_err_S,mean_iters";

/// Writes any sequence of serializable rows as CSV with a header.
pub fn write_rows<T: Serialize>(rows: &[T], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// The sweep table, one row per cell in rank-major order.
pub fn emit_csv(res: &SweepResult, path: &Path) -> Result<()> {
    write_rows(&res.cells, path)
}

/// Realized sparsity and solver-status counts per cell.
pub fn emit_cell_audit_csv(res: &SweepResult, path: &Path) -> Result<()> {
    write_rows(&res.audit, path)
}

pub fn parse_csv(path: &Path) -> Result<Vec<SweepCell>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in r.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

/// `round(255 s / t)` with halves rounded up, in exact integer arithmetic.
pub fn pixel_value(successes: usize, trials: usize) -> u32 {
    if trials == 0 {
        return 0;
    }
    ((510 * successes + trials) / (2 * trials)) as u32
}

/// Plain-text greyscale image of the success fractions: one column per rank,
/// one row per sparsity with the sparsest row at the bottom.
pub fn emit_pgm(res: &SweepResult, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_pgm(res, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn write_pgm<W: Write>(res: &SweepResult, w: &mut W) -> Result<()> {
    let nr = res.config_echo.rank_grid.len();
    let ns = res.config_echo.sparsity_grid.len();
    writeln!(w, "P2")?;
    writeln!(w, "{nr} {ns}")?;
    writeln!(w, "255")?;
    for j in (0..ns).rev() {
        let row: Vec<String> = (0..nr)
            .map(|i| {
                let c = res.cell(i, j);
                pixel_value(c.successes, c.trials).to_string()
            })
            .collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::sweep::SweepConfig;

    fn single(successes: usize) -> SweepResult {
        let cfg = SweepConfig { rank_grid: vec![1], sparsity_grid: vec![0.1], ..Default::default() };
        SweepResult {
            cells: vec![SweepCell {
                rank: 1,
                sparsity: 0.1,
                successes,
                trials: 10,
                mean_rel_err_l: 0.0,
                mean_rel_err_s: 0.0,
                mean_iters: 0.0,
            }],
            audit: vec![],
            config_echo: cfg,
        }
    }

    fn pgm_body(res: &SweepResult) -> String {
        let mut buf = Vec::new();
        write_pgm(res, &mut buf).unwrap();
        String::from_utf8(buf).unwrap().lines().nth(3).unwrap().to_string()
    }

    #[test]
    fn pixel_rounding() {
        assert_eq!(pgm_body(&single(10)), "255");
        assert_eq!(pgm_body(&single(0)), "0");
        assert_eq!(pgm_body(&single(3)), "77");
        assert_eq!(pixel_value(1, 2), 128);
    }

    #[test]
    fn pgm_rows_descend_in_sparsity() {
        let cfg = SweepConfig {
            rank_grid: vec![1, 2],
            sparsity_grid: vec![0.1, 0.2],
            ..Default::default()
        };
        let cell = |rank, sparsity, successes| SweepCell {
            rank,
            sparsity,
            successes,
            trials: 1,
            mean_rel_err_l: 0.0,
            mean_rel_err_s: 0.0,
            mean_iters: 0.0,
        };
        let res = SweepResult {
            cells: vec![cell(1, 0.1, 1), cell(1, 0.2, 0), cell(2, 0.1, 1), cell(2, 0.2, 1)],
            audit: vec![],
            config_echo: cfg,
        };
        let mut buf = Vec::new();
        write_pgm(&res, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "P2\n2 2\n255\n0 255\n255 255\n");
    }

    #[test]
    fn csv_header_and_round_trip() {
        let mut res = single(3);
        res.cells[0].mean_rel_err_l = 0.1 + 0.2;
        res.cells[0].mean_rel_err_s = 1.0 / 3.0;
        res.cells[0].mean_iters = 1234.5;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        emit_csv(&res, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().next().unwrap(), SWEEP_CSV_HEADER);
        assert_eq!(parse_csv(&path).unwrap(), res.cells);
    }
}
