use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Reads a dense matrix stored as CSV: a record holding `m,n` (optionally
/// preceded by the literal header `m,n`), then the `m n` entries in row-major
/// order, laid out over any number of lines.
pub fn read_matrix_csv(path: &Path) -> Result<DenseMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut fields: Vec<String> = Vec::new();
    for rec in reader.records() {
        fields.extend(rec?.iter().filter(|f| !f.is_empty()).map(str::to_string));
    }
    let mut it = fields.into_iter().peekable();
    if it.peek().map(|f| f == "m").unwrap_or(false) {
        it.next();
        if it.next().as_deref() != Some("n") {
            return Err(Error::Parse("header must be `m,n`".into()));
        }
    }
    let mut dim = || -> Result<usize> {
        let f = it.next().ok_or_else(|| Error::Parse("missing dimensions".into()))?;
        f.parse().map_err(|_| Error::Parse(format!("bad dimension `{f}`")))
    };
    let (m, n) = (dim()?, dim()?);
    let values: Vec<f64> = it
        .map(|f| f.parse::<f64>().map_err(|_| Error::Parse(format!("bad value `{f}`"))))
        .collect::<Result<_>>()?;
    if values.len() != m * n {
        return Err(Error::Parse(format!("expected {} values, found {}", m * n, values.len())));
    }
    Ok(DMatrix::from_row_slice(m, n, &values))
}

/// Writes a matrix in the format accepted by [`read_matrix_csv`].
pub fn write_matrix_csv(m: &DenseMatrix, path: &Path) -> Result<()> {
    let mut w = csv::WriterBuilder::new().flexible(true).from_path(path)?;
    w.write_record(["m", "n"])?;
    w.write_record([m.nrows().to_string(), m.ncols().to_string()])?;
    for i in 0..m.nrows() {
        w.write_record(m.row(i).iter().map(|x| x.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
