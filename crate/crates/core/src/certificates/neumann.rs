use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Terms smaller than this end the series.
pub const NEUMANN_TERM_TOL: f64 = 1e-14;
/// Hard cap on the number of terms.
pub const NEUMANN_MAX_TERMS: usize = 10_000;
/// A final term larger than this after the cap means the series diverged.
pub const NEUMANN_DIVERGENCE_TOL: f64 = 1e-10;

/// `sum_{j >= 0} K^j x` for a contraction `K`, truncated once a term drops
/// below [`NEUMANN_TERM_TOL`] in Frobenius norm.
pub fn neumann_series<F>(x: &DenseMatrix, mut op: F) -> Result<DenseMatrix>
where
    F: FnMut(&DenseMatrix) -> Result<DenseMatrix>,
{
    let mut acc = x.clone();
    let mut term = x.clone();
    let mut last = term.norm();
    let blowup = 1e12 * last.max(1.0);
    let mut count = 1;
    while last >= NEUMANN_TERM_TOL && count < NEUMANN_MAX_TERMS {
        term = op(&term)?;
        last = term.norm();
        if !last.is_finite() || last > blowup {
            return Err(Error::NeumannDivergence { last_term: last, terms: count });
        }
        acc += &term;
        count += 1;
    }
    if last > NEUMANN_DIVERGENCE_TOL {
        return Err(Error::NeumannDivergence { last_term: last, terms: count });
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn geometric_scalar_series() {
        let x = DMatrix::from_element(1, 1, 1.0);
        let s = neumann_series(&x, |t| Ok(t * 0.5)).unwrap();
        assert!((s[(0, 0)] - 2.0).abs() < 1e-13);
    }

    #[test]
    fn expansion_is_reported() {
        let x = DMatrix::from_element(1, 1, 1.0);
        assert!(matches!(neumann_series(&x, |t| Ok(t * 1.5)), Err(Error::NeumannDivergence { .. })));
        // a non-contracting isometry never shrinks and is caught at the cap
        assert!(matches!(neumann_series(&x, |t| Ok(-t)), Err(Error::NeumannDivergence { .. })));
    }
}
