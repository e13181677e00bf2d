use nalgebra::DMatrix;

use crate::error::{mismatch, Error, Result};
use crate::linalg::{orthonormal_span, unvectorize, vectorize, DenseMatrix};
use crate::operators::ensemble::MeasurementEnsemble;

/// The block operator `A[M] = sum_i H_i <H_i, M>` over a subset of an
/// ensemble's matrices. `apply_normalized` rescales by `mn / gamma`, which
/// makes the block an unbiased estimate of the identity.
#[derive(Debug, Clone)]
pub struct GolfingBlock {
    rows: usize,
    cols: usize,
    data: DMatrix<f64>,
}

impl GolfingBlock {
    pub fn new(ens: &MeasurementEnsemble, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidParameter("golfing block needs at least one matrix".into()));
        }
        let all = ens.rows();
        let mut data = DMatrix::zeros(indices.len(), all.ncols());
        for (k, &i) in indices.iter().enumerate() {
            if i >= all.nrows() {
                return Err(Error::InvalidDimension(format!("matrix index {i} out of range")));
            }
            data.row_mut(k).copy_from(&all.row(i));
        }
        let (rows, cols) = crate::operators::MeasurementOperator::shape(ens);
        Ok(Self { rows, cols, data })
    }

    /// Splits `0..q` into `blocks` consecutive groups of `floor(q / blocks)`
    /// matrices; leftovers are unused.
    pub fn partition(ens: &MeasurementEnsemble, blocks: usize) -> Result<Vec<Self>> {
        let q = ens.rows().nrows();
        let gamma = if blocks == 0 { 0 } else { q / blocks };
        if gamma == 0 {
            return Err(Error::InsufficientMeasurements { q, blocks });
        }
        (0..blocks)
            .map(|j| {
                let idx: Vec<usize> = (j * gamma..(j + 1) * gamma).collect();
                Self::new(ens, &idx)
            })
            .collect()
    }

    pub fn gamma(&self) -> usize {
        self.data.nrows()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn apply(&self, m: &DenseMatrix) -> Result<DenseMatrix> {
        if m.shape() != (self.rows, self.cols) {
            return Err(mismatch(format!("{:?}", (self.rows, self.cols)), format!("{:?}", m.shape())));
        }
        let y = &self.data * vectorize(m);
        let v = self.data.tr_mul(&y);
        Ok(unvectorize(v.as_slice(), self.rows, self.cols))
    }

    pub fn apply_normalized(&self, m: &DenseMatrix) -> Result<DenseMatrix> {
        let scale = (self.rows * self.cols) as f64 / self.gamma() as f64;
        Ok(self.apply(m)? * scale)
    }

    /// `mn x gamma` orthonormal basis of the span of the block's matrices.
    pub fn range_basis(&self) -> DMatrix<f64> {
        orthonormal_span(&self.data.transpose(), 1e-10)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_matrix_block() {
        let ens = MeasurementEnsemble::gaussian(4, 4, 3, 11).unwrap();
        let block = GolfingBlock::new(&ens, &[1]).unwrap();
        let h = ens.matrix(1);
        let out = block.apply(&h).unwrap();
        let expected = &h * h.norm_squared();
        assert!((out - expected).amax() < 1e-13);
        assert_eq!(block.apply(&DMatrix::zeros(4, 4)).unwrap().amax(), 0.0);
    }

    #[test]
    fn empty_block_rejected() {
        let ens = MeasurementEnsemble::gaussian(3, 3, 2, 0).unwrap();
        assert!(GolfingBlock::new(&ens, &[]).is_err());
        assert!(matches!(
            GolfingBlock::partition(&ens, 3),
            Err(Error::InsufficientMeasurements { .. })
        ));
    }

    #[test]
    fn normalized_block_is_unbiased() {
        let (m, n, gamma) = (10, 10, 40);
        let x = DMatrix::from_fn(m, n, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0);
        let mut acc = DMatrix::zeros(m, n);
        let trials = 2000;
        for t in 0..trials {
            let ens = MeasurementEnsemble::gaussian(m, n, gamma, 5000 + t).unwrap();
            let idx: Vec<usize> = (0..gamma).collect();
            let block = GolfingBlock::new(&ens, &idx).unwrap();
            acc += block.apply_normalized(&x).unwrap();
        }
        acc /= trials as f64;
        let rel = (acc - &x).norm() / x.norm();
        assert!(rel <= 0.05, "relative bias {rel}");
    }
}
