use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::error::{mismatch, Error, Result};
use crate::linalg::{unvectorize, vectorize, DenseMatrix};
use crate::rng::rng_stream;

/// Smallest admissible eigenvalue ratio of the Gram matrix.
pub const GRAM_CONDITION_FLOOR: f64 = 1e-12;

/// A linear map `M -> (<H_1, M>, ..., <H_q, M>)` together with its adjoint.
pub trait MeasurementOperator: Sync {
    /// Matrix shape `(m, n)` of the inputs.
    fn shape(&self) -> (usize, usize);
    /// Number of measurements `q`.
    fn measurements(&self) -> usize;
    fn apply(&self, m: &DenseMatrix) -> Result<DVector<f64>>;
    fn adjoint(&self, y: &DVector<f64>) -> Result<DenseMatrix>;

    fn check_matrix(&self, m: &DenseMatrix) -> Result<()> {
        if m.shape() != self.shape() {
            return Err(mismatch(format!("{:?}", self.shape()), format!("{:?}", m.shape())));
        }
        Ok(())
    }

    fn check_vector(&self, y: &DVector<f64>) -> Result<()> {
        if y.len() != self.measurements() {
            return Err(mismatch(self.measurements(), y.len()));
        }
        Ok(())
    }
}

/// Bytes needed to hold a dense `q x mn` ensemble.
pub fn dense_footprint(m: usize, n: usize, q: usize) -> u64 {
    (q as u64) * (m as u64) * (n as u64) * 8
}

/// Writes the entries of Gaussian measurement matrix `index` into `out`
/// (column-major, variance `1/(mn)`). Matrix `i` always comes from stream `i`
/// of `seed`, so an ensemble with fewer matrices is a prefix of a larger one.
fn fill_gaussian(seed: u64, index: usize, out: &mut [f64]) {
    let mut rng = rng_stream(seed, index as u64);
    let scale = 1.0 / (out.len() as f64).sqrt();
    for x in out.iter_mut() {
        *x = scale * rng.sample::<f64, _>(StandardNormal);
    }
}

/// `q` measurement matrices stored densely as the rows of a `q x mn` matrix,
/// with the Cholesky factor of their Gram matrix cached for projection onto
/// their span.
#[derive(Clone)]
pub struct MeasurementEnsemble {
    rows: usize,
    cols: usize,
    data: DMatrix<f64>,
    gram: Option<Cholesky<f64, Dyn>>,
}

impl std::fmt::Debug for MeasurementEnsemble {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MeasurementEnsemble")
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .field("q", &self.data.nrows())
            .finish()
    }
}

impl MeasurementEnsemble {
    /// `q` iid Gaussian matrices with entries of variance `1/(mn)`.
    pub fn gaussian(m: usize, n: usize, q: usize, seed: u64) -> Result<Self> {
        if m == 0 || n == 0 || q == 0 {
            return Err(Error::InvalidDimension(format!("ensemble dims ({m}, {n}, {q})")));
        }
        let mn = m * n;
        // rows of `data` are the vectorized matrices; fill a column-major
        // mn x q buffer first so every matrix is contiguous
        let mut buf = vec![0.0; mn * q];
        for (i, chunk) in buf.chunks_mut(mn).enumerate() {
            fill_gaussian(seed, i, chunk);
        }
        let data = DMatrix::from_column_slice(mn, q, &buf).transpose();
        Self::from_rows(m, n, data)
    }

    pub fn from_matrices(matrices: &[DenseMatrix]) -> Result<Self> {
        let first = matrices
            .first()
            .ok_or_else(|| Error::InvalidDimension("empty ensemble".into()))?;
        let (m, n) = first.shape();
        let mut data = DMatrix::zeros(matrices.len(), m * n);
        for (i, h) in matrices.iter().enumerate() {
            if h.shape() != (m, n) {
                return Err(mismatch(format!("{:?}", (m, n)), format!("{:?}", h.shape())));
            }
            data.row_mut(i).copy_from_slice(h.as_slice());
        }
        Self::from_rows(m, n, data)
    }

    fn from_rows(rows: usize, cols: usize, data: DMatrix<f64>) -> Result<Self> {
        let q = data.nrows();
        let gram = if q < rows * cols || (q == rows * cols && q > 0) {
            Some(factor_gram(&data)?)
        } else {
            None
        };
        Ok(Self { rows, cols, data, gram })
    }

    /// The `index`-th measurement matrix `H_index`.
    pub fn matrix(&self, index: usize) -> DenseMatrix {
        let row: Vec<f64> = self.data.row(index).iter().cloned().collect();
        unvectorize(&row, self.rows, self.cols)
    }

    /// Raw `q x mn` storage.
    pub fn rows(&self) -> &DMatrix<f64> {
        &self.data
    }

    /// True when the ensemble spans the whole matrix space by count alone
    /// (`q > mn`), in which case projection is the identity.
    pub fn spans_everything(&self) -> bool {
        self.gram.is_none()
    }

    /// Orthogonal projection onto `span{H_1, ..., H_q}`.
    pub fn project_span(&self, m: &DenseMatrix) -> Result<DenseMatrix> {
        self.check_matrix(m)?;
        match &self.gram {
            None => Ok(m.clone()),
            Some(chol) => {
                let y = self.apply(m)?;
                let c = chol.solve(&y);
                self.adjoint(&c)
            }
        }
    }

    /// `M - P_Q[M]`.
    pub fn project_span_complement(&self, m: &DenseMatrix) -> Result<DenseMatrix> {
        Ok(m - self.project_span(m)?)
    }
}

/// Cholesky of `G = H H^T` with an eigenvalue-ratio check. The extreme
/// eigenvalues are estimated by power and inverse-power iteration, which is
/// ample for a threshold many orders of magnitude below one.
fn factor_gram(data: &DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    let g = data * data.transpose();
    let q = g.nrows();
    let chol = Cholesky::new(g.clone()).ok_or(Error::GramSingular { ratio: 0.0 })?;
    let start = DVector::from_fn(q, |i, _| 1.0 + (i % 7) as f64 * 0.1);
    let mut x = start.normalize();
    let mut lmax = 0.0;
    for _ in 0..50 {
        let y = &g * &x;
        lmax = x.dot(&y);
        let nrm = y.norm();
        if nrm == 0.0 {
            break;
        }
        x = y / nrm;
    }
    let mut x = start.normalize();
    let mut inv_max = 0.0;
    for _ in 0..50 {
        let y = chol.solve(&x);
        inv_max = x.dot(&y);
        let nrm = y.norm();
        if !nrm.is_finite() || nrm == 0.0 {
            return Err(Error::GramSingular { ratio: 0.0 });
        }
        x = y / nrm;
    }
    let lmin = if inv_max > 0.0 { 1.0 / inv_max } else { 0.0 };
    let ratio = if lmax > 0.0 { lmin / lmax } else { 0.0 };
    if !(ratio > GRAM_CONDITION_FLOOR) {
        return Err(Error::GramSingular { ratio });
    }
    Ok(chol)
}

impl MeasurementOperator for MeasurementEnsemble {
    fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    fn measurements(&self) -> usize {
        self.data.nrows()
    }

    fn apply(&self, m: &DenseMatrix) -> Result<DVector<f64>> {
        self.check_matrix(m)?;
        Ok(&self.data * vectorize(m))
    }

    fn adjoint(&self, y: &DVector<f64>) -> Result<DenseMatrix> {
        self.check_vector(y)?;
        let v = self.data.tr_mul(y);
        Ok(unvectorize(v.as_slice(), self.rows, self.cols))
    }
}

/// The same Gaussian ensemble as [`MeasurementEnsemble::gaussian`], but each
/// matrix is regenerated from its seed on every application. Trades CPU for
/// memory on configurations whose dense storage would not fit.
#[derive(Debug, Clone)]
pub struct StreamedEnsemble {
    rows: usize,
    cols: usize,
    q: usize,
    seed: u64,
}

impl StreamedEnsemble {
    pub fn gaussian(m: usize, n: usize, q: usize, seed: u64) -> Result<Self> {
        if m == 0 || n == 0 || q == 0 {
            return Err(Error::InvalidDimension(format!("ensemble dims ({m}, {n}, {q})")));
        }
        Ok(Self { rows: m, cols: n, q, seed })
    }
}

impl MeasurementOperator for StreamedEnsemble {
    fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    fn measurements(&self) -> usize {
        self.q
    }

    fn apply(&self, m: &DenseMatrix) -> Result<DVector<f64>> {
        self.check_matrix(m)?;
        let mut h = vec![0.0; self.rows * self.cols];
        let x = m.as_slice();
        Ok(DVector::from_fn(self.q, |i, _| {
            fill_gaussian(self.seed, i, &mut h);
            h.iter().zip(x).map(|(a, b)| a * b).sum()
        }))
    }

    fn adjoint(&self, y: &DVector<f64>) -> Result<DenseMatrix> {
        self.check_vector(y)?;
        let mut h = vec![0.0; self.rows * self.cols];
        let mut out = DMatrix::zeros(self.rows, self.cols);
        for (i, &yi) in y.iter().enumerate() {
            fill_gaussian(self.seed, i, &mut h);
            for (o, a) in out.as_mut_slice().iter_mut().zip(&h) {
                *o += yi * a;
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::inner;
    use crate::rng::rng_from_seed;

    fn random_matrix(m: usize, n: usize, seed: u64) -> DenseMatrix {
        let mut rng = rng_from_seed(seed);
        DMatrix::from_fn(m, n, |_, _| rng.sample::<f64, _>(StandardNormal))
    }

    fn indicator(m: usize, n: usize, i: usize, j: usize) -> DenseMatrix {
        let mut e = DMatrix::zeros(m, n);
        e[(i, j)] = 1.0;
        e
    }

    #[test]
    fn indicator_ensemble() {
        let ens = MeasurementEnsemble::from_matrices(&[indicator(3, 2, 0, 0)]).unwrap();
        let m = random_matrix(3, 2, 1);
        let y = ens.apply(&m).unwrap();
        assert_eq!(y.len(), 1);
        assert_eq!(y[0], m[(0, 0)]);
        let back = ens.adjoint(&DVector::from_vec(vec![5.0])).unwrap();
        assert_eq!(back, 5.0 * indicator(3, 2, 0, 0));
    }

    #[test]
    fn zero_inputs() {
        let ens = MeasurementEnsemble::gaussian(4, 5, 3, 2).unwrap();
        assert_eq!(ens.apply(&DMatrix::zeros(4, 5)).unwrap().amax(), 0.0);
        assert_eq!(ens.adjoint(&DVector::zeros(3)).unwrap().amax(), 0.0);
    }

    #[test]
    fn apply_matches_double_loop() {
        let ens = MeasurementEnsemble::gaussian(4, 4, 3, 9).unwrap();
        let m = random_matrix(4, 4, 10);
        let y = ens.apply(&m).unwrap();
        for k in 0..3 {
            let h = ens.matrix(k);
            let mut s = 0.0;
            for i in 0..4 {
                for j in 0..4 {
                    s += h[(i, j)] * m[(i, j)];
                }
            }
            assert!((y[k] - s).abs() < 1e-13);
        }
    }

    #[test]
    fn adjoint_identity() {
        let ens = MeasurementEnsemble::gaussian(5, 5, 4, 3).unwrap();
        let mut rng = rng_from_seed(4);
        for t in 0..100 {
            let m = random_matrix(5, 5, 100 + t);
            let y = DVector::from_fn(4, |_, _| rng.sample::<f64, _>(StandardNormal));
            let lhs = ens.apply(&m).unwrap().dot(&y);
            let rhs = inner(&m, &ens.adjoint(&y).unwrap());
            assert!((lhs - rhs).abs() <= 1e-12 * m.norm() * y.norm());
        }
    }

    #[test]
    fn projection_fixes_span_and_kills_complement() {
        let ens = MeasurementEnsemble::gaussian(4, 3, 5, 8).unwrap();
        let y = DVector::from_vec(vec![1.0, -2.0, 0.5, 3.0, 0.25]);
        let inside = ens.adjoint(&y).unwrap();
        let p = ens.project_span(&inside).unwrap();
        assert!((&p - &inside).norm() <= 1e-10 * inside.norm());

        let m = random_matrix(4, 3, 1);
        let outside = ens.project_span_complement(&m).unwrap();
        assert!(ens.apply(&outside).unwrap().amax() < 1e-12);
        assert!(ens.project_span(&outside).unwrap().norm() < 1e-10);
    }

    #[test]
    fn full_count_projection_is_identity() {
        let ens = MeasurementEnsemble::gaussian(3, 3, 9, 21).unwrap();
        let m = random_matrix(3, 3, 2);
        let p = ens.project_span(&m).unwrap();
        assert!((&p - &m).norm() <= 1e-8 * m.norm());
    }

    #[test]
    fn overcomplete_ensemble_short_circuits() {
        let ens = MeasurementEnsemble::gaussian(2, 2, 7, 1).unwrap();
        assert!(ens.spans_everything());
        let m = random_matrix(2, 2, 3);
        assert_eq!(ens.project_span(&m).unwrap(), m);
    }

    #[test]
    fn degenerate_ensemble_rejected() {
        let e = indicator(2, 2, 0, 1);
        let err = MeasurementEnsemble::from_matrices(&[e.clone(), e]).unwrap_err();
        assert!(matches!(err, Error::GramSingular { .. }));
    }

    #[test]
    fn dimension_mismatch() {
        let ens = MeasurementEnsemble::gaussian(3, 3, 2, 0).unwrap();
        assert!(matches!(ens.apply(&DMatrix::zeros(2, 3)), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(ens.adjoint(&DVector::zeros(3)), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn streamed_matches_dense_and_prefixes_nest() {
        let dense = MeasurementEnsemble::gaussian(4, 3, 6, 77).unwrap();
        let streamed = StreamedEnsemble::gaussian(4, 3, 6, 77).unwrap();
        let m = random_matrix(4, 3, 5);
        let a = dense.apply(&m).unwrap();
        let b = streamed.apply(&m).unwrap();
        assert!((&a - &b).amax() < 1e-14);
        let y = DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert!((dense.adjoint(&y).unwrap() - streamed.adjoint(&y).unwrap()).amax() < 1e-13);

        let smaller = MeasurementEnsemble::gaussian(4, 3, 4, 77).unwrap();
        for i in 0..4 {
            assert_eq!(smaller.matrix(i), dense.matrix(i));
        }
    }
}
