//! Measurement ensembles, structured-subspace projectors, golfing blocks and
//! subspace-angle estimation.

mod angle;
mod ensemble;
mod golfing;
mod subspace;

pub(crate) use angle::angle_or_exact;
pub use angle::{
    subspace_angle, subspace_angle_exact, subspace_angle_with, DEFAULT_ANGLE_MAX_ITERS,
    DEFAULT_ANGLE_TOL,
};
pub use ensemble::{
    dense_footprint, MeasurementEnsemble, MeasurementOperator, StreamedEnsemble,
    GRAM_CONDITION_FLOOR,
};
pub use golfing::GolfingBlock;
pub use subspace::{SubspaceDescriptor, DIRECT_SUM_DROP_TOL};

/// The identity map viewed as `mn` measurements (one per entry); turns the
/// compressive solver into a plain PCP solver.
#[derive(Debug, Clone, Copy)]
pub struct IdentityMeasurement {
    pub rows: usize,
    pub cols: usize,
}

impl MeasurementOperator for IdentityMeasurement {
    fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    fn measurements(&self) -> usize {
        self.rows * self.cols
    }

    fn apply(&self, m: &crate::DenseMatrix) -> crate::Result<nalgebra::DVector<f64>> {
        self.check_matrix(m)?;
        Ok(crate::linalg::vectorize(m))
    }

    fn adjoint(&self, y: &nalgebra::DVector<f64>) -> crate::Result<crate::DenseMatrix> {
        self.check_vector(y)?;
        Ok(crate::linalg::unvectorize(y.as_slice(), self.rows, self.cols))
    }
}
