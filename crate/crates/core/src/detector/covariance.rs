use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::channel::ReceivedSignal;
use crate::linalg::{norm_sqr, real_inner, SplitMatrix, SplitVec};

/// Sample covariance `(1/M) Y Y^H`, exactly Hermitian.
///
/// When built from a signal with fewer antennas than rows, the scaled signal
/// `Y / sqrt(M)` is kept as a factor so quadratic forms cost `n0 M` instead of
/// `n0^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleCovariance {
    matrix: DMatrix<Complex64>,
    split: SplitMatrix,
    factor: Option<SplitMatrix>,
}

pub fn empirical_covariance(y: &ReceivedSignal) -> SampleCovariance {
    let m = y.antennas().max(1) as f64;
    let raw = &y.0 * y.0.adjoint() / Complex64::new(m, 0.0);
    let mut cov = SampleCovariance::from_matrix(raw);
    if y.0.ncols() < y.0.nrows() {
        cov.factor = Some(SplitMatrix::from_dmatrix(&y.0, 1.0 / m.sqrt()));
    }
    cov
}

impl SampleCovariance {
    /// Wraps a given covariance, replacing it by its Hermitian part.
    pub fn from_matrix(m: DMatrix<Complex64>) -> Self {
        assert!(m.is_square(), "covariance must be square");
        let matrix = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
        let split = SplitMatrix::from_dmatrix(&matrix, 1.0);
        SampleCovariance {
            matrix,
            split,
            factor: None,
        }
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `v^H S v`; `scratch` must have length `n0` (dense path) or the factor
    /// rank.
    pub(crate) fn quad_form(&self, v: &SplitVec, scratch: &mut SplitVec) -> f64 {
        match &self.factor {
            Some(f) => {
                scratch.re.resize(f.cols(), 0.0);
                scratch.im.resize(f.cols(), 0.0);
                f.adjoint_mul_vec(&v.re, &v.im, scratch);
                norm_sqr(scratch)
            }
            None => {
                scratch.re.resize(self.dim(), 0.0);
                scratch.im.resize(self.dim(), 0.0);
                self.split.mul_vec(&v.re, &v.im, scratch);
                real_inner(v, &scratch.re, &scratch.im)
            }
        }
    }
}
