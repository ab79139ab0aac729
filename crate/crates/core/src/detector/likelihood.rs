use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{Dictionary, SampleCovariance};
use crate::linalg::SplitMatrix;

/// `A diag(gamma) A^H + N0 I`.
pub fn model_covariance(gamma: &[f64], dict: &Dictionary, noise: f64) -> DMatrix<Complex64> {
    assert_eq!(gamma.len(), dict.num_columns());
    let mut sigma = SplitMatrix::scaled_identity(dict.subslot_len(), noise);
    for (r, &g) in gamma.iter().enumerate() {
        if g != 0.0 {
            sigma.hermitian_rank_one_col(g, dict.columns(), r);
        }
    }
    sigma.to_dmatrix()
}

/// `f(gamma) = log det Sigma + tr(Sigma^{-1} S)` with
/// `Sigma = A diag(gamma) A^H + N0 I`, evaluated through a Cholesky
/// factorization. Returns NaN if `Sigma` is not numerically positive definite.
pub fn neg_log_likelihood(gamma: &[f64], dict: &Dictionary, cov: &SampleCovariance, noise: f64) -> f64 {
    let sigma = model_covariance(gamma, dict, noise);
    let Some(chol) = sigma.cholesky() else {
        return f64::NAN;
    };
    let l = chol.l_dirty();
    let log_det: f64 = (0..l.nrows()).map(|i| 2.0 * l[(i, i)].re.ln()).sum();
    let trace = chol.solve(cov.matrix()).trace().re;
    log_det + trace
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::gaussian_matrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn instance(seed: u64) -> (DMatrix<Complex64>, Vec<f64>, DMatrix<Complex64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = gaussian_matrix(4, 8, 1.0, &mut rng);
        let gamma: Vec<f64> = (0..8).map(|i| if i % 3 == 0 { 0.7 + 0.1 * i as f64 } else { 0.0 }).collect();
        let y = gaussian_matrix(4, 6, 1.0, &mut rng);
        (a, gamma, &y * y.adjoint() / Complex64::new(6.0, 0.0))
    }

    #[test]
    fn zero_gamma_closed_form() {
        let (a, _, s) = instance(1);
        let dict = Dictionary::from_matrix(&a, 1.0);
        let cov = SampleCovariance::from_matrix(s.clone());
        let noise = 0.5;
        let f = neg_log_likelihood(&[0.0; 8], &dict, &cov, noise);
        let want = 4.0 * noise.ln() + s.trace().re / noise;
        assert!((f - want).abs() < 1e-12 * want.abs());
    }

    #[test]
    fn perfect_fit_value() {
        let (a, gamma, _) = instance(2);
        let dict = Dictionary::from_matrix(&a, 1.0);
        let sigma = model_covariance(&gamma, &dict, 1.3);
        let cov = SampleCovariance::from_matrix(sigma.clone());
        let f = neg_log_likelihood(&gamma, &dict, &cov, 1.3);
        let log_det = sigma.determinant().re.ln();
        assert!((f - (log_det + 4.0)).abs() < 1e-10);
    }

    #[test]
    fn matches_explicit_determinant_and_inverse() {
        for seed in 0..10 {
            let (a, gamma, s) = instance(seed + 10);
            let dict = Dictionary::from_matrix(&a, 1.0);
            let cov = SampleCovariance::from_matrix(s.clone());
            let noise = 0.8;
            // Oracle built directly from A, not through the split kernels.
            let g = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                8,
                gamma.iter().map(|&x| Complex64::new(x, 0.0)),
            ));
            let sigma = &a * g * a.adjoint() + DMatrix::identity(4, 4) * Complex64::new(noise, 0.0);
            let det = sigma.clone().lu().determinant();
            let inv = sigma.try_inverse().unwrap();
            let want = det.re.ln() + (inv * &s).trace().re;
            let f = neg_log_likelihood(&gamma, &dict, &cov, noise);
            assert!((f - want).abs() <= 1e-10 * want.abs(), "{f} vs {want}");
        }
    }
}
