//! Non-negative least-squares covariance matching:
//! `min_{gamma >= 0} | sum_r gamma_r a_r a_r^H - (S - N0 I) |_F^2`.
//!
//! Solved matrix-free by exact projected coordinate descent on the residual
//! matrix, followed by an unconstrained least-squares polish on the detected
//! support (accepted only when it stays feasible and lowers the objective).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{Dictionary, SampleCovariance};
use crate::codebook::ActivityVector;
use crate::linalg::{real_inner, SplitMatrix, SplitVec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NnlsParams {
    pub max_sweeps: usize,
    /// Stop once the largest `|delta| |a_r|^2` of a sweep falls below this.
    pub tolerance: f64,
}

impl Default for NnlsParams {
    fn default() -> Self {
        NnlsParams {
            max_sweeps: 20_000,
            tolerance: 1e-13,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NnlsOutput {
    pub gamma: ActivityVector,
    pub sweeps: usize,
    pub objective: f64,
}

/// The NNLS objective evaluated directly.
pub fn nnls_objective(gamma: &[f64], dict: &Dictionary, cov: &SampleCovariance, noise: f64) -> f64 {
    let model = super::model_covariance(gamma, dict, noise);
    (model - cov.matrix()).iter().map(|z| z.norm_sqr()).sum()
}

pub fn nnls_estimate(dict: &Dictionary, cov: &SampleCovariance, noise: f64, params: &NnlsParams) -> NnlsOutput {
    let n0 = dict.subslot_len();
    let cols = dict.num_columns();
    assert_eq!(n0, cov.dim());
    // residual = model - S, starting from gamma = 0
    let start = DMatrix::<Complex64>::identity(n0, n0) * Complex64::new(noise, 0.0) - cov.matrix();
    let mut residual = SplitMatrix::from_dmatrix(&start, 1.0);
    let mut gamma = vec![0.0; cols];
    let mut u = SplitVec::zeros(n0);
    let mut sweeps = 0;
    while sweeps < params.max_sweeps {
        let mut max_change = 0.0f64;
        for r in 0..cols {
            let (a_re, a_im) = dict.columns().col(r);
            let norm = dict.column_norm_sqr(r);
            if norm == 0.0 {
                continue;
            }
            residual.mul_vec(a_re, a_im, &mut u);
            let grad = real_inner(&u, a_re, a_im);
            let next = (gamma[r] - grad / (norm * norm)).max(0.0);
            let delta = next - gamma[r];
            if delta != 0.0 {
                residual.hermitian_rank_one_col(delta, dict.columns(), r);
                gamma[r] = next;
                max_change = max_change.max(delta.abs() * norm);
            }
        }
        sweeps += 1;
        if max_change < params.tolerance {
            break;
        }
    }

    polish(&mut gamma, dict, cov, noise);
    let objective = nnls_objective(&gamma, dict, cov, noise);
    NnlsOutput {
        gamma: ActivityVector(gamma),
        sweeps,
        objective,
    }
}

/// Solves the normal equations restricted to the current support.
fn polish(gamma: &mut [f64], dict: &Dictionary, cov: &SampleCovariance, noise: f64) {
    let support: Vec<usize> = (0..gamma.len()).filter(|&r| gamma[r] > 0.0).collect();
    if support.is_empty() || support.len() > 1024 {
        return;
    }
    let a = dict.to_dmatrix();
    let target = cov.matrix() - DMatrix::<Complex64>::identity(cov.dim(), cov.dim()) * Complex64::new(noise, 0.0);
    let k = support.len();
    let mut gram = DMatrix::<f64>::zeros(k, k);
    let mut rhs = DVector::<f64>::zeros(k);
    for (i, &r) in support.iter().enumerate() {
        let ar = a.column(r);
        rhs[i] = (ar.adjoint() * &target * ar)[(0, 0)].re;
        for (j, &s) in support.iter().enumerate().skip(i) {
            let g = ar.dotc(&a.column(s)).norm_sqr();
            gram[(i, j)] = g;
            gram[(j, i)] = g;
        }
    }
    let Some(chol) = gram.cholesky() else {
        return;
    };
    let sol = chol.solve(&rhs);
    if sol.iter().any(|&x| !(x > 0.0)) {
        return;
    }
    let mut candidate = gamma.to_vec();
    for (i, &r) in support.iter().enumerate() {
        candidate[r] = sol[i];
    }
    if nnls_objective(&candidate, dict, cov, noise) <= nnls_objective(gamma, dict, cov, noise) {
        gamma.copy_from_slice(&candidate);
    }
}
