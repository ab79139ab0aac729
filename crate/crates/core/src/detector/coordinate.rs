//! Coordinate descent on the negative log-likelihood.
//!
//! For coordinate `r` with `v = Sigma^{-1} a_r`, `s = a_r^H v` and
//! `q = v^H S v`, the exact minimizer of `f` along `gamma_r` subject to
//! `gamma_r >= 0` is `gamma_r + d` with `d = max((q - s) / s^2, -gamma_r)`.
//! The inverse is then refreshed with the Sherman-Morrison identity
//! `(Sigma + d a a^H)^{-1} = Sigma^{-1} - d v v^H / (1 + d s)`.

use rand::seq::SliceRandom;

use super::{Dictionary, SampleCovariance, Schedule};
use crate::codebook::ActivityVector;
use crate::linalg::{real_inner, SplitMatrix, SplitVec};
use crate::rng;

/// Current estimate and the inverse of its model covariance.
#[derive(Debug, Clone)]
pub struct DetectorState {
    gamma: Vec<f64>,
    sigma_inv: SplitMatrix,
    noise: f64,
    steps: usize,
    updates: usize,
    v: SplitVec,
    scratch: SplitVec,
}

impl DetectorState {
    /// `gamma = 0`, `Sigma^{-1} = I / N0`.
    pub fn new(num_columns: usize, subslot_len: usize, noise: f64) -> Self {
        assert!(noise > 0.0, "noise psd must be positive");
        DetectorState {
            gamma: vec![0.0; num_columns],
            sigma_inv: SplitMatrix::scaled_identity(subslot_len, 1.0 / noise),
            noise,
            steps: 0,
            updates: 0,
            v: SplitVec::zeros(subslot_len),
            scratch: SplitVec::zeros(subslot_len),
        }
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn noise(&self) -> f64 {
        self.noise
    }

    /// Coordinate steps taken so far.
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Steps that changed the estimate.
    pub fn updates(&self) -> usize {
        self.updates
    }

    pub fn sigma_inv(&self) -> nalgebra::DMatrix<num_complex::Complex64> {
        self.sigma_inv.to_dmatrix()
    }

    /// One exact coordinate minimization on `gamma_r`. Returns the step `d`.
    pub fn coordinate_step(&mut self, r: usize, dict: &Dictionary, cov: &SampleCovariance) -> f64 {
        let (a_re, a_im) = dict.columns().col(r);
        self.sigma_inv.mul_vec(a_re, a_im, &mut self.v);
        let s = real_inner(&self.v, a_re, a_im);
        let q = cov.quad_form(&self.v, &mut self.scratch);
        let d = ((q - s) / (s * s)).max(-self.gamma[r]);
        self.steps += 1;
        if d == 0.0 {
            return 0.0;
        }
        let denom = 1.0 + d * s;
        assert!(
            denom > 0.0 && denom.is_finite(),
            "numerical fault in rank-one update: 1 + d s = {denom}"
        );
        self.gamma[r] = (self.gamma[r] + d).max(0.0);
        self.sigma_inv.hermitian_rank_one(-d / denom, &self.v);
        self.updates += 1;
        d
    }

    /// `|Sigma^{-1} (A Gamma A^H + N0 I) - I|_F`.
    pub fn inverse_residual(&self, dict: &Dictionary) -> f64 {
        let sigma = super::model_covariance(&self.gamma, dict, self.noise);
        let n = sigma.nrows();
        let prod = self.sigma_inv.to_dmatrix() * sigma;
        let eye = nalgebra::DMatrix::<num_complex::Complex64>::identity(n, n);
        crate::linalg::frobenius(&(prod - eye))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdParams {
    pub max_epochs: usize,
    /// Stop once the largest `|d|` of a full epoch falls below this.
    pub tolerance: f64,
    pub schedule: Schedule,
    /// After each full epoch, sweep only the coordinates with `gamma_r > 0`
    /// up to this many times (or until they settle). 0 disables it.
    pub active_sweeps: usize,
    /// Seed of the per-epoch permutations (stream `epoch` of this seed).
    pub seed: u64,
}

impl Default for CdParams {
    fn default() -> Self {
        CdParams {
            max_epochs: 10,
            tolerance: 1e-6,
            schedule: Schedule::RandomPermutation,
            active_sweeps: 0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CdOutput {
    pub gamma: ActivityVector,
    pub epochs: usize,
    pub converged: bool,
    /// Largest `|d|` seen in the last epoch.
    pub last_max_step: f64,
}

/// Runs epochs of coordinate descent from `gamma = 0` over all coordinates.
pub fn ml_coordinate_descent(
    dict: &Dictionary,
    cov: &SampleCovariance,
    noise: f64,
    params: &CdParams,
) -> CdOutput {
    assert_eq!(dict.subslot_len(), cov.dim(), "dictionary and covariance sizes differ");
    let mut state = DetectorState::new(dict.num_columns(), dict.subslot_len(), noise);
    let mut order: Vec<usize> = (0..dict.num_columns()).collect();
    let mut active = Vec::new();
    let mut epochs = 0;
    let mut converged = false;
    let mut last_max_step = 0.0;
    while epochs < params.max_epochs {
        if params.schedule == Schedule::RandomPermutation {
            order.shuffle(&mut rng::stream(params.seed, rng::PURPOSE_SCHEDULE, epochs as u64));
        }
        let mut max_step = 0.0f64;
        for &r in &order {
            max_step = max_step.max(state.coordinate_step(r, dict, cov).abs());
        }
        epochs += 1;
        last_max_step = max_step;
        // Convergence is only ever declared on a full epoch.
        if max_step < params.tolerance {
            converged = true;
            break;
        }
        if params.active_sweeps > 0 && epochs < params.max_epochs {
            let mut prng = rng::stream(params.seed, rng::PURPOSE_SCHEDULE, (epochs as u64) << 32);
            active.clear();
            active.extend(order.iter().copied().filter(|&r| state.gamma[r] > 0.0));
            for _ in 0..params.active_sweeps {
                if params.schedule == Schedule::RandomPermutation {
                    active.shuffle(&mut prng);
                }
                let mut step = 0.0f64;
                for &r in &active {
                    step = step.max(state.coordinate_step(r, dict, cov).abs());
                }
                if step < params.tolerance {
                    break;
                }
            }
        }
    }
    CdOutput {
        gamma: ActivityVector(state.gamma),
        epochs,
        converged,
        last_max_step,
    }
}
