//! Independent reference implementations used as test oracles. Nothing here
//! calls into the detector's fast kernels: everything is dense nalgebra
//! arithmetic on `DMatrix<Complex64>`.
#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ura_core::channel::gaussian_matrix;
use ura_core::detector::{Dictionary, SampleCovariance};

pub type CMat = DMatrix<Complex64>;

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// A small detection problem drawn from the model itself.
pub struct Instance {
    pub a: CMat,
    pub gamma: Vec<f64>,
    pub noise: f64,
    pub s: CMat,
}

impl Instance {
    pub fn dict(&self) -> Dictionary {
        Dictionary::from_matrix(&self.a, 1.0)
    }

    pub fn cov(&self) -> SampleCovariance {
        SampleCovariance::from_matrix(self.s.clone())
    }
}

/// `A` with `CN(0, 1)` entries, `active` nonzero activities drawn from
/// `[0.5, 2]`, and a sample covariance from `antennas` snapshots.
pub fn random_instance(seed: u64, n0: usize, cols: usize, active: usize, antennas: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = gaussian_matrix(n0, cols, 1.0, &mut rng);
    let mut gamma = vec![0.0; cols];
    let mut placed = 0;
    while placed < active.min(cols) {
        let r = rng.random_range(0..cols);
        if gamma[r] == 0.0 {
            gamma[r] = rng.random_range(0.5..2.0);
            placed += 1;
        }
    }
    let noise = 1.0;
    let sigma = model_cov(&a, &gamma, noise);
    let half = sigma.cholesky().expect("model covariance is positive definite").l();
    let w = gaussian_matrix(n0, antennas, 1.0, &mut rng);
    let y = &half * w;
    let s = &y * y.adjoint() / c(antennas as f64);
    Instance { a, gamma, noise, s }
}

/// A fresh sample covariance of `antennas` snapshots for the same `A` and
/// `gamma`.
pub fn resample(inst: &Instance, antennas: usize, rng: &mut ChaCha8Rng) -> CMat {
    let half = model_cov(&inst.a, &inst.gamma, inst.noise).cholesky().expect("positive definite").l();
    let y = half * gaussian_matrix(inst.a.nrows(), antennas, 1.0, rng);
    &y * y.adjoint() / c(antennas as f64)
}

/// `A diag(gamma) A^H + N0 I` by explicit matrix products.
pub fn model_cov(a: &CMat, gamma: &[f64], noise: f64) -> CMat {
    let g = CMat::from_diagonal(&nalgebra::DVector::from_iterator(gamma.len(), gamma.iter().map(|&x| c(x))));
    a * g * a.adjoint() + CMat::identity(a.nrows(), a.nrows()) * c(noise)
}

/// `log det Sigma + tr(Sigma^{-1} S)` through LU.
pub fn nll(a: &CMat, gamma: &[f64], noise: f64, s: &CMat) -> f64 {
    let sigma = model_cov(a, gamma, noise);
    let lu = sigma.clone().lu();
    let det = lu.determinant();
    let inv = lu.try_inverse().expect("invertible");
    det.re.ln() + (inv * s).trace().re
}

/// `df/dgamma_r = a_r^H Sigma^{-1} a_r - a_r^H Sigma^{-1} S Sigma^{-1} a_r`.
pub fn nll_gradient(a: &CMat, gamma: &[f64], noise: f64, s: &CMat) -> Vec<f64> {
    let inv = model_cov(a, gamma, noise).try_inverse().expect("invertible");
    let m = &inv - &inv * s * &inv;
    (0..a.ncols())
        .map(|r| {
            let col = a.column(r);
            (col.adjoint() * &m * col)[(0, 0)].re
        })
        .collect()
}

fn project(x: &mut [f64]) {
    for v in x.iter_mut() {
        *v = v.max(0.0);
    }
}

/// Projected gradient with Armijo backtracking and Barzilai-Borwein initial
/// steps, started from zero.
pub fn ml_projected_gradient(inst: &Instance, max_iter: usize) -> (Vec<f64>, f64) {
    let f = |g: &[f64]| nll(&inst.a, g, inst.noise, &inst.s);
    let grad = |g: &[f64]| nll_gradient(&inst.a, g, inst.noise, &inst.s);
    let n = inst.a.ncols();
    let mut x = vec![0.0; n];
    let mut fx = f(&x);
    let mut gx = grad(&x);
    let mut step = 1e-2;
    for _ in 0..max_iter {
        let mut t = step;
        let (mut y, mut fy);
        loop {
            y = x.iter().zip(&gx).map(|(xi, gi)| xi - t * gi).collect::<Vec<_>>();
            project(&mut y);
            fy = f(&y);
            let decrease: f64 = x.iter().zip(&y).zip(&gx).map(|((xi, yi), gi)| gi * (xi - yi)).sum();
            if fy <= fx - 1e-4 * decrease || t < 1e-20 {
                break;
            }
            t *= 0.5;
        }
        let gy = grad(&y);
        let sx: Vec<f64> = y.iter().zip(&x).map(|(a, b)| a - b).collect();
        let sg: Vec<f64> = gy.iter().zip(&gx).map(|(a, b)| a - b).collect();
        let ss: f64 = sx.iter().map(|v| v * v).sum();
        let sy: f64 = sx.iter().zip(&sg).map(|(a, b)| a * b).sum();
        let moved = ss.sqrt();
        x = y;
        let df = fx - fy;
        fx = fy;
        gx = gy;
        step = if sy > 0.0 { (ss / sy).clamp(1e-10, 1e6) } else { 1.0 };
        if moved < 1e-14 || ((0.0..1e-15).contains(&df) && moved < 1e-10) {
            break;
        }
    }
    (x, fx)
}

/// `|A diag(gamma) A^H + N0 I - S|_F^2`.
pub fn nnls_obj(inst: &Instance, gamma: &[f64]) -> f64 {
    (model_cov(&inst.a, gamma, inst.noise) - &inst.s).iter().map(|z| z.norm_sqr()).sum()
}

/// Accelerated projected gradient (FISTA with restarts) on the NNLS
/// objective, written as a real quadratic `gamma^T G gamma - 2 b^T gamma`
/// with `G_rs = |a_r^H a_s|^2` and `b_r = a_r^H (S - N0 I) a_r`.
pub fn nnls_projected_gradient(inst: &Instance, max_iter: usize) -> Vec<f64> {
    let n = inst.a.ncols();
    let target = &inst.s - CMat::identity(inst.a.nrows(), inst.a.nrows()) * c(inst.noise);
    let gram = inst.a.adjoint() * &inst.a;
    let g = DMatrix::<f64>::from_fn(n, n, |r, s| gram[(r, s)].norm_sqr());
    let b: Vec<f64> = (0..n)
        .map(|r| {
            let col = inst.a.column(r);
            (col.adjoint() * &target * col)[(0, 0)].re
        })
        .collect();
    let lipschitz = g.symmetric_eigenvalues().max();
    let step = 1.0 / lipschitz;
    let grad = |x: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|r| (0..n).map(|s| g[(r, s)] * x[s]).sum::<f64>() - b[r])
            .collect()
    };
    let quad = |x: &[f64]| -> f64 {
        let gx = grad(x);
        x.iter().zip(&gx).zip(&b).map(|((xi, gi), bi)| xi * (gi - bi)).sum()
    };
    let mut x = vec![0.0; n];
    let mut z = x.clone();
    let mut t = 1.0f64;
    let mut fx = quad(&x);
    for _ in 0..max_iter {
        let gz = grad(&z);
        let mut xn: Vec<f64> = z.iter().zip(&gz).map(|(zi, gi)| zi - step * gi).collect();
        project(&mut xn);
        let fxn = quad(&xn);
        if fxn > fx {
            // restart momentum
            z = x.clone();
            t = 1.0;
            continue;
        }
        let tn = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        let beta = (t - 1.0) / tn;
        z = xn.iter().zip(&x).map(|(a, b)| a + beta * (a - b)).collect();
        let moved: f64 = xn.iter().zip(&x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        x = xn;
        fx = fxn;
        t = tn;
        if moved < 1e-15 {
            break;
        }
    }
    x
}

pub fn rel_frobenius(a: &CMat, b: &CMat) -> f64 {
    (a - b).norm() / b.norm()
}
