//! Column-major complex matrices with split real/imaginary storage.
//!
//! The detector's inner loop is a handful of complex matrix-vector products
//! and rank-one updates on `n0 x n0` matrices. Keeping real and imaginary
//! parts in separate contiguous arrays lets those loops vectorize.

use nalgebra::DMatrix;
use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct SplitMatrix {
    rows: usize,
    cols: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

/// A complex vector in split storage.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitVec {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl SplitVec {
    pub fn zeros(n: usize) -> Self {
        SplitVec {
            re: vec![0.0; n],
            im: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.re.len()
    }

    pub fn is_empty(&self) -> bool {
        self.re.is_empty()
    }
}

impl SplitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        SplitMatrix {
            rows,
            cols,
            re: vec![0.0; rows * cols],
            im: vec![0.0; rows * cols],
        }
    }

    pub fn scaled_identity(n: usize, s: f64) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.re[i * n + i] = s;
        }
        m
    }

    pub fn from_dmatrix(m: &DMatrix<Complex64>, scale: f64) -> Self {
        let (rows, cols) = m.shape();
        let (re, im) = m.as_slice().iter().map(|z| (z.re * scale, z.im * scale)).unzip();
        SplitMatrix { rows, cols, re, im }
    }

    pub fn to_dmatrix(&self) -> DMatrix<Complex64> {
        DMatrix::from_iterator(
            self.rows,
            self.cols,
            self.re.iter().zip(&self.im).map(|(&r, &i)| Complex64::new(r, i)),
        )
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn col(&self, j: usize) -> (&[f64], &[f64]) {
        let r = j * self.rows..(j + 1) * self.rows;
        (&self.re[r.clone()], &self.im[r])
    }

    pub fn col_norm_sqr(&self, j: usize) -> f64 {
        let (re, im) = self.col(j);
        re.iter().zip(im).map(|(a, b)| a * a + b * b).sum()
    }

    /// `out = self * x` for a `rows x cols` matrix.
    pub fn mul_vec(&self, x_re: &[f64], x_im: &[f64], out: &mut SplitVec) {
        debug_assert_eq!(x_re.len(), self.cols);
        out.re.fill(0.0);
        out.im.fill(0.0);
        for j in 0..self.cols {
            let (xr, xi) = (x_re[j], x_im[j]);
            if xr == 0.0 && xi == 0.0 {
                continue;
            }
            let (cr, ci) = self.col(j);
            for (((or, oi), &ar), &ai) in out.re.iter_mut().zip(out.im.iter_mut()).zip(cr).zip(ci) {
                *or += ar * xr - ai * xi;
                *oi += ar * xi + ai * xr;
            }
        }
    }

    /// `out = self^H * x`; entry `c` is `<col_c, x>`.
    pub fn adjoint_mul_vec(&self, x_re: &[f64], x_im: &[f64], out: &mut SplitVec) {
        debug_assert_eq!(x_re.len(), self.rows);
        for c in 0..self.cols {
            let (cr, ci) = self.col(c);
            let (mut sr, mut si) = (0.0, 0.0);
            for (((&ar, &ai), &xr), &xi) in cr.iter().zip(ci).zip(x_re).zip(x_im) {
                sr += ar * xr + ai * xi;
                si += ar * xi - ai * xr;
            }
            out.re[c] = sr;
            out.im[c] = si;
        }
    }

    /// `self += alpha * v v^H` for square `self` and real `alpha`.
    pub fn hermitian_rank_one(&mut self, alpha: f64, v: &SplitVec) {
        let n = self.rows;
        debug_assert_eq!(n, self.cols);
        for j in 0..n {
            // column j gains alpha * conj(v_j) * v
            let sr = alpha * v.re[j];
            let si = -alpha * v.im[j];
            let r = j * n..(j + 1) * n;
            let (cr, ci) = (&mut self.re[r.clone()], &mut self.im[r]);
            for (((or, oi), &vr), &vi) in cr.iter_mut().zip(ci.iter_mut()).zip(&v.re).zip(&v.im) {
                *or += vr * sr - vi * si;
                *oi += vr * si + vi * sr;
            }
        }
    }

    /// `self += alpha * a a^H` where `a` is column `j` of `other`.
    pub fn hermitian_rank_one_col(&mut self, alpha: f64, other: &SplitMatrix, j: usize) {
        let (re, im) = other.col(j);
        let v = SplitVec {
            re: re.to_vec(),
            im: im.to_vec(),
        };
        self.hermitian_rank_one(alpha, &v);
    }
}

/// `Re(x^H y)`.
pub fn real_inner(x: &SplitVec, y_re: &[f64], y_im: &[f64]) -> f64 {
    x.re.iter()
        .zip(&x.im)
        .zip(y_re)
        .zip(y_im)
        .map(|(((&a, &b), &c), &d)| a * c + b * d)
        .sum()
}

pub fn norm_sqr(v: &SplitVec) -> f64 {
    v.re.iter().zip(&v.im).map(|(a, b)| a * a + b * b).sum()
}

pub fn frobenius(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(rows: usize, cols: usize, seed: f64) -> DMatrix<Complex64> {
        DMatrix::from_fn(rows, cols, |i, j| {
            let t = seed + (i * 7 + j * 3) as f64;
            Complex64::new(t.sin(), (1.3 * t).cos())
        })
    }

    #[test]
    fn products_match_dense() {
        let m = sample(5, 3, 0.2);
        let x = DMatrix::from_fn(3, 1, |i, _| Complex64::new(i as f64 - 1.0, 0.5 * i as f64));
        let y = DMatrix::from_fn(5, 1, |i, _| Complex64::new(0.3 * i as f64, 1.0 - i as f64));
        let s = SplitMatrix::from_dmatrix(&m, 1.0);
        let mut out = SplitVec::zeros(5);
        let xs: (Vec<f64>, Vec<f64>) = x.iter().map(|z| (z.re, z.im)).unzip();
        s.mul_vec(&xs.0, &xs.1, &mut out);
        let want = &m * &x;
        for i in 0..5 {
            assert!((Complex64::new(out.re[i], out.im[i]) - want[i]).norm() < 1e-14);
        }
        let ys: (Vec<f64>, Vec<f64>) = y.iter().map(|z| (z.re, z.im)).unzip();
        let mut out = SplitVec::zeros(3);
        s.adjoint_mul_vec(&ys.0, &ys.1, &mut out);
        let want = m.adjoint() * &y;
        for i in 0..3 {
            assert!((Complex64::new(out.re[i], out.im[i]) - want[i]).norm() < 1e-14);
        }
    }

    #[test]
    fn rank_one_matches_dense() {
        let base = sample(4, 4, 1.0);
        let v = sample(4, 1, 2.0);
        let mut s = SplitMatrix::from_dmatrix(&base, 1.0);
        let vs = SplitVec {
            re: v.iter().map(|z| z.re).collect(),
            im: v.iter().map(|z| z.im).collect(),
        };
        s.hermitian_rank_one(-0.7, &vs);
        let want = &base - (&v * v.adjoint()) * Complex64::new(0.7, 0.0);
        assert!(frobenius(&(s.to_dmatrix() - want)) < 1e-13);
    }
}
