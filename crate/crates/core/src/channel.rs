//! Block Rayleigh fading MIMO channel with AWGN:
//! `Y_l = sqrt(P_l) A B_l G^{1/2} H + Z_l`.
//!
//! A `CN(0, v)` sample is two independent standard normals (real part drawn
//! first) each scaled by `sqrt(v / 2)`. Matrices are filled in column-major
//! order.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::codebook::{ActivityAssignment, ActivityVector, Codebook};
use crate::error::SignalError;

pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, variance: f64, rng: &mut R) -> DMatrix<Complex64> {
    let mut m = DMatrix::from_element(rows, cols, Complex64::new(0.0, 0.0));
    for z in m.iter_mut() {
        *z = complex_gaussian(rng, variance);
    }
    m
}

/// Small-scale fading coefficients, one row per user, one column per antenna.
#[derive(Debug, Clone, PartialEq)]
pub struct FadingMatrix(pub DMatrix<Complex64>);

pub fn draw_fading<R: Rng + ?Sized>(users: usize, antennas: usize, rng: &mut R) -> FadingMatrix {
    FadingMatrix(gaussian_matrix(users, antennas, 1.0, rng))
}

/// Received `n0 x M` subslot signal.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedSignal(pub DMatrix<Complex64>);

impl ReceivedSignal {
    pub fn antennas(&self) -> usize {
        self.0.ncols()
    }
}

/// Synthesizes one subslot from the per-user form of the model.
pub fn transmit_subslot<R: Rng + ?Sized>(
    codebook: &Codebook,
    assignment: &ActivityAssignment,
    gains: &[f64],
    fading: &FadingMatrix,
    noise_psd: f64,
    power: f64,
    rng: &mut R,
) -> Result<ReceivedSignal, SignalError> {
    let users = assignment.indices.len();
    let h = &fading.0;
    if gains.len() != users || h.nrows() < users {
        return Err(SignalError::Dimension(format!(
            "{users} users, {} gains, fading has {} rows",
            gains.len(),
            h.nrows()
        )));
    }
    if assignment.num_columns != codebook.num_columns() {
        return Err(SignalError::Dimension("assignment does not match codebook".into()));
    }
    if !(noise_psd >= 0.0) {
        return Err(SignalError::Dimension(format!("noise psd {noise_psd}")));
    }
    let n0 = codebook.subslot_len();
    let antennas = h.ncols();
    let mut y = gaussian_matrix(n0, antennas, noise_psd, rng);
    for (k, (&idx, &g)) in assignment.indices.iter().zip(gains).enumerate() {
        let col = codebook.column(idx as usize);
        let amp = (power * g).sqrt();
        for m in 0..antennas {
            let c = h[(k, m)] * amp;
            for (yy, &a) in y.column_mut(m).iter_mut().zip(col) {
                *yy += a * c;
            }
        }
    }
    Ok(ReceivedSignal(y))
}

/// Synthesizes one subslot from the activity form
/// `Y = sqrt(P) A Gamma^{1/2} H~ + Z`, with `H~` having one row per codebook
/// column. Rows of `H~` for inactive columns are ignored.
pub fn transmit_activity<R: Rng + ?Sized>(
    codebook: &Codebook,
    gamma: &ActivityVector,
    fading_rows: &FadingMatrix,
    noise_psd: f64,
    power: f64,
    rng: &mut R,
) -> Result<ReceivedSignal, SignalError> {
    let h = &fading_rows.0;
    if gamma.0.len() != codebook.num_columns() || h.nrows() != codebook.num_columns() {
        return Err(SignalError::Dimension("activity form dimensions".into()));
    }
    let n0 = codebook.subslot_len();
    let mut y = gaussian_matrix(n0, h.ncols(), noise_psd, rng);
    for (r, &g) in gamma.0.iter().enumerate() {
        if g == 0.0 {
            continue;
        }
        let col = codebook.column(r);
        let amp = (power * g).sqrt();
        for m in 0..h.ncols() {
            let c = h[(r, m)] * amp;
            for (yy, &a) in y.column_mut(m).iter_mut().zip(col) {
                *yy += a * c;
            }
        }
    }
    Ok(ReceivedSignal(y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::generate_codebook;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fading_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = draw_fading(1000, 1000, &mut rng).0;
        let n = h.len() as f64;
        let mean: Complex64 = h.iter().sum::<Complex64>() / n;
        assert!(mean.norm() < 4.0 / n.sqrt(), "mean {mean}");
        let var = h.iter().map(|z| z.norm_sqr()).sum::<f64>() / n;
        assert!((var - 1.0).abs() < 0.01, "var {var}");
        let re_var = h.iter().map(|z| z.re * z.re).sum::<f64>() / n;
        assert!((re_var - 0.5).abs() < 0.01);
    }

    #[test]
    fn fading_reproducible() {
        let a = draw_fading(3, 4, &mut ChaCha8Rng::seed_from_u64(5));
        let b = draw_fading(3, 4, &mut ChaCha8Rng::seed_from_u64(5));
        assert_eq!(a, b);
    }

    #[test]
    fn noiseless_single_path() {
        let cb = generate_codebook(6, 3, 2);
        let asg = ActivityAssignment {
            indices: vec![5],
            num_columns: 8,
        };
        let h = FadingMatrix(DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0)));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let y = transmit_subslot(&cb, &asg, &[1.0], &h, 0.0, 0.25, &mut rng).unwrap();
        for (yy, a) in y.0.iter().zip(cb.column(5)) {
            assert!((yy - a * 0.5).norm() < 1e-15);
        }
    }

    #[test]
    fn noise_only() {
        let cb = generate_codebook(50, 3, 2);
        let asg = ActivityAssignment {
            indices: vec![],
            num_columns: 8,
        };
        let h = FadingMatrix(DMatrix::zeros(0, 400));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let y = transmit_subslot(&cb, &asg, &[], &h, 2.0, 1.0, &mut rng).unwrap();
        let var = y.0.iter().map(|z| z.norm_sqr()).sum::<f64>() / y.0.len() as f64;
        assert!((var - 2.0).abs() < 0.02, "var {var}");
    }

    #[test]
    fn dimension_mismatch() {
        let cb = generate_codebook(4, 2, 2);
        let asg = ActivityAssignment {
            indices: vec![1, 2],
            num_columns: 4,
        };
        let h = FadingMatrix(DMatrix::zeros(1, 3));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(transmit_subslot(&cb, &asg, &[1.0, 1.0], &h, 1.0, 1.0, &mut rng).is_err());
    }
}
