//! Inner code: the common `n0 x 2^J` coding matrix `A` and the mapping of
//! the active users' sub-message indices to the activity vector `gamma`.
//!
//! Columns are i.i.d. circularly-symmetric complex Gaussian, then rescaled to
//! `|a_i|^2 = n0` exactly. Subslot power is applied at transmit time as a
//! multiplicative `sqrt(P_l)`.
//!
//! Binary file layout (all little-endian): `u64 rows`, `u64 cols`, then
//! `rows * cols` pairs `(re: f64, im: f64)` in row-major order.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::channel::complex_gaussian;
use crate::error::SignalError;
use crate::outer_code::MessagePath;

#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    matrix: DMatrix<Complex64>,
}

/// Draws the codebook from ChaCha20 seeded with `seed_from_u64(seed)`,
/// column by column, real part before imaginary part.
pub fn generate_codebook(subslot_len: usize, index_bits: u32, seed: u64) -> Codebook {
    let cols = 1usize << index_bits;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut matrix = DMatrix::from_fn(subslot_len, cols, |_, _| Complex64::new(0.0, 0.0));
    for mut col in matrix.column_iter_mut() {
        for z in col.iter_mut() {
            *z = complex_gaussian(&mut rng, 1.0);
        }
        let norm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let scale = (subslot_len as f64).sqrt() / norm;
        for z in col.iter_mut() {
            *z *= scale;
        }
    }
    Codebook { matrix }
}

impl Codebook {
    pub fn from_matrix(matrix: DMatrix<Complex64>) -> Self {
        Codebook { matrix }
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn subslot_len(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn num_columns(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn column(&self, r: usize) -> &[Complex64] {
        let n = self.matrix.nrows();
        &self.matrix.as_slice()[r * n..(r + 1) * n]
    }

    pub fn column_norm_sqr(&self, r: usize) -> f64 {
        self.column(r).iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn write_binary<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let (rows, cols) = self.matrix.shape();
        w.write_all(&(rows as u64).to_le_bytes())?;
        w.write_all(&(cols as u64).to_le_bytes())?;
        for i in 0..rows {
            for j in 0..cols {
                let z = self.matrix[(i, j)];
                w.write_all(&z.re.to_le_bytes())?;
                w.write_all(&z.im.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self, SignalError> {
        let io = |e: std::io::Error| SignalError::CodebookFile(e.to_string());
        let mut word = [0u8; 8];
        r.read_exact(&mut word).map_err(io)?;
        let rows = u64::from_le_bytes(word) as usize;
        r.read_exact(&mut word).map_err(io)?;
        let cols = u64::from_le_bytes(word) as usize;
        let len = rows
            .checked_mul(cols)
            .filter(|&n| n <= 1 << 32)
            .ok_or_else(|| SignalError::CodebookFile(format!("implausible shape {rows} x {cols}")))?;
        let mut data = vec![0u8; len * 16];
        r.read_exact(&mut data).map_err(io)?;
        let values = data.chunks_exact(16).map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..].try_into().unwrap()),
            )
        });
        Ok(Codebook {
            matrix: DMatrix::from_row_iterator(rows, cols, values),
        })
    }
}

/// Which codebook column each active user sends in one subslot; column `k`
/// of the activity matrix `B_l` is `e_{indices[k]}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActivityAssignment {
    pub indices: Vec<u32>,
    pub num_columns: usize,
}

/// Nonnegative activity vector, `gamma_r = sum of g_k over users sending r`.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivityVector(pub Vec<f64>);

impl ActivityVector {
    pub fn support(&self) -> Vec<u32> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &g)| g > 0.0)
            .map(|(r, _)| r as u32)
            .collect()
    }

    pub fn mass(&self) -> f64 {
        self.0.iter().sum()
    }
}

pub fn assign_activity(
    paths: &[MessagePath],
    subslot: usize,
    gains: &[f64],
    num_columns: usize,
) -> Result<(ActivityAssignment, ActivityVector), SignalError> {
    if gains.len() != paths.len() {
        return Err(SignalError::Dimension(format!(
            "{} gains for {} users",
            gains.len(),
            paths.len()
        )));
    }
    let indices: Vec<u32> = paths.iter().map(|p| p.indices[subslot]).collect();
    let mut gamma = vec![0.0; num_columns];
    for (&i, &g) in indices.iter().zip(gains) {
        let slot = gamma
            .get_mut(i as usize)
            .ok_or_else(|| SignalError::Dimension(format!("index {i} >= {num_columns}")))?;
        *slot += g;
    }
    Ok((
        ActivityAssignment {
            indices,
            num_columns,
        },
        ActivityVector(gamma),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::outer_code::Payload;

    fn path(indices: Vec<u32>) -> MessagePath {
        MessagePath {
            payload: Payload::new(vec![]),
            indices,
        }
    }

    #[test]
    fn columns_are_normalized() {
        let cb = generate_codebook(100, 12, 7);
        assert_eq!(cb.matrix().shape(), (100, 4096));
        for r in 0..cb.num_columns() {
            assert!((cb.column_norm_sqr(r) - 100.0).abs() < 1e-9);
        }
    }

    #[test]
    fn degenerate_codebook() {
        let cb = generate_codebook(5, 0, 1);
        assert_eq!(cb.num_columns(), 1);
        assert!((cb.column_norm_sqr(0) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn deterministic_in_seed() {
        assert_eq!(generate_codebook(8, 4, 3), generate_codebook(8, 4, 3));
        assert_ne!(generate_codebook(8, 4, 3), generate_codebook(8, 4, 4));
    }

    #[test]
    fn binary_roundtrip_and_layout() {
        let cb = generate_codebook(3, 2, 9);
        let mut buf = Vec::new();
        cb.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 16 + 3 * 4 * 16);
        assert_eq!(u64::from_le_bytes(buf[..8].try_into().unwrap()), 3);
        assert_eq!(u64::from_le_bytes(buf[8..16].try_into().unwrap()), 4);
        // second value in the file is row 0, column 1
        let re = f64::from_le_bytes(buf[32..40].try_into().unwrap());
        assert_eq!(re, cb.matrix()[(0, 1)].re);
        assert_eq!(Codebook::read_binary(&buf[..]).unwrap(), cb);
        assert!(Codebook::read_binary(&buf[..40]).is_err());
    }

    #[test]
    fn single_user_activity() {
        let (a, g) = assign_activity(&[path(vec![7])], 0, &[1.0], 16).unwrap();
        assert_eq!(a.indices, vec![7]);
        let mut want = vec![0.0; 16];
        want[7] = 1.0;
        assert_eq!(g.0, want);
    }

    #[test]
    fn collisions_sum_gains() {
        let (_, g) = assign_activity(&[path(vec![3]), path(vec![3])], 0, &[1.0, 1.0], 8).unwrap();
        assert_eq!(g.0[3], 2.0);
        assert_eq!(g.support(), vec![3]);
    }

    #[test]
    fn gains_length_checked() {
        assert!(assign_activity(&[path(vec![3])], 0, &[], 8).is_err());
    }
}
