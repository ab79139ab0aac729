//! Per-subslot activity detection: sample covariance, the covariance
//! negative log-likelihood, coordinate-descent ML estimation with rank-one
//! inverse updates, an NNLS baseline, and hard support decisions.

mod coordinate;
mod covariance;
mod likelihood;
mod nnls;
mod support;

pub use coordinate::{ml_coordinate_descent, CdOutput, CdParams, DetectorState};
pub use covariance::{empirical_covariance, SampleCovariance};
pub use likelihood::{model_covariance, neg_log_likelihood};
pub use nnls::{nnls_estimate, nnls_objective, NnlsOutput, NnlsParams};
pub use support::{detect_support, write_gamma_csv, SupportRule};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::codebook::Codebook;
use crate::error::ConfigError;
use crate::linalg::SplitMatrix;

/// The detector's view of the codebook: columns scaled by a common factor
/// (normally `sqrt(P)`), stored for fast kernels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    cols: SplitMatrix,
    norms: Vec<f64>,
}

impl Dictionary {
    pub fn new(codebook: &Codebook, scale: f64) -> Self {
        Self::from_matrix(codebook.matrix(), scale)
    }

    pub fn from_matrix(matrix: &DMatrix<Complex64>, scale: f64) -> Self {
        let cols = SplitMatrix::from_dmatrix(matrix, scale);
        let norms = (0..cols.cols()).map(|j| cols.col_norm_sqr(j)).collect();
        Dictionary { cols, norms }
    }

    pub fn subslot_len(&self) -> usize {
        self.cols.rows()
    }

    pub fn num_columns(&self) -> usize {
        self.cols.cols()
    }

    pub fn columns(&self) -> &SplitMatrix {
        &self.cols
    }

    pub fn column_norm_sqr(&self, r: usize) -> f64 {
        self.norms[r]
    }

    pub fn to_dmatrix(&self) -> DMatrix<Complex64> {
        self.cols.to_dmatrix()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    #[default]
    Ml,
    Nnls,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    /// A fresh random permutation of all coordinates every epoch.
    #[default]
    RandomPermutation,
    Cyclic,
}

/// How estimated activity vectors are turned into index lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ThresholdMode {
    /// Fixed thresholds: one for all subslots or one per subslot.
    Absolute { taus: Vec<f64> },
    /// `tau_l = theta * g_min * P_l / P`.
    Relative { theta: f64 },
    /// The `K_a + delta` largest entries.
    TopK { delta: usize },
}

impl Default for ThresholdMode {
    fn default() -> Self {
        ThresholdMode::Relative { theta: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorSettings {
    pub estimator: Estimator,
    pub max_epochs: usize,
    /// Convergence tolerance on the largest coordinate step of an epoch,
    /// relative to the subslot power ratio `P_l / P`.
    pub tolerance: f64,
    pub schedule: Schedule,
    /// Support-only sweeps between full epochs (0 = plain epochs).
    pub active_sweeps: usize,
    pub threshold: ThresholdMode,
    pub nnls_max_sweeps: usize,
}

impl Default for DetectorSettings {
    fn default() -> Self {
        DetectorSettings {
            estimator: Estimator::Ml,
            max_epochs: 10,
            tolerance: 1e-6,
            schedule: Schedule::RandomPermutation,
            active_sweeps: 10,
            threshold: ThresholdMode::default(),
            nnls_max_sweeps: 200,
        }
    }
}

impl DetectorSettings {
    pub(crate) fn check(&self, subslots: usize) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Detector(m));
        if !(self.tolerance > 0.0) {
            return bad(format!("tolerance must be positive, got {}", self.tolerance));
        }
        if self.max_epochs == 0 {
            return bad("max_epochs must be at least 1".into());
        }
        if self.nnls_max_sweeps == 0 {
            return bad("nnls_max_sweeps must be at least 1".into());
        }
        match &self.threshold {
            ThresholdMode::Absolute { taus } => {
                if taus.len() != 1 && taus.len() != subslots {
                    return bad(format!("{} thresholds for {subslots} subslots", taus.len()));
                }
                if taus.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
                    return bad("thresholds must be finite and nonnegative".into());
                }
            }
            ThresholdMode::Relative { theta } => {
                if !(*theta > 0.0 && theta.is_finite()) {
                    return bad(format!("theta must be positive, got {theta}"));
                }
            }
            ThresholdMode::TopK { .. } => {}
        }
        Ok(())
    }

    /// Coordinate-descent parameters for a subslot whose activity values are
    /// on the scale `scale` (the power ratio `P_l / P`).
    pub fn cd_params(&self, scale: f64, seed: u64) -> CdParams {
        CdParams {
            max_epochs: self.max_epochs,
            tolerance: self.tolerance * scale,
            schedule: self.schedule,
            active_sweeps: self.active_sweeps,
            seed,
        }
    }

    pub fn nnls_params(&self, scale: f64) -> NnlsParams {
        NnlsParams {
            max_sweeps: self.nnls_max_sweeps,
            tolerance: self.tolerance * scale,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn settings_json_shape() {
        let s: DetectorSettings = serde_json::from_str(
            r#"{"threshold": {"mode": "top_k", "delta": 3}, "schedule": "cyclic"}"#,
        )
        .unwrap();
        assert_eq!(s.threshold, ThresholdMode::TopK { delta: 3 });
        assert_eq!(s.schedule, Schedule::Cyclic);
        assert_eq!(s.max_epochs, 10);
    }

    #[test]
    fn settings_validation() {
        let mut s = DetectorSettings::default();
        assert!(s.check(4).is_ok());
        s.threshold = ThresholdMode::Absolute { taus: vec![0.1; 3] };
        assert!(s.check(4).is_err());
        s.threshold = ThresholdMode::Absolute { taus: vec![0.1] };
        assert!(s.check(4).is_ok());
        s.tolerance = 0.0;
        assert!(s.check(4).is_err());
    }
}
