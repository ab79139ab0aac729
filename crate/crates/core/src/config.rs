//! Scheme parameters, their validation, and the scalar quantities derived
//! from them (subslot length, block sizes, power, rates).
//!
//! The external configuration file is JSON. Eb/N0 is given in dB there and
//! converted to linear power exactly once, in [`SystemConfig::validate`].
//! Every later computation uses linear quantities.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::detector::DetectorSettings;
use crate::error::ConfigError;

/// Largest supported sub-message length in bits. Indices and data blocks are
/// packed into machine words and the codebook has `2^J` columns, so anything
/// beyond this is not representable in practice.
pub const MAX_INDEX_BITS: u32 = 24;

pub const DEFAULT_MAX_PATHS: usize = 100_000;

/// Seeds for the three independent random streams of a simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Seeds {
    pub codebook: u64,
    pub parity: u64,
    pub trial: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Seeds {
            codebook: 1,
            parity: 2,
            trial: 3,
        }
    }
}

/// Raw scheme parameters as read from a configuration file.
///
/// Exactly one of `ebn0_db` and `power` must be set. `power` is the average
/// per-symbol transmit power `P` (linear).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// Total number of complex channel uses `n`.
    pub blocklength: usize,
    /// Number of subslots `L`.
    pub subslots: usize,
    /// Bits per subslot index `J`; the inner codebook has `2^J` columns.
    pub index_bits: u32,
    /// Payload bits per user `b`.
    pub payload_bits: usize,
    /// Parity bits `p_1..p_L` appended to each block. `p_1` must be 0.
    pub parity_profile: Vec<usize>,
    #[serde(default)]
    pub ebn0_db: Option<f64>,
    #[serde(default)]
    pub power: Option<f64>,
    /// Noise spectral density `N0` (linear).
    #[serde(default = "one")]
    pub noise_psd: f64,
    /// Number of active users `K_a`.
    pub active_users: usize,
    /// Number of receive antennas `M`.
    pub antennas: usize,
    /// Total user population. Bookkeeping only; never enters the signal path.
    #[serde(default)]
    pub total_users: Option<usize>,
    /// Geometric decay factor of the subslot power allocation, in (0, 1].
    #[serde(default = "one")]
    pub power_decay: f64,
    /// Large-scale gains `g_k` of the active users; all ones when absent.
    #[serde(default)]
    pub gains: Option<Vec<f64>>,
    /// Draw a fresh fading matrix for every subslot (otherwise one matrix per
    /// transmission block).
    #[serde(default = "yes")]
    pub fresh_fading_per_subslot: bool,
    #[serde(default)]
    pub seeds: Seeds,
    #[serde(default)]
    pub detector: DetectorSettings,
    /// Surviving-path cap of the tree decoder.
    #[serde(default = "default_max_paths")]
    pub max_paths: usize,
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

fn default_max_paths() -> usize {
    DEFAULT_MAX_PATHS
}

impl SystemConfig {
    /// The configuration used for the reference experiment: `n = 3200`,
    /// `L = 32`, `J = 12`, `b = 96`, parity `[0, 9 x 28, 12, 12, 12]`,
    /// `N0 = 1`, Eb/N0 = 0 dB, unit gains.
    pub fn reference(active_users: usize, antennas: usize) -> Self {
        let mut profile = vec![0];
        profile.extend(std::iter::repeat_n(9, 28));
        profile.extend([12, 12, 12]);
        SystemConfig {
            blocklength: 3200,
            subslots: 32,
            index_bits: 12,
            payload_bits: 96,
            parity_profile: profile,
            ebn0_db: Some(0.0),
            power: None,
            noise_psd: 1.0,
            active_users,
            antennas,
            total_users: None,
            power_decay: 1.0,
            gains: None,
            fresh_fading_per_subslot: true,
            seeds: Seeds::default(),
            detector: DetectorSettings::default(),
            max_paths: DEFAULT_MAX_PATHS,
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(s).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| ConfigError::Parse(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_json_str(&text)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Checks every invariant and fills in the derived fields.
    pub fn validate(self) -> Result<ValidConfig, ConfigError> {
        let l = self.subslots;
        let j = self.index_bits;
        if l == 0 {
            return Err(ConfigError::NoSubslots);
        }
        if j == 0 || j > MAX_INDEX_BITS {
            return Err(ConfigError::IndexBitsOutOfRange(j));
        }
        if !self.blocklength.is_multiple_of(l) || self.blocklength == 0 {
            return Err(ConfigError::NonDivisibleSlot {
                n: self.blocklength,
                subslots: l,
            });
        }
        if self.parity_profile.len() != l {
            return Err(ConfigError::ProfileLength {
                expected: l,
                got: self.parity_profile.len(),
            });
        }
        if self.parity_profile[0] != 0 {
            return Err(ConfigError::FirstBlockParity(self.parity_profile[0]));
        }
        if let Some((idx, &p)) = self
            .parity_profile
            .iter()
            .enumerate()
            .find(|(_, &p)| p > j as usize)
        {
            return Err(ConfigError::ParityExceedsIndexBits {
                subslot: idx + 1,
                parity: p,
                index_bits: j,
            });
        }
        let data_bits: Vec<usize> = self
            .parity_profile
            .iter()
            .map(|&p| j as usize - p)
            .collect();
        let data_sum: usize = data_bits.iter().sum();
        if data_sum != self.payload_bits {
            return Err(ConfigError::ParitySumMismatch {
                data_bits: data_sum,
                payload_bits: self.payload_bits,
            });
        }
        if !(self.noise_psd > 0.0 && self.noise_psd.is_finite()) {
            return Err(ConfigError::NonPositiveNoise(self.noise_psd));
        }
        if self.antennas == 0 {
            return Err(ConfigError::NoAntennas);
        }
        if let Some(total) = self.total_users {
            if self.active_users > total || total == 0 {
                return Err(ConfigError::ActiveExceedsTotal {
                    active: self.active_users,
                    total,
                });
            }
        }
        if !(self.power_decay > 0.0 && self.power_decay <= 1.0) {
            return Err(ConfigError::InvalidDecay(self.power_decay));
        }
        if let Some(gains) = &self.gains {
            if gains.len() != self.active_users {
                return Err(ConfigError::GainsLength {
                    expected: self.active_users,
                    got: gains.len(),
                });
            }
            if let Some(&g) = gains.iter().find(|&&g| !(g > 0.0 && g.is_finite())) {
                return Err(ConfigError::InvalidGain(g));
            }
        }
        if self.max_paths == 0 {
            return Err(ConfigError::ZeroMaxPaths);
        }
        self.detector.check(l)?;

        let subslot_len = self.blocklength / l;
        let rate = self.payload_bits as f64 / self.blocklength as f64;
        let power = match (self.ebn0_db, self.power) {
            (Some(db), None) => {
                if self.payload_bits == 0 {
                    return Err(ConfigError::PowerSpec);
                }
                db_to_linear(db) * rate * self.noise_psd
            }
            (None, Some(p)) => p,
            _ => return Err(ConfigError::PowerSpec),
        };
        if !(power > 0.0 && power.is_finite()) {
            return Err(ConfigError::NonPositivePower(power));
        }

        Ok(ValidConfig {
            raw: self,
            subslot_len,
            data_bits,
            power,
        })
    }
}

/// A configuration whose invariants have been checked. Immutable; share it
/// freely between trial workers.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidConfig {
    raw: SystemConfig,
    subslot_len: usize,
    data_bits: Vec<usize>,
    power: f64,
}

impl ValidConfig {
    pub fn raw(&self) -> &SystemConfig {
        &self.raw
    }

    pub fn into_raw(self) -> SystemConfig {
        self.raw
    }

    pub fn blocklength(&self) -> usize {
        self.raw.blocklength
    }

    pub fn subslots(&self) -> usize {
        self.raw.subslots
    }

    /// `n0 = n / L`.
    pub fn subslot_len(&self) -> usize {
        self.subslot_len
    }

    pub fn index_bits(&self) -> u32 {
        self.raw.index_bits
    }

    /// Codebook size `2^J`.
    pub fn num_columns(&self) -> usize {
        1usize << self.raw.index_bits
    }

    pub fn payload_bits(&self) -> usize {
        self.raw.payload_bits
    }

    pub fn parity_profile(&self) -> &[usize] {
        &self.raw.parity_profile
    }

    /// Data bits per block, `b_l = J - p_l`.
    pub fn data_bits(&self) -> &[usize] {
        &self.data_bits
    }

    /// Average per-symbol transmit power `P` (linear).
    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn noise_psd(&self) -> f64 {
        self.raw.noise_psd
    }

    pub fn active_users(&self) -> usize {
        self.raw.active_users
    }

    pub fn antennas(&self) -> usize {
        self.raw.antennas
    }

    pub fn power_decay(&self) -> f64 {
        self.raw.power_decay
    }

    pub fn seeds(&self) -> Seeds {
        self.raw.seeds
    }

    pub fn detector(&self) -> &DetectorSettings {
        &self.raw.detector
    }

    pub fn max_paths(&self) -> usize {
        self.raw.max_paths
    }

    pub fn fresh_fading_per_subslot(&self) -> bool {
        self.raw.fresh_fading_per_subslot
    }

    /// Gains of the active users, defaulting to all ones.
    pub fn gains(&self) -> Vec<f64> {
        self.raw
            .gains
            .clone()
            .unwrap_or_else(|| vec![1.0; self.raw.active_users])
    }

    pub fn min_gain(&self) -> f64 {
        self.raw
            .gains
            .as_ref()
            .and_then(|g| g.iter().copied().reduce(f64::min))
            .unwrap_or(1.0)
    }

    pub fn power_allocation(&self) -> PowerAllocation {
        allocate_power(self.power, self.raw.subslots, self.raw.power_decay)
            .expect("validated config has a valid decay")
    }

    /// Returns a copy with one field changed and re-validated. Sweeps use this
    /// to vary a single axis.
    pub fn modified(
        &self,
        f: impl FnOnce(&mut SystemConfig),
    ) -> Result<ValidConfig, ConfigError> {
        let mut raw = self.raw.clone();
        f(&mut raw);
        raw.validate()
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

/// Per-subslot transmit powers `P_1..P_L` with `sum = L * P`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerAllocation {
    pub powers: Vec<f64>,
}

impl PowerAllocation {
    pub fn total(&self) -> f64 {
        self.powers.iter().sum()
    }
}

/// Geometric power profile `P_l = L P rho^(l-1) (1 - rho) / (1 - rho^L)`,
/// uniform for `rho = 1`.
pub fn allocate_power(power: f64, subslots: usize, decay: f64) -> Result<PowerAllocation, ConfigError> {
    if !(decay > 0.0 && decay <= 1.0) {
        return Err(ConfigError::InvalidDecay(decay));
    }
    if !(power > 0.0 && power.is_finite()) {
        return Err(ConfigError::NonPositivePower(power));
    }
    if subslots == 0 {
        return Err(ConfigError::NoSubslots);
    }
    if decay == 1.0 {
        return Ok(PowerAllocation {
            powers: vec![power; subslots],
        });
    }
    let total = subslots as f64 * power;
    let weights: Vec<f64> = (0..subslots).map(|l| decay.powi(l as i32)).collect();
    // Normalize by the summed weights rather than the closed form so the
    // total is exact to rounding even for rho close to 1.
    let norm: f64 = weights.iter().sum();
    Ok(PowerAllocation {
        powers: weights.iter().map(|w| total * w / norm).collect(),
    })
}

/// Rates and efficiency figures of a configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateReport {
    /// `R = b / n`, bits per complex channel use.
    pub rate: f64,
    /// `R_in = J / n0`.
    pub inner_rate: f64,
    /// `R_out = b / (L J)`.
    pub outer_rate: f64,
    /// `Eb/N0 = P / (R N0)`, linear.
    pub ebn0: f64,
    pub ebn0_db: f64,
    /// Total spectral efficiency `mu = R_in R_out K_a`.
    pub spectral_efficiency: f64,
}

pub fn rate_report(cfg: &ValidConfig) -> RateReport {
    let rate = cfg.payload_bits() as f64 / cfg.blocklength() as f64;
    let inner_rate = cfg.index_bits() as f64 / cfg.subslot_len() as f64;
    let outer_rate =
        cfg.payload_bits() as f64 / (cfg.subslots() as f64 * cfg.index_bits() as f64);
    let ebn0 = cfg.power() / (rate * cfg.noise_psd());
    RateReport {
        rate,
        inner_rate,
        outer_rate,
        ebn0,
        ebn0_db: linear_to_db(ebn0),
        spectral_efficiency: inner_rate * outer_rate * cfg.active_users() as f64,
    }
}
