use thiserror::Error;

/// A violated configuration invariant.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("subslot count must be at least 1")]
    NoSubslots,
    #[error("index bits {0} outside 1..={max}", max = crate::config::MAX_INDEX_BITS)]
    IndexBitsOutOfRange(u32),
    #[error("blocklength {n} is not divisible into {subslots} subslots")]
    NonDivisibleSlot { n: usize, subslots: usize },
    #[error("parity profile has {got} entries, expected {expected}")]
    ProfileLength { expected: usize, got: usize },
    #[error("first block must carry no parity, got {0}")]
    FirstBlockParity(usize),
    #[error("subslot {subslot}: {parity} parity bits exceed {index_bits} index bits")]
    ParityExceedsIndexBits {
        subslot: usize,
        parity: usize,
        index_bits: u32,
    },
    #[error("data bits sum to {data_bits}, payload has {payload_bits}")]
    ParitySumMismatch { data_bits: usize, payload_bits: usize },
    #[error("exactly one of ebn0_db and power must be given")]
    PowerSpec,
    #[error("power must be positive and finite, got {0}")]
    NonPositivePower(f64),
    #[error("noise spectral density must be positive and finite, got {0}")]
    NonPositiveNoise(f64),
    #[error("at least one receive antenna is required")]
    NoAntennas,
    #[error("{active} active users exceed population {total}")]
    ActiveExceedsTotal { active: usize, total: usize },
    #[error("power decay must lie in (0, 1], got {0}")]
    InvalidDecay(f64),
    #[error("gain vector has {got} entries, expected {expected}")]
    GainsLength { expected: usize, got: usize },
    #[error("gains must be positive and finite, got {0}")]
    InvalidGain(f64),
    #[error("max_paths must be at least 1")]
    ZeroMaxPaths,
    #[error("invalid detector settings: {0}")]
    Detector(String),
}

impl ConfigError {
    /// Stable identifier of the violated invariant.
    pub fn code(&self) -> &'static str {
        match self {
            ConfigError::Parse(_) => "PARSE",
            ConfigError::NoSubslots => "NO_SUBSLOTS",
            ConfigError::IndexBitsOutOfRange(_) => "INDEX_BITS_RANGE",
            ConfigError::NonDivisibleSlot { .. } => "NON_DIVISIBLE_SLOT",
            ConfigError::ProfileLength { .. } => "PROFILE_LENGTH",
            ConfigError::FirstBlockParity(_) => "FIRST_BLOCK_PARITY",
            ConfigError::ParityExceedsIndexBits { .. } => "PARITY_EXCEEDS_INDEX_BITS",
            ConfigError::ParitySumMismatch { .. } => "PARITY_SUM_MISMATCH",
            ConfigError::PowerSpec => "POWER_SPEC",
            ConfigError::NonPositivePower(_) => "NON_POSITIVE_POWER",
            ConfigError::NonPositiveNoise(_) => "NON_POSITIVE_NOISE",
            ConfigError::NoAntennas => "NO_ANTENNAS",
            ConfigError::ActiveExceedsTotal { .. } => "ACTIVE_EXCEEDS_TOTAL",
            ConfigError::InvalidDecay(_) => "INVALID_DECAY",
            ConfigError::GainsLength { .. } => "GAINS_LENGTH",
            ConfigError::InvalidGain(_) => "INVALID_GAIN",
            ConfigError::ZeroMaxPaths => "ZERO_MAX_PATHS",
            ConfigError::Detector(_) => "DETECTOR_SETTINGS",
        }
    }
}

/// Errors from the outer tree code.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeCodeError {
    #[error("payload has {got} bits, expected {expected}")]
    PayloadLength { expected: usize, got: usize },
    #[error("got {got} subslot lists, expected {expected}")]
    ListCount { expected: usize, got: usize },
    #[error("index {index} in subslot {subslot} exceeds {index_bits} bits")]
    IndexRange {
        subslot: usize,
        index: u32,
        index_bits: u32,
    },
    #[error("parity matrices do not match the profile")]
    MatrixShape,
}

/// Errors from signal synthesis and detection.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SignalError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("top-K support detection needs the number of active users")]
    UnknownActiveCount,
    #[error("codebook file: {0}")]
    CodebookFile(String),
}
