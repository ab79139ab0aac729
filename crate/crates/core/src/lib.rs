//! Massive-MIMO unsourced random access.
//!
//! Users share one concatenated code: an outer tree code stitches `L`
//! sub-messages together through pseudo-random parity bits, and an inner
//! compressed-sensing code maps each sub-message to a column of a common
//! Gaussian matrix. The receiver estimates per-subslot column activity from
//! the sample covariance of its `M` antennas with a coordinate-descent
//! maximum-likelihood detector, thresholds it into index lists, and
//! tree-decodes the lists into the output message list.
//!
//! Module map:
//! - [`config`]: parameters, validation, power allocation, rates;
//! - [`outer_code`]: tree encoder and list decoder;
//! - [`codebook`]: inner coding matrix and activity vectors;
//! - [`channel`]: block Rayleigh fading with AWGN;
//! - [`detector`]: covariance ML, NNLS, support detection;
//! - [`capacity`]: closed-form design calculators;
//! - [`sim`]: trials, PUPE metrics, sweeps.

pub mod capacity;
pub mod channel;
pub mod codebook;
pub mod config;
pub mod detector;
pub mod error;
pub mod linalg;
pub mod outer_code;
pub mod rng;
pub mod selftest;
pub mod sim;

pub use config::{SystemConfig, ValidConfig};
pub use error::{ConfigError, SignalError, TreeCodeError};
