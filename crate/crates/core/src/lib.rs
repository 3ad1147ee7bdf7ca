//! Hybrid analog/digital precoder and combiner design for mmWave MIMO links
//! whose analog stage is built from low-resolution (B-bit) or one-bit phase
//! shifters.
//!
//! The crate is organized bottom-up:
//!
//! - [`codebook`], [`config`], [`beamformer`]: the quantized phase set,
//!   system configuration and beamformer containers with their invariants.
//! - [`channel`]: geometric ULA channel generation and truncated SVD.
//! - [`numerics`]: power iteration, Gram-Schmidt step, log-determinant.
//! - [`analog_pm`]: iterative phase matching for B-bit analog pairs.
//! - [`analog_onebit`]: candidate-set design for binary analog pairs.
//! - [`digital`]: SVD baseband stage and power normalization.
//! - [`metrics`]: spectral efficiency, full-digital reference, SINR, sum rate.
//! - [`multiuser`]: successive uplink design with Gram-Schmidt projection.
//! - [`oracle`]: exhaustive and grid-search references.
//! - [`design`]: end-to-end single-user pipelines.
//! - [`harness`]: seeded Monte-Carlo experiments and CSV output.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analog_onebit;
pub mod analog_pm;
pub mod beamformer;
pub mod channel;
pub mod codebook;
pub mod config;
pub mod design;
pub mod digital;
mod error;
pub mod harness;
pub mod metrics;
pub mod multiuser;
pub mod numerics;
pub mod oracle;

pub use num_complex::Complex64;

pub use beamformer::{AnalogBeamformer, HybridBeamformer};
pub use codebook::{PhaseCodebook, PhaseConstraint};
pub use config::{MultiuserConfig, SystemConfig};
pub use error::{Error, Result};

/// Dense complex matrix used throughout the crate.
pub type CMatrix = nalgebra::DMatrix<Complex64>;
/// Dense complex column vector.
pub type CVector = nalgebra::DVector<Complex64>;
