use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Default antenna spacing in wavelengths (half-wavelength ULA).
pub const DEFAULT_SPACING: f64 = 0.5;

fn default_spacing() -> f64 {
    DEFAULT_SPACING
}

/// Point-to-point link configuration.
///
/// The number of streams equals the number of RF chains on both ends, and
/// the channel must carry at least as many paths as streams so that the
/// truncated SVD has `n_streams` nonzero components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub n_tx: usize,
    pub n_rx: usize,
    pub n_rf_tx: usize,
    pub n_rf_rx: usize,
    pub n_streams: usize,
    pub bits: u32,
    pub n_paths: usize,
    pub snr_db: f64,
    pub seed: u64,
    #[serde(default = "default_spacing")]
    pub spacing_over_lambda: f64,
}

impl SystemConfig {
    /// Square-array configuration with `n_streams` RF chains on each side.
    pub fn new(n_tx: usize, n_rx: usize, n_streams: usize, bits: u32) -> Self {
        Self {
            n_tx,
            n_rx,
            n_rf_tx: n_streams,
            n_rf_rx: n_streams,
            n_streams,
            bits,
            n_paths: 6,
            snr_db: 20.0,
            seed: 0,
            spacing_over_lambda: DEFAULT_SPACING,
        }
    }

    pub fn with_snr_db(mut self, snr_db: f64) -> Self {
        self.snr_db = snr_db;
        self
    }

    pub fn with_paths(mut self, n_paths: usize) -> Self {
        self.n_paths = n_paths;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_bits(mut self, bits: u32) -> Self {
        self.bits = bits;
        self
    }

    /// Sets the stream count together with both RF-chain counts.
    pub fn with_streams(mut self, n_streams: usize) -> Self {
        self.n_streams = n_streams;
        self.n_rf_tx = n_streams;
        self.n_rf_rx = n_streams;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.n_tx == 0 || self.n_rx == 0 {
            return fail("antenna counts must be positive".into());
        }
        if self.n_streams == 0 || self.n_paths == 0 {
            return fail("stream and path counts must be positive".into());
        }
        if self.n_rf_tx != self.n_streams || self.n_rf_rx != self.n_streams {
            return fail(format!(
                "RF chains must equal the stream count (n_streams = {}, n_rf_tx = {}, n_rf_rx = {})",
                self.n_streams, self.n_rf_tx, self.n_rf_rx
            ));
        }
        if self.n_streams > self.n_tx.min(self.n_rx) {
            return fail(format!(
                "n_streams = {} exceeds min(n_tx, n_rx) = {}",
                self.n_streams,
                self.n_tx.min(self.n_rx)
            ));
        }
        if self.n_paths < self.n_streams {
            return fail(format!(
                "n_paths = {} is smaller than n_streams = {}",
                self.n_paths, self.n_streams
            ));
        }
        if self.bits == 0 {
            return fail("bits must be at least 1".into());
        }
        if !self.snr_db.is_finite() {
            return fail("snr_db must be finite".into());
        }
        if !(self.spacing_over_lambda.is_finite() && self.spacing_over_lambda > 0.0) {
            return fail("spacing_over_lambda must be positive".into());
        }
        Ok(())
    }
}

/// Uplink multiuser configuration: `users` single-stream users with `n_tx`
/// antennas each, and a base station with `n_rx` antennas and one RF chain
/// per user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiuserConfig {
    pub n_tx: usize,
    pub n_rx: usize,
    pub users: usize,
    pub bits: u32,
    pub n_paths: usize,
    pub snr_db: f64,
    pub seed: u64,
    #[serde(default = "default_spacing")]
    pub spacing_over_lambda: f64,
}

impl MultiuserConfig {
    pub fn new(n_tx: usize, n_rx: usize, users: usize, bits: u32) -> Self {
        Self {
            n_tx,
            n_rx,
            users,
            bits,
            n_paths: 6,
            snr_db: 20.0,
            seed: 0,
            spacing_over_lambda: DEFAULT_SPACING,
        }
    }

    pub fn with_snr_db(mut self, snr_db: f64) -> Self {
        self.snr_db = snr_db;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.n_tx == 0 || self.n_rx == 0 || self.users == 0 || self.n_paths == 0 {
            return fail("antenna, user and path counts must be positive".into());
        }
        if self.users > self.n_rx {
            return fail(format!(
                "users = {} exceeds base-station antennas n_rx = {}",
                self.users, self.n_rx
            ));
        }
        if self.bits == 0 {
            return fail("bits must be at least 1".into());
        }
        if !self.snr_db.is_finite() {
            return fail("snr_db must be finite".into());
        }
        if !(self.spacing_over_lambda.is_finite() && self.spacing_over_lambda > 0.0) {
            return fail("spacing_over_lambda must be positive".into());
        }
        Ok(())
    }
}
