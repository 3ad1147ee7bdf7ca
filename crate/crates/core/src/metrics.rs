//! Spectral efficiency, the full-digital reference, SINR and sum rate.
//!
//! Rates are in bits/s/Hz (base-2 logarithms throughout). The noise
//! variance is fixed at 1 by [`LinkBudget::from_snr_db`], so the SNR in dB
//! sets the transmit power directly.

use serde::Serialize;

use crate::beamformer::HybridBeamformer;
use crate::channel::truncate_svd;
use crate::numerics::logdet2_abs;
use crate::{CMatrix, CVector, Error, Result};

/// Noise-covariance pivots below this fraction of the largest are treated
/// as singular.
pub const NOISE_RCOND: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinkBudget {
    pub power: f64,
    pub noise_var: f64,
}

impl LinkBudget {
    pub fn new(power: f64, noise_var: f64) -> Result<Self> {
        if !(power > 0.0 && power.is_finite() && noise_var > 0.0 && noise_var.is_finite()) {
            return Err(Error::invalid(format!(
                "link budget needs positive finite power and noise, got P={power}, sigma2={noise_var}"
            )));
        }
        Ok(Self { power, noise_var })
    }

    /// `σ² = 1`, `P = 10^(snr_db/10)`.
    pub fn from_snr_db(snr_db: f64) -> Result<Self> {
        Self::new(10f64.powf(snr_db / 10.0), 1.0)
    }

    pub fn snr_db(&self) -> f64 {
        10.0 * (self.power / self.noise_var).log10()
    }
}

/// One row of experiment output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub kind: String,
    pub sweep_name: String,
    pub sweep_value: f64,
    pub trial: usize,
    pub seed: u64,
    pub algorithm: String,
    pub bits: u32,
    pub n_tx: usize,
    pub n_rx: usize,
    pub n_streams: usize,
    pub users: usize,
    pub spectral_efficiency: Option<f64>,
    pub sum_rate: Option<f64>,
    pub inner_sweeps: usize,
    pub outer_iters: usize,
    pub wall_time_s: f64,
    pub error: Option<String>,
}

/// Achievable rate of a hybrid link under Gaussian signaling with equal
/// power across streams.
pub fn spectral_efficiency(h: &CMatrix, bf: &HybridBeamformer, budget: &LinkBudget) -> Result<f64> {
    spectral_efficiency_matrices(h, &bf.precoder(), &bf.combiner(), budget)
}

/// [`spectral_efficiency`] for arbitrary overall precoder `f` and combiner
/// `w` (no analog-structure check):
/// `log2 |I + P/N_s · R_n⁻¹ Wᴴ H F Fᴴ Hᴴ W|` with `R_n = σ² Wᴴ W`.
pub fn spectral_efficiency_matrices(h: &CMatrix, f: &CMatrix, w: &CMatrix, budget: &LinkBudget) -> Result<f64> {
    if h.ncols() != f.nrows() || h.nrows() != w.nrows() || f.ncols() != w.ncols() {
        return Err(Error::invalid(format!(
            "cannot evaluate a {}x{} channel with a {}x{} precoder and a {}x{} combiner",
            h.nrows(),
            h.ncols(),
            f.nrows(),
            f.ncols(),
            w.nrows(),
            w.ncols()
        )));
    }
    let ns = f.ncols();
    let rn = w.adjoint() * w * crate::Complex64::from(budget.noise_var);
    if !well_conditioned(&rn) {
        return Err(Error::DegenerateCombiner);
    }
    let g = w.adjoint() * h * f;
    let signal = &g * g.adjoint() * crate::Complex64::from(budget.power / ns as f64);
    let rate = logdet2_abs(&(&rn + signal))? - logdet2_abs(&rn)?;
    if !rate.is_finite() {
        return Err(Error::DegenerateCombiner);
    }
    Ok(rate.max(0.0))
}

fn well_conditioned(m: &CMatrix) -> bool {
    if m.nrows() == 0 {
        return true;
    }
    let lu = m.clone().lu();
    let pivots: Vec<f64> = lu.u().diagonal().iter().map(|z| z.norm()).collect();
    let max = pivots.iter().copied().fold(0.0, f64::max);
    max > 0.0 && pivots.iter().all(|&p| p > NOISE_RCOND * max)
}

/// Unconstrained SVD beamforming with equal power:
/// `Σ_i log2(1 + P σ_i² / (N_s σ²))`.
pub fn full_digital_reference(h: &CMatrix, n_streams: usize, budget: &LinkBudget) -> Result<f64> {
    let svd = truncate_svd(h, n_streams)?;
    Ok(full_digital_from_singular_values(&svd.sigma_hat, budget))
}

pub fn full_digital_from_singular_values(sigma: &[f64], budget: &LinkBudget) -> f64 {
    let ns = sigma.len() as f64;
    sigma
        .iter()
        .map(|s| (1.0 + budget.power * s * s / (ns * budget.noise_var)).log2())
        .sum()
}

/// SINR of user `k` with equal powers `P_k = P`:
/// `P|w_kᴴ H_k f_k|² / (Σ_{i≠k} P|w_kᴴ H_i f_i|² + σ²‖w_k‖²)`.
pub fn user_sinr(
    k: usize,
    channels: &[CMatrix],
    precoders: &[CVector],
    combiners: &[CVector],
    budget: &LinkBudget,
) -> Result<f64> {
    let users = channels.len();
    if k >= users || precoders.len() != users || combiners.len() != users {
        return Err(Error::invalid(format!(
            "user {k} out of range or mismatched counts ({users} channels, {} precoders, {} combiners)",
            precoders.len(),
            combiners.len()
        )));
    }
    let w = &combiners[k];
    let mut gains = Vec::with_capacity(users);
    for (h, f) in channels.iter().zip(precoders) {
        if h.nrows() != w.len() || h.ncols() != f.len() {
            return Err(Error::invalid(
                "user channel, precoder and combiner dimensions do not conform",
            ));
        }
        gains.push(budget.power * w.dotc(&(h * f)).norm_sqr());
    }
    let interference: f64 = gains.iter().enumerate().filter(|(i, _)| *i != k).map(|(_, g)| g).sum();
    let noise = budget.noise_var * w.norm_squared();
    let denom = interference + noise;
    if !(denom > 0.0) {
        return Err(Error::DegenerateCombiner);
    }
    Ok(gains[k] / denom)
}

/// `Σ_k log2(1 + γ_k)`.
pub fn sum_rate(sinrs: &[f64]) -> Result<f64> {
    if let Some(bad) = sinrs.iter().find(|g| !(**g >= 0.0)) {
        return Err(Error::invalid(format!("SINR must be non-negative, got {bad}")));
    }
    Ok(sinrs.iter().map(|g| g.ln_1p() / std::f64::consts::LN_2).sum())
}
