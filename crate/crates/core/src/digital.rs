//! Baseband stage: effective channel, SVD precoder/combiner, power scaling.

use crate::beamformer::AnalogBeamformer;
use crate::channel::truncate_svd;
use crate::{CMatrix, Error, Result};

/// `H̃ = W_RFᴴ H F_RF`.
pub fn effective_channel(h: &CMatrix, f_rf: &AnalogBeamformer, w_rf: &AnalogBeamformer) -> Result<CMatrix> {
    if h.nrows() != w_rf.nrows() || h.ncols() != f_rf.nrows() {
        return Err(Error::invalid(format!(
            "channel is {}x{}, analog combiner has {} rows, analog precoder has {} rows",
            h.nrows(),
            h.ncols(),
            w_rf.nrows(),
            f_rf.nrows()
        )));
    }
    Ok(w_rf.matrix().adjoint() * h * f_rf.matrix())
}

/// `(F_BB, W_BB) = (Ṽ, Ũ)` from the SVD of the square effective channel,
/// before power normalization.
pub fn baseband_svd(h_eff: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    if !h_eff.is_square() || h_eff.nrows() == 0 {
        return Err(Error::invalid(format!(
            "effective channel must be square and non-empty, got {}x{}",
            h_eff.nrows(),
            h_eff.ncols()
        )));
    }
    let svd = truncate_svd(h_eff, h_eff.nrows())?;
    Ok((svd.v_hat, svd.u_hat))
}

/// Scales `f_bb` so that `‖F_RF F_BB‖_F² = N_s`, with `N_s` the column count
/// of `f_bb`.
pub fn normalize_power(f_rf: &AnalogBeamformer, f_bb: &CMatrix) -> Result<CMatrix> {
    scale_to_streams(f_rf, f_bb).ok_or(Error::DegenerateBeamformer)
}

/// Receive-side counterpart of [`normalize_power`].
pub fn normalize_combiner_power(w_rf: &AnalogBeamformer, w_bb: &CMatrix) -> Result<CMatrix> {
    scale_to_streams(w_rf, w_bb).ok_or(Error::DegenerateCombiner)
}

fn scale_to_streams(rf: &AnalogBeamformer, bb: &CMatrix) -> Option<CMatrix> {
    if rf.ncols() != bb.nrows() {
        return None;
    }
    let norm = (rf.matrix() * bb).norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return None;
    }
    Some(bb * crate::Complex64::from((bb.ncols() as f64).sqrt() / norm))
}
