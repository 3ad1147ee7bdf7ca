//! Uplink multiuser design: one single-stream user per receive RF chain.
//!
//! Users are handled one at a time. Each user's pair is designed on its
//! channel projected away from the span of the combiners already chosen,
//! the span is extended by a Gram-Schmidt step, and MMSE baseband combiners
//! are attached at the end.

use crate::analog_onebit::{binary_phases, onebit_pair, OneBitOptions};
use crate::analog_pm::{match_pair, MatchOptions, PhaseMatchState};
use crate::beamformer::AnalogBeamformer;
use crate::channel::{sample_channel_dims, truncate_svd};
use crate::codebook::PhaseConstraint;
use crate::metrics::{sum_rate, user_sinr, LinkBudget};
use crate::numerics::{gram_schmidt_append, solve_checked};
use crate::{CMatrix, CVector, Complex64, Error, MultiuserConfig, Result};
use rand::Rng;

/// Pivot ratio below which the MMSE system is treated as singular.
pub const MMSE_RCOND: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Engine {
    /// Phase matching at the configured resolution.
    #[default]
    PhaseMatching,
    /// Candidate-set binary design; needs one-bit phase shifters.
    OneBit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UserOrdering {
    /// Users in index order.
    #[default]
    Given,
    /// Strongest channel (Frobenius norm) first; ties keep index order.
    DescendingNorm,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MultiuserOptions {
    pub engine: Engine,
    pub ordering: UserOrdering,
}

#[derive(Debug, Clone)]
pub struct MultiuserDesign {
    /// Per-user analog transmit vectors (single column each), in user order.
    pub f: Vec<AnalogBeamformer>,
    /// Analog combiner; column `k` serves user `k`.
    pub w_rf: AnalogBeamformer,
    /// Baseband combiner of each user, in user order.
    pub w_bb: Vec<CVector>,
    /// Orthonormal directions in design order.
    pub d: CMatrix,
    /// `order[i]` is the user designed `i`-th.
    pub order: Vec<usize>,
    /// Phase-matching sweeps summed over users (0 for the binary engine).
    pub inner_sweeps: usize,
}

impl MultiuserDesign {
    pub fn users(&self) -> usize {
        self.f.len()
    }

    /// Precoding vector of user `k`.
    pub fn precoder(&self, k: usize) -> CVector {
        self.f[k].matrix().column(0).into_owned()
    }

    /// Overall MMSE combiner `W_RF w_BB,k` of every user.
    pub fn combiners(&self) -> Vec<CVector> {
        self.w_bb.iter().map(|b| self.w_rf.matrix() * b).collect()
    }

    /// Combiners with `w_BB,k = e_k`: each user keeps only its own RF chain.
    pub fn matched_filter_combiners(&self) -> Vec<CVector> {
        self.w_rf.matrix().column_iter().map(|c| c.into_owned()).collect()
    }
}

/// `Ĥ_k = (I − Σ_i d_i d_iᴴ) H_k` for the columns `d_i` of `d`.
pub fn project_channel(h_k: &CMatrix, d: &CMatrix) -> CMatrix {
    if d.ncols() == 0 {
        return h_k.clone();
    }
    h_k - d * (d.adjoint() * h_k)
}

/// Draws `users` independent channels of size `n_rx × n_tx`.
pub fn sample_user_channels<R: Rng + ?Sized>(config: &MultiuserConfig, rng: &mut R) -> Vec<CMatrix> {
    (0..config.users)
        .map(|_| {
            sample_channel_dims(
                config.n_rx,
                config.n_tx,
                config.n_paths,
                config.spacing_over_lambda,
                rng,
            )
            .h
        })
        .collect()
}

pub fn design_multiuser(
    channels: &[CMatrix],
    config: &MultiuserConfig,
    opts: &MultiuserOptions,
) -> Result<MultiuserDesign> {
    config.validate()?;
    if channels.len() != config.users {
        return Err(Error::invalid(format!(
            "expected {} user channels, got {}",
            config.users,
            channels.len()
        )));
    }
    if let Some(h) = channels.iter().find(|h| h.shape() != (config.n_rx, config.n_tx)) {
        return Err(Error::invalid(format!(
            "user channel is {}x{}, expected {}x{}",
            h.nrows(),
            h.ncols(),
            config.n_rx,
            config.n_tx
        )));
    }
    let constraint = PhaseConstraint::bits(config.bits)?;
    if opts.engine == Engine::OneBit && config.bits != 1 {
        return Err(Error::invalid(format!(
            "the binary engine needs bits = 1, got {}",
            config.bits
        )));
    }

    let mut order: Vec<usize> = (0..config.users).collect();
    if opts.ordering == UserOrdering::DescendingNorm {
        order.sort_by(|&a, &b| channels[b].norm().total_cmp(&channels[a].norm()));
    }

    let k_total = config.users;
    let mut theta_cols = vec![Vec::new(); k_total];
    let mut phi_cols = vec![Vec::new(); k_total];
    let mut directions: Vec<CVector> = Vec::with_capacity(k_total);
    let mut inner_sweeps = 0;
    let rx_scale = Complex64::from(1.0 / (config.n_rx as f64).sqrt());

    for &k in &order {
        let projected = project_channel(&channels[k], &columns(&directions, config.n_rx));
        let (theta, phi) = match opts.engine {
            Engine::PhaseMatching => {
                let svd = truncate_svd(&projected, 1)?;
                let init = PhaseMatchState::aligned_with(
                    &svd.u_hat.column(0).into_owned(),
                    &svd.v_hat.column(0).into_owned(),
                    &constraint,
                );
                let st = match_pair(
                    &projected,
                    &constraint,
                    init,
                    &MatchOptions::for_constraint(&constraint),
                )?;
                inner_sweeps += st.sweeps;
                (st.theta, st.phi)
            }
            Engine::OneBit => {
                let pair = onebit_pair(&projected, &OneBitOptions::default())?;
                (binary_phases(&pair.f), binary_phases(&pair.w))
            }
        };
        let w = CVector::from_iterator(phi.len(), phi.iter().map(|p| constraint.unit(*p) * rx_scale));
        directions.push(gram_schmidt_append(&directions, &w)?);
        theta_cols[k] = theta;
        phi_cols[k] = phi;
    }

    let f = theta_cols
        .into_iter()
        .map(|t| AnalogBeamformer::from_columns(&[t], constraint.clone()))
        .collect::<Result<Vec<_>>>()?;
    let w_rf = AnalogBeamformer::from_columns(&phi_cols, constraint.clone())?;
    let budget = LinkBudget::from_snr_db(config.snr_db)?;
    let precoders: Vec<CVector> = f.iter().map(|b| b.matrix().column(0).into_owned()).collect();
    let h_eff = effective_user_channels(channels, &precoders, w_rf.matrix(), budget.power)?;
    let w_bb = mmse_combiners(&h_eff, w_rf.matrix(), budget.noise_var)?;
    Ok(MultiuserDesign {
        f,
        w_rf,
        w_bb,
        d: columns(&directions, config.n_rx),
        order,
        inner_sweeps,
    })
}

fn columns(vectors: &[CVector], rows: usize) -> CMatrix {
    if vectors.is_empty() {
        CMatrix::zeros(rows, 0)
    } else {
        CMatrix::from_columns(vectors)
    }
}

/// Columns `h^e_k = √P W_RFᴴ H_k f_k`.
pub fn effective_user_channels(
    channels: &[CMatrix],
    precoders: &[CVector],
    w_rf: &CMatrix,
    power: f64,
) -> Result<CMatrix> {
    if channels.len() != precoders.len() {
        return Err(Error::invalid("one precoder per user channel is required"));
    }
    let amp = Complex64::from(power.sqrt());
    let cols = channels
        .iter()
        .zip(precoders)
        .map(|(h, f)| {
            if h.nrows() != w_rf.nrows() || h.ncols() != f.len() {
                return Err(Error::invalid("user channel does not conform with its beamformers"));
            }
            Ok(w_rf.adjoint() * (h * f) * amp)
        })
        .collect::<Result<Vec<CVector>>>()?;
    Ok(columns(&cols, w_rf.ncols()))
}

/// `w_BB,k = [H^e H^eᴴ + σ² W_RFᴴ W_RF]⁻¹ h^e_k` for every column of `h_eff`.
pub fn mmse_combiners(h_eff: &CMatrix, w_rf: &CMatrix, noise_var: f64) -> Result<Vec<CVector>> {
    if h_eff.nrows() != w_rf.ncols() {
        return Err(Error::invalid(format!(
            "effective channel has {} rows but the analog combiner has {} columns",
            h_eff.nrows(),
            w_rf.ncols()
        )));
    }
    let a = h_eff * h_eff.adjoint() + w_rf.adjoint() * w_rf * Complex64::from(noise_var);
    let x = solve_checked(&a, h_eff, MMSE_RCOND).ok_or(Error::DegenerateCombiner)?;
    Ok(x.column_iter().map(|c| c.into_owned()).collect())
}

/// Per-user SINRs and their sum rate for the given overall combiners.
pub fn evaluate_sum_rate(
    channels: &[CMatrix],
    design: &MultiuserDesign,
    combiners: &[CVector],
    budget: &LinkBudget,
) -> Result<(Vec<f64>, f64)> {
    let precoders: Vec<CVector> = (0..design.users()).map(|k| design.precoder(k)).collect();
    let sinrs = (0..channels.len())
        .map(|k| user_sinr(k, channels, &precoders, combiners, budget))
        .collect::<Result<Vec<f64>>>()?;
    let rate = sum_rate(&sinrs)?;
    Ok((sinrs, rate))
}
