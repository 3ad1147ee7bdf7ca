//! End-to-end single-user pipelines: analog design, then the SVD baseband
//! stage with power normalization.

use std::fmt;
use std::str::FromStr;

use crate::analog_onebit::{design_analog_su_onebit_with, OneBitOptions};
use crate::analog_pm::{
    check_dims, design_analog_su, design_from_svd, AnalogDesign, DesignStats, PmOptions, DEFAULT_OUTER_CAP,
};
use crate::beamformer::{AnalogBeamformer, HybridBeamformer};
use crate::channel::{truncate_svd, ChannelRealization, TruncatedSvd};
use crate::codebook::PhaseConstraint;
use crate::digital::{baseband_svd, effective_channel, normalize_combiner_power, normalize_power};
use crate::numerics::angle;
use crate::oracle::design_analog_su_exhaustive;
use crate::{Error, Result, SystemConfig};

/// Single-user analog design methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    /// Phase matching at the configured resolution.
    Pm,
    /// Phase matching with unquantized phases.
    PmUnquantized,
    /// Candidate-set binary design (always one bit).
    OneBit,
    /// Phases of the leading singular vectors rounded to the codebook.
    QuantizedBaseline,
    /// Exhaustive pair search; only feasible for tiny arrays.
    Exhaustive,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Pm,
        Algorithm::PmUnquantized,
        Algorithm::OneBit,
        Algorithm::QuantizedBaseline,
        Algorithm::Exhaustive,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Pm => "pm",
            Algorithm::PmUnquantized => "pm-unquantized",
            Algorithm::OneBit => "onebit",
            Algorithm::QuantizedBaseline => "quantized-baseline",
            Algorithm::Exhaustive => "exhaustive",
        }
    }

    /// Resolution the method actually runs at for a configured `bits`.
    pub fn effective_bits(self, bits: u32) -> u32 {
        match self {
            Algorithm::OneBit => 1,
            _ => bits,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown algorithm `{s}`")))
    }
}

/// A complete hybrid design and the counters of its analog stage.
#[derive(Debug, Clone)]
pub struct HybridDesign {
    pub beamformer: HybridBeamformer,
    pub stats: DesignStats,
}

/// Runs `algorithm` on `h` with the default options.
pub fn design_hybrid(h: &ChannelRealization, config: &SystemConfig, algorithm: Algorithm) -> Result<HybridDesign> {
    let analog = design_analog(h, config, algorithm, None)?;
    attach_baseband(&h.h, analog)
}

/// Like [`design_hybrid`], with the outer-iteration cap overridden (the
/// exhaustive method keeps its default).
pub fn design_hybrid_with_outer_cap(
    h: &ChannelRealization,
    config: &SystemConfig,
    algorithm: Algorithm,
    outer_cap: usize,
) -> Result<HybridDesign> {
    let analog = design_analog(h, config, algorithm, Some(outer_cap))?;
    attach_baseband(&h.h, analog)
}

fn design_analog(
    h: &ChannelRealization,
    config: &SystemConfig,
    algorithm: Algorithm,
    outer_cap: Option<usize>,
) -> Result<AnalogDesign> {
    let pm = |constraint: &PhaseConstraint| -> Result<AnalogDesign> {
        check_dims(h, config)?;
        let mut opts = PmOptions::for_constraint(constraint);
        if let Some(cap) = outer_cap {
            opts.outer_cap = cap;
        }
        let svd = truncate_svd(&h.h, config.n_streams)?;
        design_from_svd(&svd, constraint, &opts)
    };
    match algorithm {
        Algorithm::Pm if outer_cap.is_none() => design_analog_su(h, config),
        Algorithm::Pm => pm(&PhaseConstraint::bits(config.bits)?),
        Algorithm::PmUnquantized => pm(&PhaseConstraint::Unquantized),
        Algorithm::OneBit => {
            let opts = OneBitOptions {
                outer_cap: outer_cap.unwrap_or(DEFAULT_OUTER_CAP),
                ..OneBitOptions::default()
            };
            design_analog_su_onebit_with(h, &config.clone().with_bits(1), &opts)
        }
        Algorithm::QuantizedBaseline => {
            check_dims(h, config)?;
            let svd = truncate_svd(&h.h, config.n_streams)?;
            quantized_svd_baseline(&svd, &PhaseConstraint::bits(config.bits)?)
        }
        Algorithm::Exhaustive => design_analog_su_exhaustive(h, config),
    }
}

/// Analog matrices whose phases are the phases of the leading singular
/// vectors rounded to the codebook, with no further optimization.
pub fn quantized_svd_baseline(svd: &TruncatedSvd, constraint: &PhaseConstraint) -> Result<AnalogDesign> {
    let round = |m: &crate::CMatrix| m.map(|z| constraint.project(angle(z)));
    Ok(AnalogDesign {
        f_rf: AnalogBeamformer::from_phases(round(&svd.v_hat), constraint.clone())?,
        w_rf: AnalogBeamformer::from_phases(round(&svd.u_hat), constraint.clone())?,
        stats: DesignStats::default(),
    })
}

/// SVD baseband stage on the effective channel, both sides scaled to
/// `‖·‖_F² = N_s`.
pub fn attach_baseband(h: &crate::CMatrix, analog: AnalogDesign) -> Result<HybridDesign> {
    let h_eff = effective_channel(h, &analog.f_rf, &analog.w_rf)?;
    let (f_bb, w_bb) = baseband_svd(&h_eff)?;
    let f_bb = normalize_power(&analog.f_rf, &f_bb)?;
    let w_bb = normalize_combiner_power(&analog.w_rf, &w_bb)?;
    let beamformer = HybridBeamformer::new(analog.f_rf, f_bb, analog.w_rf, w_bb)?;
    Ok(HybridDesign {
        beamformer,
        stats: analog.stats,
    })
}
