//! The discrete phase set of a B-bit phase shifter and nearest-phase
//! quantization under the circular metric.

use std::f64::consts::{PI, TAU};

use crate::{Complex64, Error, Result};

/// Largest supported phase-shifter resolution.
pub const MAX_BITS: u32 = 24;

/// Tolerance for codebook membership checks.
pub const MEMBERSHIP_TOL: f64 = 1e-12;

/// Phases `2πb / 2^B` for `b = 1..=2^B`, strictly increasing in `(0, 2π]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseCodebook {
    bits: u32,
    phases: Vec<f64>,
    units: Vec<Complex64>,
}

/// Builds the codebook for a `bits`-bit phase shifter.
pub fn build_codebook(bits: u32) -> Result<PhaseCodebook> {
    PhaseCodebook::new(bits)
}

/// Returns the codebook member closest to `theta` under the circular metric.
pub fn quantize_phase(theta: f64, codebook: &PhaseCodebook) -> Result<f64> {
    if !theta.is_finite() {
        return Err(Error::invalid(format!("phase must be finite, got {theta}")));
    }
    Ok(codebook.phase(codebook.nearest_index(theta)))
}

/// Wrap-around distance between two angles, in `[0, π]`.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

impl PhaseCodebook {
    pub fn new(bits: u32) -> Result<Self> {
        if bits == 0 {
            return Err(Error::invalid("phase-shifter resolution must be at least 1 bit"));
        }
        if bits > MAX_BITS {
            return Err(Error::invalid(format!(
                "phase-shifter resolution {bits} exceeds the supported maximum of {MAX_BITS}"
            )));
        }
        let n = 1usize << bits;
        let phases = (1..=n).map(|b| TAU * b as f64 / n as f64).collect();
        let units = (1..=n).map(|b| exact_unit(b, n)).collect();
        Ok(Self { bits, phases, units })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    /// Angular distance between neighbouring phases.
    pub fn step(&self) -> f64 {
        TAU / self.len() as f64
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    /// Phase of the 1-based index `b`.
    pub fn phase(&self, b: usize) -> f64 {
        self.phases[b - 1]
    }

    /// Unit-modulus entry `e^{j 2πb/2^B}` for the 1-based index `b`.
    /// Quadrantal phases are exact, so `B = 1` yields exactly `±1`.
    pub fn unit(&self, b: usize) -> Complex64 {
        self.units[b - 1]
    }

    /// 1-based index of the nearest member; midpoint ties go to the smaller index.
    pub fn nearest_index(&self, theta: f64) -> usize {
        let n = self.len() as i64;
        let x = theta.rem_euclid(TAU) / self.step();
        let lower = x.floor();
        let frac = x - lower;
        let to_index = |k: i64| -> usize {
            let r = k.rem_euclid(n);
            if r == 0 {
                n as usize
            } else {
                r as usize
            }
        };
        let b_lo = to_index(lower as i64);
        let b_hi = to_index(lower as i64 + 1);
        if frac < 0.5 {
            b_lo
        } else if frac > 0.5 {
            b_hi
        } else {
            b_lo.min(b_hi)
        }
    }

    /// 1-based index of `theta` if it is a member within [`MEMBERSHIP_TOL`].
    pub fn index_of(&self, theta: f64) -> Option<usize> {
        if !theta.is_finite() {
            return None;
        }
        let b = self.nearest_index(theta);
        (circular_distance(theta, self.phase(b)) <= MEMBERSHIP_TOL).then_some(b)
    }

    pub fn contains(&self, theta: f64) -> bool {
        self.index_of(theta).is_some()
    }

    /// Worst-case circular quantization error, `π / 2^B`.
    pub fn max_error(&self) -> f64 {
        PI / self.len() as f64
    }
}

fn exact_unit(b: usize, n: usize) -> Complex64 {
    if (4 * b).is_multiple_of(n) {
        match (4 * b / n) % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    } else {
        Complex64::cis(TAU * b as f64 / n as f64)
    }
}

/// Phase set available to an analog beamformer: a finite codebook, or
/// unconstrained phases (the infinite-resolution reference).
#[derive(Debug, Clone, PartialEq)]
pub enum PhaseConstraint {
    Quantized(PhaseCodebook),
    Unquantized,
}

impl PhaseConstraint {
    pub fn bits(bits: u32) -> Result<Self> {
        Ok(PhaseConstraint::Quantized(PhaseCodebook::new(bits)?))
    }

    pub fn codebook(&self) -> Option<&PhaseCodebook> {
        match self {
            PhaseConstraint::Quantized(cb) => Some(cb),
            PhaseConstraint::Unquantized => None,
        }
    }

    /// Maps an arbitrary angle onto the feasible set.
    pub fn project(&self, theta: f64) -> f64 {
        match self {
            PhaseConstraint::Quantized(cb) => cb.phase(cb.nearest_index(theta)),
            PhaseConstraint::Unquantized => theta.rem_euclid(TAU),
        }
    }

    /// Unit-modulus entry for a feasible phase.
    pub fn unit(&self, theta: f64) -> Complex64 {
        match self {
            PhaseConstraint::Quantized(cb) => cb.unit(cb.nearest_index(theta)),
            PhaseConstraint::Unquantized => Complex64::cis(theta),
        }
    }

    pub fn is_feasible(&self, theta: f64) -> bool {
        match self {
            PhaseConstraint::Quantized(cb) => cb.contains(theta),
            PhaseConstraint::Unquantized => theta.is_finite(),
        }
    }
}
