//! Analog and hybrid beamformer containers.

use nalgebra::DMatrix;

use crate::codebook::{PhaseConstraint, MEMBERSHIP_TOL};
use crate::numerics::angle;
use crate::{CMatrix, Complex64, Error, Result};

/// Relative tolerance of the power-normalization invariant.
pub const POWER_TOL: f64 = 1e-9;

/// Unit-modulus analog network: every entry is `e^{jθ}/√N` with `θ` feasible
/// for the associated phase constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalogBeamformer {
    matrix: CMatrix,
    phases: DMatrix<f64>,
    scale: f64,
    constraint: PhaseConstraint,
}

impl AnalogBeamformer {
    /// Builds the network from an `N × M` phase matrix. Every phase must
    /// already be feasible; use [`PhaseConstraint::project`] first otherwise.
    pub fn from_phases(phases: DMatrix<f64>, constraint: PhaseConstraint) -> Result<Self> {
        let n = phases.nrows();
        if n == 0 || phases.ncols() == 0 {
            return Err(Error::invalid("analog beamformer must be non-empty"));
        }
        if let Some(bad) = phases.iter().find(|&&t| !constraint.is_feasible(t)) {
            return Err(Error::Invariant(format!("phase {bad} is not in the phase set")));
        }
        let scale = 1.0 / (n as f64).sqrt();
        let matrix = phases.map(|t| constraint.unit(t) * scale);
        Ok(Self {
            matrix,
            phases,
            scale,
            constraint,
        })
    }

    /// Builds the network from per-column phase vectors.
    pub fn from_columns(columns: &[Vec<f64>], constraint: PhaseConstraint) -> Result<Self> {
        let n = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != n) {
            return Err(Error::invalid("phase columns have different lengths"));
        }
        let phases = DMatrix::from_fn(n, columns.len(), |i, j| columns[j][i]);
        Self::from_phases(phases, constraint)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn phases(&self) -> &DMatrix<f64> {
        &self.phases
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn constraint(&self) -> &PhaseConstraint {
        &self.constraint
    }

    pub fn nrows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.matrix.ncols()
    }

    /// Re-checks the modulus and phase-set invariants from the stored entries.
    pub fn validate(&self) -> Result<()> {
        for z in self.matrix.iter() {
            check_entry(*z, self.scale, &self.constraint)?;
        }
        Ok(())
    }
}

fn check_entry(z: Complex64, scale: f64, constraint: &PhaseConstraint) -> Result<()> {
    if (z.norm() - scale).abs() > MEMBERSHIP_TOL * scale {
        return Err(Error::Invariant(format!(
            "entry modulus {} differs from {scale}",
            z.norm()
        )));
    }
    if !constraint.is_feasible(angle(z)) {
        return Err(Error::Invariant(format!(
            "entry phase {} is not in the phase set",
            angle(z)
        )));
    }
    Ok(())
}

/// The quadruple `(F_RF, F_BB, W_RF, W_BB)` with `‖F_RF F_BB‖_F² = N_s` and
/// `‖W_RF W_BB‖_F² = N_s`.
#[derive(Debug, Clone)]
pub struct HybridBeamformer {
    pub f_rf: AnalogBeamformer,
    pub f_bb: CMatrix,
    pub w_rf: AnalogBeamformer,
    pub w_bb: CMatrix,
}

impl HybridBeamformer {
    pub fn new(f_rf: AnalogBeamformer, f_bb: CMatrix, w_rf: AnalogBeamformer, w_bb: CMatrix) -> Result<Self> {
        let bf = Self { f_rf, f_bb, w_rf, w_bb };
        bf.validate()?;
        Ok(bf)
    }

    pub fn n_streams(&self) -> usize {
        self.f_bb.ncols()
    }

    /// Overall precoder `F_RF F_BB`.
    pub fn precoder(&self) -> CMatrix {
        self.f_rf.matrix() * &self.f_bb
    }

    /// Overall combiner `W_RF W_BB`.
    pub fn combiner(&self) -> CMatrix {
        self.w_rf.matrix() * &self.w_bb
    }

    pub fn validate(&self) -> Result<()> {
        let ns = self.f_bb.ncols();
        if self.f_rf.ncols() != self.f_bb.nrows() || self.w_rf.ncols() != self.w_bb.nrows() || self.w_bb.ncols() != ns {
            return Err(Error::invalid("hybrid beamformer dimensions do not conform"));
        }
        self.f_rf.validate()?;
        self.w_rf.validate()?;
        let target = ns as f64;
        for (name, m) in [("precoder", self.precoder()), ("combiner", self.combiner())] {
            let p = m.norm_squared();
            if (p - target).abs() > POWER_TOL * target {
                return Err(Error::Invariant(format!(
                    "{name} power {p} differs from N_s = {target}"
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, TAU};

    #[test]
    fn one_bit_entries_are_exact() {
        let c = PhaseConstraint::bits(1).unwrap();
        let bf = AnalogBeamformer::from_columns(&[vec![PI, TAU, TAU, PI]], c).unwrap();
        let expected = [-0.5, 0.5, 0.5, -0.5];
        for (z, e) in bf.matrix().iter().zip(expected) {
            assert_eq!(*z, Complex64::new(e, 0.0));
        }
        bf.validate().unwrap();
    }

    #[test]
    fn infeasible_phase_rejected() {
        let c = PhaseConstraint::bits(2).unwrap();
        assert!(AnalogBeamformer::from_columns(&[vec![0.3, PI]], c).is_err());
    }

    #[test]
    fn hybrid_power_invariant() {
        let c = PhaseConstraint::bits(2).unwrap();
        let f = AnalogBeamformer::from_columns(&[vec![TAU; 4]], c.clone()).unwrap();
        let w = AnalogBeamformer::from_columns(&[vec![PI; 4]], c).unwrap();
        let one = CMatrix::identity(1, 1);
        HybridBeamformer::new(f.clone(), one.clone(), w.clone(), one.clone()).unwrap();
        assert!(HybridBeamformer::new(f, one.scale(2.0), w, one).is_err());
    }
}
