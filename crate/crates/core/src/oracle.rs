//! Brute-force references for tests and the oracle-comparison experiment.

use rayon::prelude::*;
use std::f64::consts::TAU;

use crate::analog_onebit::pair_value;
use crate::analog_pm::{
    check_dims, successive_pair_design, AnalogDesign, PairSolution, Side, DEFAULT_ALPHA_REL, DEFAULT_OUTER_CAP,
};
use crate::channel::{truncate_svd, ChannelRealization};
use crate::codebook::{PhaseCodebook, PhaseConstraint};
use crate::{CMatrix, CVector, Complex64, Error, Result, SystemConfig};

/// Upper bound on `|B|^{N_t} · |B|^{N_r}` accepted by [`exhaustive_pair`].
pub const EXHAUSTIVE_LIMIT: f64 = (1u64 << 26) as f64;

/// Global optimum of `|wᴴ Q f|` over codebook phases.
#[derive(Debug, Clone)]
pub struct ExhaustivePair {
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    /// `e^{jθ}/√N_t` built from exact codebook units.
    pub f: CVector,
    pub w: CVector,
    pub value: f64,
}

/// Enumerates every pair of codebook-phase vectors.
///
/// A common phase rotation of `f` (or `w`) by a codebook phase does not
/// change the objective, so the first entry on each side is pinned at `2π`
/// and only the remaining `N_t − 1 + N_r − 1` phases are searched. Among
/// equal values the lexicographically smallest phase-index tuple
/// (precoder first) is reported.
pub fn exhaustive_pair(q: &CMatrix, codebook: &PhaseCodebook) -> Result<ExhaustivePair> {
    let (nr, nt) = q.shape();
    if nr == 0 || nt == 0 {
        return Err(Error::invalid("exhaustive search needs a non-empty matrix"));
    }
    let m = codebook.len();
    let size = (m as f64).powi((nt + nr) as i32);
    if size > EXHAUSTIVE_LIMIT {
        return Err(Error::TooLarge {
            size,
            limit: EXHAUSTIVE_LIMIT,
        });
    }
    let units: Vec<Complex64> = (1..=m).map(|b| codebook.unit(b)).collect();
    let f_count = m.pow((nt - 1) as u32);

    let best = (0..f_count)
        .into_par_iter()
        .map(|f_code| {
            let f = units_from_code(f_code, nt, &units);
            let y = q * CVector::from_vec(f);
            let (value, w_code) = best_combiner(&y, &units);
            (value, f_code, w_code)
        })
        .reduce(
            || (f64::NEG_INFINITY, usize::MAX, usize::MAX),
            |a, b| {
                if b.0 > a.0 || (b.0 == a.0 && (b.1, b.2) < (a.1, a.2)) {
                    b
                } else {
                    a
                }
            },
        );

    let (_, f_code, w_code) = best;
    let theta = phases_from_code(f_code, nt, codebook);
    let phi = phases_from_code(w_code, nr, codebook);
    let scale_t = Complex64::from(1.0 / (nt as f64).sqrt());
    let scale_r = Complex64::from(1.0 / (nr as f64).sqrt());
    let f = CVector::from_vec(units_from_code(f_code, nt, &units)) * scale_t;
    let w = CVector::from_vec(units_from_code(w_code, nr, &units)) * scale_r;
    let value = pair_value(q, &f, &w);
    Ok(ExhaustivePair {
        theta,
        phi,
        f,
        w,
        value,
    })
}

/// Unit entries for a mixed-radix code over the free entries `1..n`
/// (entry 0 pinned at the last codebook unit); digit `d` selects unit `d+1`,
/// most significant digit first.
fn units_from_code(code: usize, n: usize, units: &[Complex64]) -> Vec<Complex64> {
    digits(code, n, units.len()).into_iter().map(|d| units[d]).collect()
}

fn phases_from_code(code: usize, n: usize, codebook: &PhaseCodebook) -> Vec<f64> {
    digits(code, n, codebook.len())
        .into_iter()
        .map(|d| codebook.phase(d + 1))
        .collect()
}

fn digits(mut code: usize, n: usize, radix: usize) -> Vec<usize> {
    let mut out = vec![radix - 1; n];
    for slot in out[1..].iter_mut().rev() {
        *slot = code % radix;
        code /= radix;
    }
    out
}

/// Best `|Σ_j conj(w_j) y_j|` with `w_0` pinned, by depth-first enumeration
/// in lexicographic order; returns the unnormalized value and the code.
fn best_combiner(y: &CVector, units: &[Complex64]) -> (f64, usize) {
    let n = y.len();
    let radix = units.len();
    let start = units[radix - 1].conj() * y[0];
    let mut best = (f64::NEG_INFINITY, 0usize);
    fn walk(depth: usize, code: usize, acc: Complex64, y: &CVector, units: &[Complex64], best: &mut (f64, usize)) {
        if depth == y.len() {
            let v = acc.norm();
            if v > best.0 {
                *best = (v, code);
            }
            return;
        }
        for (d, u) in units.iter().enumerate() {
            walk(
                depth + 1,
                code * units.len() + d,
                acc + u.conj() * y[depth],
                y,
                units,
                best,
            );
        }
    }
    walk(1, 0, start, y, units, &mut best);
    debug_assert!(n >= 1);
    best
}

/// Grid search over one phase with the others fixed: returns the grid point
/// `2πm/G`, `m ∈ 0..G`, maximizing `|wᴴ Q f|`; the first maximum wins.
pub fn grid_phase_oracle(
    q: &CMatrix,
    theta: &[f64],
    phi: &[f64],
    index: usize,
    side: Side,
    grid_points: usize,
) -> Result<f64> {
    let (nr, nt) = q.shape();
    if grid_points < 3 {
        return Err(Error::invalid(format!(
            "grid needs at least 3 points, got {grid_points}"
        )));
    }
    if theta.len() != nt || phi.len() != nr {
        return Err(Error::invalid("phase vectors do not match the matrix shape"));
    }
    let f: Vec<Complex64> = theta.iter().map(|t| Complex64::cis(*t)).collect();
    let w: Vec<Complex64> = phi.iter().map(|p| Complex64::cis(*p)).collect();
    // objective(t) ∝ |rest + coeff·e^{±jt}|
    let (rest, coeff, conj) = match side {
        Side::Tx => {
            if index >= nt {
                return Err(Error::invalid("transmit index out of range"));
            }
            let coupling = |u: usize| -> Complex64 { (0..nr).map(|j| w[j].conj() * q[(j, u)]).sum() };
            let rest: Complex64 = (0..nt).filter(|&u| u != index).map(|u| coupling(u) * f[u]).sum();
            (rest, coupling(index), false)
        }
        Side::Rx => {
            if index >= nr {
                return Err(Error::invalid("receive index out of range"));
            }
            let received = |j: usize| -> Complex64 { (0..nt).map(|i| q[(j, i)] * f[i]).sum() };
            let rest: Complex64 = (0..nr).filter(|&j| j != index).map(|j| w[j].conj() * received(j)).sum();
            (rest, received(index), true)
        }
    };
    let mut best = (f64::NEG_INFINITY, 0.0);
    for m in 0..grid_points {
        let t = TAU * m as f64 / grid_points as f64;
        let rot = if conj { Complex64::cis(-t) } else { Complex64::cis(t) };
        let v = (rest + coeff * rot).norm();
        if v > best.0 {
            best = (v, t);
        }
    }
    Ok(best.1)
}

/// Single-user analog design whose pair solver is [`exhaustive_pair`].
pub fn design_analog_su_exhaustive(h: &ChannelRealization, config: &SystemConfig) -> Result<AnalogDesign> {
    check_dims(h, config)?;
    let svd = truncate_svd(&h.h, config.n_streams)?;
    let codebook = PhaseCodebook::new(config.bits)?;
    let constraint = PhaseConstraint::Quantized(codebook.clone());
    successive_pair_design(&svd, &constraint, DEFAULT_ALPHA_REL, DEFAULT_OUTER_CAP, |ctx| {
        let pair = exhaustive_pair(&ctx.channel.q, &codebook)?;
        Ok(PairSolution {
            theta: pair.theta,
            phi: pair.phi,
            objective: pair.value,
            sweeps: 1,
            capped: false,
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analog_pm::{conditional_phase, pair_objective};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_q(rng: &mut ChaCha8Rng, r: usize, c: usize) -> CMatrix {
        CMatrix::from_fn(r, c, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        })
    }

    /// Full enumeration without pinning, for cross-checking the pinned search.
    fn naive_max(q: &CMatrix, cb: &PhaseCodebook) -> f64 {
        let (nr, nt) = q.shape();
        let m = cb.len();
        let mut best: f64 = 0.0;
        for fc in 0..m.pow(nt as u32) {
            for wc in 0..m.pow(nr as u32) {
                let mut a = fc;
                let th: Vec<f64> = (0..nt)
                    .map(|_| {
                        let d = a % m;
                        a /= m;
                        cb.phase(d + 1)
                    })
                    .collect();
                let mut b = wc;
                let ph: Vec<f64> = (0..nr)
                    .map(|_| {
                        let d = b % m;
                        b /= m;
                        cb.phase(d + 1)
                    })
                    .collect();
                best = best.max(pair_objective(q, &th, &ph));
            }
        }
        best
    }

    #[test]
    fn all_ones_example() {
        let q = CMatrix::from_element(2, 2, Complex64::from(1.0));
        let cb = PhaseCodebook::new(1).unwrap();
        let p = exhaustive_pair(&q, &cb).unwrap();
        assert!((p.value - 2.0).abs() < 1e-12);
        assert_eq!(p.theta, vec![TAU, TAU]);
        assert_eq!(p.phi, vec![TAU, TAU]);
    }

    #[test]
    fn pinned_search_matches_full_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for (bits, nr, nt) in [(1, 3, 4), (2, 2, 3), (3, 2, 2), (1, 1, 5)] {
            let cb = PhaseCodebook::new(bits).unwrap();
            for _ in 0..5 {
                let q = random_q(&mut rng, nr, nt);
                let p = exhaustive_pair(&q, &cb).unwrap();
                let naive = naive_max(&q, &cb);
                assert!((p.value - naive).abs() < 1e-12 * naive);
                assert_eq!(p.theta[0], TAU);
                assert_eq!(p.phi[0], TAU);
                assert!((pair_objective(&q, &p.theta, &p.phi) - p.value).abs() < 1e-12 * naive);
            }
        }
    }

    #[test]
    fn global_sign_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let q = random_q(&mut rng, 3, 3);
        let p = exhaustive_pair(&q, &PhaseCodebook::new(1).unwrap()).unwrap();
        assert_eq!(pair_value(&q, &(-p.f.clone()), &(-p.w.clone())), p.value);
    }

    #[test]
    fn guard_rejects_large_search() {
        let q = CMatrix::zeros(8, 8);
        assert!(matches!(
            exhaustive_pair(&q, &PhaseCodebook::new(2).unwrap()),
            Err(Error::TooLarge { .. })
        ));
        assert!(exhaustive_pair(&CMatrix::zeros(13, 13), &PhaseCodebook::new(1).unwrap()).is_ok());
    }

    #[test]
    fn ties_pick_smallest_index_tuple() {
        let q = CMatrix::zeros(2, 2);
        let p = exhaustive_pair(&q, &PhaseCodebook::new(2).unwrap()).unwrap();
        let cb = PhaseCodebook::new(2).unwrap();
        assert_eq!(p.theta, vec![TAU, cb.phase(1)]);
        assert_eq!(p.phi, vec![TAU, cb.phase(1)]);
    }

    #[test]
    fn grid_constant_objective_returns_zero() {
        let mut q = CMatrix::from_element(2, 2, Complex64::from(1.0));
        q[(0, 1)] = Complex64::from(0.0);
        q[(1, 1)] = Complex64::from(0.0);
        let t = grid_phase_oracle(&q, &[0.3, 0.7], &[0.1, 0.2], 1, Side::Tx, 1000).unwrap();
        assert_eq!(t, 0.0);
        assert!(grid_phase_oracle(&q, &[0.3, 0.7], &[0.1, 0.2], 1, Side::Tx, 2).is_err());
    }

    #[test]
    fn grid_scalar_closed_form() {
        // One receive antenna, two transmit antennas with the second phase
        // fixed at 0: the optimum rotates the first term onto the real axis.
        let z = Complex64::from_polar(1.0, 1.1);
        let g = 10_000;
        let q = CMatrix::from_row_slice(1, 2, &[z, Complex64::from(1.0)]);
        let t = grid_phase_oracle(&q, &[0.0, 0.0], &[0.0], 0, Side::Tx, g).unwrap();
        let expected = (-1.1f64).rem_euclid(TAU);
        assert!(crate::codebook::circular_distance(t, expected) <= TAU / g as f64);
    }

    #[test]
    fn grid_values_non_decreasing_when_doubling() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let q = random_q(&mut rng, 3, 4);
            let th: Vec<f64> = (0..4).map(|_| rng.random::<f64>() * TAU).collect();
            let ph: Vec<f64> = (0..3).map(|_| rng.random::<f64>() * TAU).collect();
            let mut prev = 0.0;
            for g in [16, 32, 64, 128, 256] {
                let t = grid_phase_oracle(&q, &th, &ph, 2, Side::Rx, g).unwrap();
                let mut p = ph.clone();
                p[2] = t;
                let v = pair_objective(&q, &th, &p);
                assert!(v >= prev - 1e-12);
                prev = v;
            }
        }
    }

    #[test]
    fn conditional_phase_dominates_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let q = random_q(&mut rng, 4, 5);
            let th: Vec<f64> = (0..5).map(|_| rng.random::<f64>() * TAU).collect();
            let ph: Vec<f64> = (0..4).map(|_| rng.random::<f64>() * TAU).collect();
            for (side, idx) in [(Side::Tx, 3), (Side::Rx, 1)] {
                let g = grid_phase_oracle(&q, &th, &ph, idx, side, 10_000).unwrap();
                let c = conditional_phase(&q, &th, &ph, idx, side);
                let (mut tg, mut pg, mut tc, mut pc) = (th.clone(), ph.clone(), th.clone(), ph.clone());
                match side {
                    Side::Tx => {
                        tg[idx] = g;
                        tc[idx] = c;
                    }
                    Side::Rx => {
                        pg[idx] = g;
                        pc[idx] = c;
                    }
                }
                assert!(pair_objective(&q, &tc, &pc) >= pair_objective(&q, &tg, &pg) - 1e-12);
            }
        }
    }
}
