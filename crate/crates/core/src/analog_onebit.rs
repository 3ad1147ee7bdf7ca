//! Binary (one-bit) analog pair design.
//!
//! The pair problem `max |wᴴ Q f|` over `f ∈ {±1/√N_t}^{N_t}`,
//! `w ∈ {±1/√N_r}^{N_r}` is attacked through the dominant singular pair
//! `(p, g)` of `Q`. For a single vector `g`, the maximizer of `|fᴴ g|` over
//! binary `f` lies in a family of only `N` step vectors: fold every phase
//! into `[−π/2, π/2)` (remembering which entries were flipped), sort, and
//! take the vectors with the first `k` sorted entries positive. The final
//! pair is chosen jointly over the two candidate families on the full `Q`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use crate::analog_pm::{successive_pair_design, AnalogDesign, PairSolution, DEFAULT_ALPHA_REL, DEFAULT_OUTER_CAP};
use crate::channel::{truncate_svd, ChannelRealization};
use crate::codebook::PhaseConstraint;
use crate::numerics::{angle, power_iteration_rank1, DEFAULT_POWER_TOL};
use crate::{CMatrix, CVector, Complex64, Error, Result, SystemConfig};

/// `N` binary candidates built from one complex vector.
#[derive(Debug, Clone)]
pub struct CandidateSet {
    /// Candidate vectors with entries exactly `±1/√N`.
    pub vectors: Vec<CVector>,
    /// `permutation[k]` is the original index of the `k`-th smallest folded angle.
    pub permutation: Vec<usize>,
    /// Entries whose angle was folded by `π`.
    pub flips: Vec<bool>,
}

/// Folds the entry phases of `g` into `[−π/2, π/2)`.
///
/// Phases in `[π/2, 3π/2)` (taking `[−π, −π/2)` as `[π, 3π/2)`) are shifted
/// by `−π` and flagged. Zero entries count as phase 0, unflipped.
pub fn fold_angles(g: &CVector) -> (Vec<f64>, Vec<bool>) {
    g.iter().map(|z| fold_one(angle(*z))).unzip()
}

fn fold_one(psi: f64) -> (f64, bool) {
    let psi = if psi < -FRAC_PI_2 { psi + TAU } else { psi };
    let (mut folded, mut flip) = if psi >= FRAC_PI_2 {
        (psi - PI, true)
    } else {
        (psi, false)
    };
    if folded >= FRAC_PI_2 {
        folded -= PI;
        flip = !flip;
    }
    (folded, flip)
}

/// Builds the `N` step candidates for `max |fᴴ g|`.
pub fn candidate_vectors(g: &CVector) -> CandidateSet {
    let n = g.len();
    let (folded, flips) = fold_angles(g);
    let mut permutation: Vec<usize> = (0..n).collect();
    permutation.sort_by(|&a, &b| folded[a].total_cmp(&folded[b]));
    let scale = 1.0 / (n as f64).sqrt();

    let vectors = (1..=n)
        .map(|k| {
            let mut v = CVector::zeros(n);
            for (rank, &orig) in permutation.iter().enumerate() {
                let step = if rank < k { scale } else { -scale };
                let signed = if flips[orig] { -step } else { step };
                v[orig] = Complex64::new(signed, 0.0);
            }
            v
        })
        .collect();
    CandidateSet {
        vectors,
        permutation,
        flips,
    }
}

/// `|wᴴ Q f|`.
pub fn pair_value(q: &CMatrix, f: &CVector, w: &CVector) -> f64 {
    w.dotc(&(q * f)).norm()
}

/// Power-iteration cap used by the one-bit design. Successive-pair channels
/// can have a near-degenerate leading singular pair, so this sits well above
/// the generic numerics default.
pub const ONEBIT_POWER_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneBitOptions {
    pub power_tol: f64,
    pub power_max_iter: usize,
    pub alpha_rel: f64,
    pub outer_cap: usize,
}

impl Default for OneBitOptions {
    fn default() -> Self {
        Self {
            power_tol: DEFAULT_POWER_TOL,
            power_max_iter: ONEBIT_POWER_MAX_ITER,
            alpha_rel: DEFAULT_ALPHA_REL,
            outer_cap: DEFAULT_OUTER_CAP,
        }
    }
}

/// Binary precoder/combiner pair with its objective value.
#[derive(Debug, Clone)]
pub struct OneBitPair {
    pub f: CVector,
    pub w: CVector,
    pub value: f64,
    pub power_iterations: usize,
}

/// Joint selection over the candidate families built from the dominant
/// singular pair of `q`. Ties go to the first (precoder, combiner) index
/// pair; the returned vectors have a positive first entry.
pub fn onebit_pair(q: &CMatrix, opts: &OneBitOptions) -> Result<OneBitPair> {
    let triplet = power_iteration_rank1(q, opts.power_tol, opts.power_max_iter)?;
    let f_set = candidate_vectors(&triplet.g);
    let w_set = candidate_vectors(&triplet.p);

    let f_mat = CMatrix::from_columns(&f_set.vectors);
    let w_mat = CMatrix::from_columns(&w_set.vectors);
    let scores = w_mat.adjoint() * (q * f_mat);

    let (mut best_f, mut best_w, mut best) = (0, 0, f64::NEG_INFINITY);
    for k in 0..scores.ncols() {
        for m in 0..scores.nrows() {
            let v = scores[(m, k)].norm();
            if v > best {
                best = v;
                best_f = k;
                best_w = m;
            }
        }
    }
    let f = canonical_sign(f_set.vectors[best_f].clone());
    let w = canonical_sign(w_set.vectors[best_w].clone());
    let value = pair_value(q, &f, &w);
    Ok(OneBitPair {
        f,
        w,
        value,
        power_iterations: triplet.iterations,
    })
}

/// Negates a binary vector whose first entry is negative.
pub fn canonical_sign(v: CVector) -> CVector {
    if !v.is_empty() && v[0].re < 0.0 {
        -v
    } else {
        v
    }
}

/// Phases (`π` for −1, `2π` for +1) of a real binary vector.
pub fn binary_phases(v: &CVector) -> Vec<f64> {
    v.iter().map(|z| if z.re < 0.0 { PI } else { TAU }).collect()
}

/// Binary analog design: the phase-matching outer loop with the pair
/// solver replaced by [`onebit_pair`].
pub fn design_analog_su_onebit(h: &ChannelRealization, config: &SystemConfig) -> Result<AnalogDesign> {
    design_analog_su_onebit_with(h, config, &OneBitOptions::default())
}

pub fn design_analog_su_onebit_with(
    h: &ChannelRealization,
    config: &SystemConfig,
    opts: &OneBitOptions,
) -> Result<AnalogDesign> {
    if config.bits != 1 {
        return Err(Error::invalid(format!(
            "the binary design needs bits = 1, got {}",
            config.bits
        )));
    }
    crate::analog_pm::check_dims(h, config)?;
    let svd = truncate_svd(&h.h, config.n_streams)?;
    let constraint = PhaseConstraint::bits(1)?;
    successive_pair_design(&svd, &constraint, opts.alpha_rel, opts.outer_cap, |ctx| {
        let pair = onebit_pair(&ctx.channel.q, opts)?;
        Ok(PairSolution {
            theta: binary_phases(&pair.f),
            phi: binary_phases(&pair.w),
            objective: pair.value,
            sweeps: 1,
            capped: false,
        })
    })
}
