//! Geometric narrow-band mmWave channel over uniform linear arrays, and the
//! truncated SVD the analog designs work from.

use std::f64::consts::{FRAC_PI_2, TAU};

use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};

use crate::numerics::unit_phase_of_largest;
use crate::{CMatrix, CVector, Complex64, Error, Result, SystemConfig};

mod io;

pub use io::{parse_channel, read_channel, render_channel, write_channel};

/// One propagation path: complex gain, departure and arrival angles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathParams {
    pub gain: Complex64,
    pub aod: f64,
    pub aoa: f64,
}

impl PathParams {
    pub fn angles_in_range(&self) -> bool {
        (-FRAC_PI_2..=FRAC_PI_2).contains(&self.aod) && (-FRAC_PI_2..=FRAC_PI_2).contains(&self.aoa)
    }
}

/// A drawn channel `H` (`N_r × N_t`) together with the paths it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h: CMatrix,
    pub paths: Vec<PathParams>,
    pub spacing_over_lambda: f64,
}

impl ChannelRealization {
    pub fn n_rx(&self) -> usize {
        self.h.nrows()
    }

    pub fn n_tx(&self) -> usize {
        self.h.ncols()
    }

    /// Relative Frobenius error between `h` and the matrix rebuilt from `paths`.
    pub fn reconstruction_error(&self) -> f64 {
        let rebuilt = channel_from_paths(self.n_rx(), self.n_tx(), &self.paths, self.spacing_over_lambda);
        let diff = (&self.h - rebuilt).norm();
        let scale = self.h.norm();
        if scale > 0.0 {
            diff / scale
        } else {
            diff
        }
    }
}

/// ULA steering vector: entry `k` is `e^{j2π(d/λ)k sinθ}/√n`.
pub fn array_response(n: usize, theta: f64, spacing_over_lambda: f64) -> CVector {
    let scale = 1.0 / (n as f64).sqrt();
    let step = TAU * spacing_over_lambda * theta.sin();
    CVector::from_fn(n, |k, _| Complex64::from_polar(scale, step * k as f64))
}

/// `H = √(N_t N_r / L) Σ_i α_i a_r(θ_i^r) a_t(θ_i^t)ᴴ`.
pub fn channel_from_paths(n_rx: usize, n_tx: usize, paths: &[PathParams], spacing_over_lambda: f64) -> CMatrix {
    let mut h = CMatrix::zeros(n_rx, n_tx);
    if paths.is_empty() {
        return h;
    }
    let norm = ((n_tx * n_rx) as f64 / paths.len() as f64).sqrt();
    for p in paths {
        let ar = array_response(n_rx, p.aoa, spacing_over_lambda);
        let at = array_response(n_tx, p.aod, spacing_over_lambda);
        h.ger(p.gain * norm, &ar, &at.conjugate(), Complex64::new(1.0, 0.0));
    }
    h
}

/// Draws `L` paths with `α ~ CN(0, 1/L)` and angles uniform on `[−π/2, π/2]`.
pub fn sample_paths<R: Rng + ?Sized>(n_paths: usize, rng: &mut R) -> Vec<PathParams> {
    let std = (0.5 / n_paths as f64).sqrt();
    let gauss = Normal::new(0.0, std).expect("finite standard deviation");
    let angles = Uniform::new_inclusive(-FRAC_PI_2, FRAC_PI_2).expect("valid angle range");
    (0..n_paths)
        .map(|_| {
            let gain = Complex64::new(gauss.sample(rng), gauss.sample(rng));
            let aod = angles.sample(rng);
            let aoa = angles.sample(rng);
            PathParams { gain, aod, aoa }
        })
        .collect()
}

/// Draws a channel of explicit dimensions.
pub fn sample_channel_dims<R: Rng + ?Sized>(
    n_rx: usize,
    n_tx: usize,
    n_paths: usize,
    spacing_over_lambda: f64,
    rng: &mut R,
) -> ChannelRealization {
    let paths = sample_paths(n_paths, rng);
    let h = channel_from_paths(n_rx, n_tx, &paths, spacing_over_lambda);
    ChannelRealization {
        h,
        paths,
        spacing_over_lambda,
    }
}

/// Draws the point-to-point channel described by `config`.
pub fn sample_channel<R: Rng + ?Sized>(config: &SystemConfig, rng: &mut R) -> ChannelRealization {
    sample_channel_dims(
        config.n_rx,
        config.n_tx,
        config.n_paths,
        config.spacing_over_lambda,
        rng,
    )
}

/// The `N_s` leading singular triplets `H ≈ Û Σ̂ V̂ᴴ`.
///
/// Phase convention: the largest-modulus entry of each `v̂` column is real
/// positive, and the matching `û` column carries the same rotation.
#[derive(Debug, Clone)]
pub struct TruncatedSvd {
    pub u_hat: CMatrix,
    pub sigma_hat: Vec<f64>,
    pub v_hat: CMatrix,
}

impl TruncatedSvd {
    pub fn n_streams(&self) -> usize {
        self.sigma_hat.len()
    }

    /// `Û Σ̂ V̂ᴴ`.
    pub fn reconstruct(&self) -> CMatrix {
        let mut us = self.u_hat.clone();
        for (j, s) in self.sigma_hat.iter().enumerate() {
            us.column_mut(j).scale_mut(*s);
        }
        us * self.v_hat.adjoint()
    }

    /// `Σ̂ V̂ᴴ` (`N_s × N_t`).
    pub fn sigma_v_h(&self) -> CMatrix {
        let mut m = self.v_hat.adjoint();
        for (i, s) in self.sigma_hat.iter().enumerate() {
            m.row_mut(i).scale_mut(*s);
        }
        m
    }
}

pub fn truncate_svd(h: &CMatrix, n_streams: usize) -> Result<TruncatedSvd> {
    let (m, n) = h.shape();
    if n_streams == 0 || n_streams > m.min(n) {
        return Err(Error::invalid(format!(
            "cannot keep {n_streams} singular triplets of a {m}x{n} matrix"
        )));
    }
    if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::invalid("channel matrix has non-finite entries"));
    }
    let svd = h.clone().svd(true, true);
    let u = svd.u.expect("left singular vectors requested");
    let v_t = svd.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));

    let mut u_hat = CMatrix::zeros(m, n_streams);
    let mut v_hat = CMatrix::zeros(n, n_streams);
    let mut sigma_hat = Vec::with_capacity(n_streams);
    for (dst, &src) in order.iter().take(n_streams).enumerate() {
        let v_col: CVector = v_t.row(src).adjoint();
        let rot = unit_phase_of_largest(&v_col).conj();
        v_hat.set_column(dst, &(v_col * rot));
        u_hat.set_column(dst, &(u.column(src) * rot));
        sigma_hat.push(svd.singular_values[src]);
    }
    Ok(TruncatedSvd {
        u_hat,
        sigma_hat,
        v_hat,
    })
}
