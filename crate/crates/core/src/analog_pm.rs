//! Iterative phase matching for low-resolution analog precoder/combiner
//! pairs, designed one stream at a time against the interference-included
//! channel of the remaining streams.

use crate::beamformer::AnalogBeamformer;
use crate::channel::{truncate_svd, ChannelRealization, TruncatedSvd};
use crate::codebook::{circular_distance, PhaseConstraint};
use crate::numerics::{angle, solve_checked};
use crate::{CMatrix, CVector, Complex64, Error, Result, SystemConfig};

/// Default regularizer relative to the leading singular value.
pub const DEFAULT_ALPHA_REL: f64 = 1e-6;
pub const DEFAULT_INNER_CAP: usize = 50;
pub const DEFAULT_OUTER_CAP: usize = 10;

/// A pair whose objective is below this fraction of `‖Q_l‖_F` is taken to
/// be stuck and is retried from the leading singular pair of `Q_l`.
pub const STALL_RATIO: f64 = 1e-3;

/// Pivot ratio below which `αI + M` is treated as singular.
const INTERFERENCE_RCOND: f64 = 1e-13;

/// Which side of the pair a phase index refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Tx,
    Rx,
}

/// `Q_l` together with the regularizer used to form it.
#[derive(Debug, Clone)]
pub struct InterferenceChannel {
    pub q: CMatrix,
    pub alpha: f64,
}

/// Phases of one precoder/combiner pair and the value `|wᴴ Q f|` they reach.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseMatchState {
    /// Transmit phases, one per transmit antenna.
    pub theta: Vec<f64>,
    /// Receive phases, one per receive antenna.
    pub phi: Vec<f64>,
    pub objective: f64,
    pub sweeps: usize,
    /// The sweep cap was reached before a sweep left every phase unchanged.
    pub capped: bool,
    /// Objective after every accepted update, starting with the initial value.
    /// Empty unless requested through [`MatchOptions::record_trace`].
    pub trace: Vec<f64>,
}

impl PhaseMatchState {
    pub fn new(theta: Vec<f64>, phi: Vec<f64>) -> Self {
        Self {
            theta,
            phi,
            objective: 0.0,
            sweeps: 0,
            capped: false,
            trace: Vec::new(),
        }
    }

    /// Start aligned with a singular pair: `θ_i = proj(angle(v_i))`,
    /// `φ_j = proj(angle(u_j))`.
    pub fn aligned_with(u: &CVector, v: &CVector, constraint: &PhaseConstraint) -> Self {
        let theta = v.iter().map(|z| constraint.project(angle(*z))).collect();
        let phi = u.iter().map(|z| constraint.project(angle(*z))).collect();
        Self::new(theta, phi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchOptions {
    pub max_sweeps: usize,
    /// A phase change is accepted only if it raises the objective by more
    /// than this relative amount.
    pub accept_tol: f64,
    pub record_trace: bool,
}

impl MatchOptions {
    pub fn for_constraint(constraint: &PhaseConstraint) -> Self {
        let accept_tol = match constraint {
            PhaseConstraint::Quantized(_) => 1e-12,
            PhaseConstraint::Unquantized => 1e-9,
        };
        Self {
            max_sweeps: DEFAULT_INNER_CAP,
            accept_tol,
            record_trace: false,
        }
    }
}

/// `Q_l = Û (αI + Σ̂V̂ᴴ F_{\l} W_{\l}ᴴ Û)⁻¹ Σ̂V̂ᴴ`. Empty exclusion matrices
/// (zero columns) stand for the all-zero matrices.
pub fn interference_channel(
    svd: &TruncatedSvd,
    f_excl: &CMatrix,
    w_excl: &CMatrix,
    alpha: f64,
) -> Result<InterferenceChannel> {
    if !(alpha > 0.0) {
        return Err(Error::invalid(format!("alpha must be positive, got {alpha}")));
    }
    let ns = svd.n_streams();
    if f_excl.nrows() != svd.v_hat.nrows() || w_excl.nrows() != svd.u_hat.nrows() {
        return Err(Error::invalid("excluded beamformers do not match the antenna counts"));
    }
    if f_excl.ncols() != w_excl.ncols() {
        return Err(Error::invalid("excluded precoder and combiner column counts differ"));
    }
    let sv = svd.sigma_v_h();
    let mut inner = CMatrix::from_diagonal_element(ns, ns, Complex64::from(alpha));
    if f_excl.ncols() > 0 {
        inner += (&sv * f_excl) * (w_excl.adjoint() * &svd.u_hat);
    }
    let x = solve_checked(&inner, &sv, INTERFERENCE_RCOND).ok_or(Error::Regularization { alpha })?;
    Ok(InterferenceChannel {
        q: &svd.u_hat * x,
        alpha,
    })
}

/// `|wᴴ Q f|` for `f = e^{jθ}/√N_t`, `w = e^{jφ}/√N_r`.
pub fn pair_objective(q: &CMatrix, theta: &[f64], phi: &[f64]) -> f64 {
    let f = CVector::from_iterator(theta.len(), theta.iter().map(|t| Complex64::cis(*t)));
    let w = CVector::from_iterator(phi.len(), phi.iter().map(|p| Complex64::cis(*p)));
    w.dotc(&(q * f)).norm() / ((theta.len() * phi.len()) as f64).sqrt()
}

/// Unquantized optimum of one phase with all others held fixed.
///
/// Transmit side: with `c_u = Σ_j e^{-jφ_j} Q(j,u)`,
/// `θ̃_i = angle(Σ_{u≠i} c_u e^{jθ_u}) − angle(c_i)`. The receive side is the
/// same rule applied to `Qᴴ` with the roles of the phase vectors swapped.
/// `angle(0)` is taken as 0.
pub fn conditional_phase(q: &CMatrix, theta: &[f64], phi: &[f64], index: usize, side: Side) -> f64 {
    let (nr, nt) = q.shape();
    assert_eq!(theta.len(), nt, "theta length must equal the column count of q");
    assert_eq!(phi.len(), nr, "phi length must equal the row count of q");
    match side {
        Side::Tx => {
            assert!(index < nt, "transmit index out of range");
            let coupling = |u: usize| -> Complex64 { (0..nr).map(|j| Complex64::cis(-phi[j]) * q[(j, u)]).sum() };
            let rest: Complex64 = (0..nt)
                .filter(|&u| u != index)
                .map(|u| coupling(u) * Complex64::cis(theta[u]))
                .sum();
            angle(rest) - angle(coupling(index))
        }
        Side::Rx => {
            assert!(index < nr, "receive index out of range");
            let received = |j: usize| -> Complex64 { (0..nt).map(|i| q[(j, i)] * Complex64::cis(theta[i])).sum() };
            let rest: Complex64 = (0..nr)
                .filter(|&u| u != index)
                .map(|u| Complex64::cis(-phi[u]) * received(u))
                .sum();
            angle(received(index)) - angle(rest)
        }
    }
}

/// Alternating coordinate ascent on `|wᴴ Q f|`: every transmit phase, then
/// every receive phase, each moved to the feasible phase nearest its
/// conditional optimum. Stops after a sweep that changes nothing or at the
/// sweep cap.
pub fn match_pair(
    q: &CMatrix,
    constraint: &PhaseConstraint,
    init: PhaseMatchState,
    opts: &MatchOptions,
) -> Result<PhaseMatchState> {
    let (nr, nt) = q.shape();
    if init.theta.len() != nt || init.phi.len() != nr {
        return Err(Error::invalid(format!(
            "initial phases ({}, {}) do not match Q of shape {nr}x{nt}",
            init.theta.len(),
            init.phi.len()
        )));
    }
    if let Some(bad) = init
        .theta
        .iter()
        .chain(&init.phi)
        .find(|t| !constraint.is_feasible(**t))
    {
        return Err(Error::invalid(format!("initial phase {bad} is not feasible")));
    }
    let norm = 1.0 / ((nt * nr) as f64).sqrt();
    let mut theta = init.theta;
    let mut phi = init.phi;
    let mut f_units: Vec<Complex64> = theta.iter().map(|t| constraint.unit(*t)).collect();
    let mut w_units: Vec<Complex64> = phi.iter().map(|t| constraint.unit(*t)).collect();
    let mut trace = Vec::new();
    if opts.record_trace {
        trace.push(unit_objective(q, &f_units, &w_units) * norm);
    }

    let improves = |new: f64, old: f64| new > old && new > old * (1.0 + opts.accept_tol);

    let mut sweeps = 0;
    let mut capped = true;
    while sweeps < opts.max_sweeps {
        sweeps += 1;
        let mut changed = false;

        // transmit phases, combiner fixed: c_u = Σ_j conj(w_j) Q(j,u)
        let coupling: Vec<Complex64> = (0..nt)
            .map(|u| (0..nr).map(|j| w_units[j].conj() * q[(j, u)]).sum())
            .collect();
        let mut total: Complex64 = coupling.iter().zip(&f_units).map(|(c, f)| c * f).sum();
        for i in 0..nt {
            let rest = total - coupling[i] * f_units[i];
            let cand = constraint.project(angle(rest) - angle(coupling[i]));
            let cand_unit = constraint.unit(cand);
            let new_total = rest + coupling[i] * cand_unit;
            if improves(new_total.norm(), total.norm()) {
                theta[i] = cand;
                f_units[i] = cand_unit;
                total = new_total;
                changed = true;
                if opts.record_trace {
                    trace.push(total.norm() * norm);
                }
            }
        }

        // receive phases, precoder fixed: y_j = Σ_i Q(j,i) f_i
        let received: Vec<Complex64> = (0..nr).map(|j| (0..nt).map(|i| q[(j, i)] * f_units[i]).sum()).collect();
        let mut total: Complex64 = received.iter().zip(&w_units).map(|(y, w)| w.conj() * y).sum();
        for j in 0..nr {
            let rest = total - w_units[j].conj() * received[j];
            let cand = constraint.project(angle(received[j]) - angle(rest));
            let cand_unit = constraint.unit(cand);
            let new_total = rest + cand_unit.conj() * received[j];
            if improves(new_total.norm(), total.norm()) {
                phi[j] = cand;
                w_units[j] = cand_unit;
                total = new_total;
                changed = true;
                if opts.record_trace {
                    trace.push(total.norm() * norm);
                }
            }
        }

        if !changed {
            capped = false;
            break;
        }
    }

    let objective = unit_objective(q, &f_units, &w_units) * norm;
    Ok(PhaseMatchState {
        theta,
        phi,
        objective,
        sweeps,
        capped,
        trace,
    })
}

fn unit_objective(q: &CMatrix, f: &[Complex64], w: &[Complex64]) -> f64 {
    let (nr, nt) = q.shape();
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..nr {
        let y: Complex64 = (0..nt).map(|i| q[(j, i)] * f[i]).sum();
        acc += w[j].conj() * y;
    }
    acc.norm()
}

/// Options of the stream-by-stream outer loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PmOptions {
    pub alpha_rel: f64,
    pub outer_cap: usize,
    pub inner: MatchOptions,
}

impl PmOptions {
    pub fn for_constraint(constraint: &PhaseConstraint) -> Self {
        Self {
            alpha_rel: DEFAULT_ALPHA_REL,
            outer_cap: DEFAULT_OUTER_CAP,
            inner: MatchOptions::for_constraint(constraint),
        }
    }
}

/// Counters collected over one analog design.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DesignStats {
    pub outer_iters: usize,
    pub outer_capped: bool,
    pub pair_runs: usize,
    pub inner_sweeps: usize,
    pub inner_capped: usize,
}

/// Result of a pair solver for one stream.
#[derive(Debug, Clone)]
pub struct PairSolution {
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    pub objective: f64,
    pub sweeps: usize,
    pub capped: bool,
}

/// Everything a pair solver sees for stream `l`.
pub struct PairContext<'a> {
    pub stream: usize,
    pub channel: &'a InterferenceChannel,
    pub svd: &'a TruncatedSvd,
    /// Current phases of this stream's pair, if it has been designed.
    pub current: Option<(&'a [f64], &'a [f64])>,
}

/// Analog precoder and combiner with the counters of the run that built them.
#[derive(Debug, Clone)]
pub struct AnalogDesign {
    pub f_rf: AnalogBeamformer,
    pub w_rf: AnalogBeamformer,
    pub stats: DesignStats,
}

/// The successive outer loop shared by every pair solver: for each stream,
/// form `Q_l` from the other streams designed so far (not-yet-designed
/// columns count as zero), solve for the pair, install it; repeat until a
/// full pass changes no column or `outer_cap` passes have run.
pub fn successive_pair_design<S>(
    svd: &TruncatedSvd,
    constraint: &PhaseConstraint,
    alpha_rel: f64,
    outer_cap: usize,
    mut solve: S,
) -> Result<AnalogDesign>
where
    S: FnMut(&PairContext<'_>) -> Result<PairSolution>,
{
    let ns = svd.n_streams();
    let (nr, nt) = (svd.u_hat.nrows(), svd.v_hat.nrows());
    let alpha = alpha_rel * svd.sigma_hat[0];
    let tx_scale = Complex64::from(1.0 / (nt as f64).sqrt());
    let rx_scale = Complex64::from(1.0 / (nr as f64).sqrt());

    let mut f_cols: Vec<Option<Vec<f64>>> = vec![None; ns];
    let mut w_cols: Vec<Option<Vec<f64>>> = vec![None; ns];
    let mut stats = DesignStats {
        outer_capped: true,
        ..DesignStats::default()
    };

    for outer in 1..=outer_cap.max(1) {
        stats.outer_iters = outer;
        let mut changed = false;
        for l in 0..ns {
            let others: Vec<usize> = (0..ns).filter(|&k| k != l && f_cols[k].is_some()).collect();
            let f_excl = CMatrix::from_fn(nt, others.len(), |i, c| {
                constraint.unit(f_cols[others[c]].as_ref().unwrap()[i]) * tx_scale
            });
            let w_excl = CMatrix::from_fn(nr, others.len(), |j, c| {
                constraint.unit(w_cols[others[c]].as_ref().unwrap()[j]) * rx_scale
            });
            let channel = interference_channel(svd, &f_excl, &w_excl, alpha)?;
            let current = f_cols[l].as_deref().zip(w_cols[l].as_deref());
            let sol = solve(&PairContext {
                stream: l,
                channel: &channel,
                svd,
                current,
            })?;
            stats.pair_runs += 1;
            stats.inner_sweeps += sol.sweeps;
            stats.inner_capped += usize::from(sol.capped);

            let same = match current {
                Some((f, w)) => same_phases(f, &sol.theta) && same_phases(w, &sol.phi),
                None => false,
            };
            changed |= !same;
            f_cols[l] = Some(sol.theta);
            w_cols[l] = Some(sol.phi);
        }
        if !changed {
            stats.outer_capped = false;
            break;
        }
    }

    let f_cols: Vec<Vec<f64>> = f_cols.into_iter().map(Option::unwrap).collect();
    let w_cols: Vec<Vec<f64>> = w_cols.into_iter().map(Option::unwrap).collect();
    Ok(AnalogDesign {
        f_rf: AnalogBeamformer::from_columns(&f_cols, constraint.clone())?,
        w_rf: AnalogBeamformer::from_columns(&w_cols, constraint.clone())?,
        stats,
    })
}

fn same_phases(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| circular_distance(*x, *y) <= 1e-9)
}

/// Phase-matching analog design at the resolution `config.bits`.
pub fn design_analog_su(h: &ChannelRealization, config: &SystemConfig) -> Result<AnalogDesign> {
    let constraint = PhaseConstraint::bits(config.bits)?;
    let opts = PmOptions::for_constraint(&constraint);
    design_analog_su_with(h, config, &constraint, &opts)
}

/// Phase-matching analog design with an explicit phase set and options.
pub fn design_analog_su_with(
    h: &ChannelRealization,
    config: &SystemConfig,
    constraint: &PhaseConstraint,
    opts: &PmOptions,
) -> Result<AnalogDesign> {
    check_dims(h, config)?;
    let svd = truncate_svd(&h.h, config.n_streams)?;
    design_from_svd(&svd, constraint, opts)
}

pub(crate) fn check_dims(h: &ChannelRealization, config: &SystemConfig) -> Result<()> {
    config.validate()?;
    if h.n_rx() != config.n_rx || h.n_tx() != config.n_tx {
        return Err(Error::invalid(format!(
            "channel is {}x{} but the configuration expects {}x{}",
            h.n_rx(),
            h.n_tx(),
            config.n_rx,
            config.n_tx
        )));
    }
    Ok(())
}

/// Phase-matching design on a precomputed truncated SVD.
pub fn design_from_svd(svd: &TruncatedSvd, constraint: &PhaseConstraint, opts: &PmOptions) -> Result<AnalogDesign> {
    successive_pair_design(svd, constraint, opts.alpha_rel, opts.outer_cap, |ctx| {
        let init = match ctx.current {
            Some((f, w)) => PhaseMatchState::new(f.to_vec(), w.to_vec()),
            None => PhaseMatchState::aligned_with(
                &ctx.svd.u_hat.column(ctx.stream).into_owned(),
                &ctx.svd.v_hat.column(ctx.stream).into_owned(),
                constraint,
            ),
        };
        let q = &ctx.channel.q;
        let mut st = match_pair(q, constraint, init, &opts.inner)?;
        let mut sweeps = st.sweeps;
        if st.objective < STALL_RATIO * q.norm() {
            // Both phase vectors sit where the dominant part of Q_l vanishes
            // (typically a copy of an installed pair); single-phase moves
            // cannot leave that region, so restart from Q_l's own leading
            // singular pair.
            let lead = truncate_svd(q, 1)?;
            let restart = PhaseMatchState::aligned_with(
                &lead.u_hat.column(0).into_owned(),
                &lead.v_hat.column(0).into_owned(),
                constraint,
            );
            let alt = match_pair(q, constraint, restart, &opts.inner)?;
            sweeps += alt.sweeps;
            if alt.objective > st.objective {
                st = alt;
            }
        }
        Ok(PairSolution {
            theta: st.theta,
            phi: st.phi,
            objective: st.objective,
            sweeps,
            capped: st.capped,
        })
    })
}
