//! Experiment drivers: basin labelling, dwell statistics, jump snapshots,
//! ensemble decay and the hysteresis sweep.

use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::classical::{bistable_window, integrate_mean_field, steady_states};
use crate::ensemble::{run_ensemble, Engine, EnsembleOptions, EnsembleStats, Executor};
use crate::error::{Error, Result};
use crate::exact_steady::steady_moment;
use crate::hilbert::amplitude_to_qp;
use crate::model::ModelParams;
use crate::qsd::{DisplacedState, Trajectory, TrajectoryRecord};

/// Default assignment radius as a fraction of the inter-branch distance.
pub const DEFAULT_RADIUS_FRACTION: f64 = 0.35;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Basin {
    Lower,
    Upper,
    Transit,
}

impl Basin {
    pub fn as_str(self) -> &'static str {
        match self {
            Basin::Lower => "lower",
            Basin::Upper => "upper",
            Basin::Transit => "transit",
        }
    }
}

/// The two classically stable amplitudes and their assignment radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasinMap {
    pub lower_alpha: Complex64,
    pub upper_alpha: Complex64,
    pub radius_fraction: f64,
}

impl BasinMap {
    pub fn from_params(params: &ModelParams, radius_fraction: f64) -> Result<Self> {
        if !(radius_fraction > 0.0 && radius_fraction < 0.5) {
            return Err(Error::param("radius_fraction", "must lie in (0, 0.5)"));
        }
        let stable: Vec<_> =
            steady_states(params)?.into_iter().filter(|b| b.stable).collect();
        if stable.len() != 2 {
            return Err(Error::Monostable);
        }
        Ok(BasinMap {
            lower_alpha: stable[0].alpha,
            upper_alpha: stable[1].alpha,
            radius_fraction,
        })
    }

    /// Assignment radius in amplitude units.
    pub fn radius(&self) -> f64 {
        self.radius_fraction * (self.upper_alpha - self.lower_alpha).norm()
    }

    /// Label for the amplitude ⟨a⟩. Distances in (Q, P) are √2 times
    /// those in α, so the comparison is the same in either space.
    pub fn classify(&self, alpha: Complex64) -> Basin {
        let r = self.radius();
        if (alpha - self.lower_alpha).norm() <= r {
            Basin::Lower
        } else if (alpha - self.upper_alpha).norm() <= r {
            Basin::Upper
        } else {
            Basin::Transit
        }
    }
}

/// Relabels every sample of `record` with `basins`.
pub fn classify_basin(record: &TrajectoryRecord, basins: &BasinMap) -> TrajectoryRecord {
    let mut out = record.clone();
    for i in 0..out.len() {
        out.basin[i] = basins.classify(record.alpha(i));
    }
    out
}

/// Dwell durations per basin. A dwell runs from entering a basin (or
/// from the burn-in time, if already inside) to entering the other one;
/// transit samples belong to the preceding basin.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TransitionStats {
    pub dwell_lower: Vec<f64>,
    pub dwell_upper: Vec<f64>,
    /// NaN when no dwell of that kind completed.
    pub mean_exit_lower: f64,
    pub mean_exit_upper: f64,
    pub stderr_exit_lower: f64,
    pub stderr_exit_upper: f64,
    pub n_jumps: usize,
    /// Time before the first basin entry.
    pub head: f64,
    /// Unfinished dwells at the end of each record.
    pub tail: f64,
    pub total_time: f64,
    pub no_jumps: bool,
}

/// Contiguous pieces of one record after burn-in.
struct Segments {
    head: f64,
    /// (basin, start index, end index exclusive, complete)
    dwells: Vec<(Basin, usize, usize, bool)>,
    total: f64,
}

fn segment(record: &TrajectoryRecord, burn_in: f64) -> Option<Segments> {
    let n = record.len();
    let i0 = record.times.iter().position(|&t| t >= burn_in)?;
    if n - i0 < 2 {
        return None;
    }
    let last = n - 1;
    let mut head_end = None;
    let mut dwells = Vec::new();
    let mut current: Option<(Basin, usize)> = None;
    for i in i0..last {
        let label = record.basin[i];
        if label == Basin::Transit {
            continue;
        }
        match current {
            None => {
                head_end = Some(i);
                current = Some((label, i));
            }
            Some((b, start)) if b != label => {
                dwells.push((b, start, i, true));
                current = Some((label, i));
            }
            _ => {}
        }
    }
    if let Some((b, start)) = current {
        dwells.push((b, start, last, false));
    }
    let head_idx = head_end.unwrap_or(last);
    Some(Segments {
        head: record.times[head_idx] - record.times[i0],
        dwells,
        total: record.times[last] - record.times[i0],
    })
}

fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub fn transition_stats(records: &[TrajectoryRecord], burn_in: f64) -> TransitionStats {
    let mut st = TransitionStats::default();
    for rec in records {
        let Some(seg) = segment(rec, burn_in) else { continue };
        st.head += seg.head;
        st.total_time += seg.total;
        for &(b, s, e, complete) in &seg.dwells {
            let dur = rec.times[e] - rec.times[s];
            if !complete {
                st.tail += dur;
                continue;
            }
            st.n_jumps += 1;
            match b {
                Basin::Lower => st.dwell_lower.push(dur),
                Basin::Upper => st.dwell_upper.push(dur),
                Basin::Transit => unreachable!("transit never opens a dwell"),
            }
        }
    }
    (st.mean_exit_lower, st.stderr_exit_lower) = mean_and_stderr(&st.dwell_lower);
    (st.mean_exit_upper, st.stderr_exit_upper) = mean_and_stderr(&st.dwell_upper);
    st.no_jumps = st.n_jumps == 0;
    st
}

/// Time shares of the two basins and the excitation averaged over them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasinOccupancy {
    pub fraction_lower: f64,
    pub fraction_upper: f64,
    pub mean_n_lower: f64,
    pub mean_n_upper: f64,
    /// Σ_b fraction_b · mean_n_b
    pub weighted_mean_n: f64,
    /// Ratio-estimator standard error with dwells as independent units.
    pub stderr: f64,
    pub segments: usize,
}

pub fn basin_occupancy(records: &[TrajectoryRecord], burn_in: f64) -> Result<BasinOccupancy> {
    // (basin, duration, ∫ n dt)
    let mut units: Vec<(Basin, f64, f64)> = Vec::new();
    for rec in records {
        let Some(seg) = segment(rec, burn_in) else { continue };
        for &(b, s, e, _) in &seg.dwells {
            let mut area = 0.0;
            for i in s..e {
                area += rec.excitation[i] * (rec.times[i + 1] - rec.times[i]);
            }
            units.push((b, rec.times[e] - rec.times[s], area));
        }
    }
    let total: f64 = units.iter().map(|u| u.1).sum();
    if units.len() < 2 || !(total > 0.0) {
        return Err(Error::param("records", "not enough labelled time for occupancy"));
    }
    let per = |basin: Basin| {
        let (t, a) = units
            .iter()
            .filter(|u| u.0 == basin)
            .fold((0.0, 0.0), |acc, u| (acc.0 + u.1, acc.1 + u.2));
        (t / total, if t > 0.0 { a / t } else { f64::NAN })
    };
    let (fl, nl) = per(Basin::Lower);
    let (fu, nu) = per(Basin::Upper);
    let r = units.iter().map(|u| u.2).sum::<f64>() / total;
    let k = units.len() as f64;
    let xbar = total / k;
    let ss: f64 = units.iter().map(|u| (u.2 - r * u.1).powi(2)).sum();
    Ok(BasinOccupancy {
        fraction_lower: fl,
        fraction_upper: fu,
        mean_n_lower: nl,
        mean_n_upper: nu,
        weighted_mean_n: r,
        stderr: (ss / (k * (k - 1.0))).sqrt() / xbar,
        segments: units.len(),
    })
}

/// Wave-packet spread around one basin-to-basin transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpReport {
    pub from: Basin,
    pub to: Basin,
    /// Last sample in the departure basin.
    pub t_leave: f64,
    /// First sample in the arrival basin.
    pub t_enter: f64,
    /// max(varQ + varP) over the transit window and its two end samples.
    pub peak_variance: f64,
    /// Mean varQ + varP over the adjacent basin runs.
    pub baseline_variance: f64,
    pub ratio: f64,
}

/// One report per jump in the record's labels; empty if there is none.
pub fn jump_snapshot(record: &TrajectoryRecord) -> Vec<JumpReport> {
    let spread = |i: usize| record.var_q[i] + record.var_p[i];
    // runs of equal labels: (label, start, end exclusive)
    let mut runs: Vec<(Basin, usize, usize)> = Vec::new();
    for (i, &b) in record.basin.iter().enumerate() {
        match runs.last_mut() {
            Some(r) if r.0 == b => r.2 = i + 1,
            _ => runs.push((b, i, i + 1)),
        }
    }
    let mut out = Vec::new();
    for j in 0..runs.len() {
        let (from, fs, fe) = runs[j];
        if from == Basin::Transit {
            continue;
        }
        let next = if j + 1 < runs.len() && runs[j + 1].0 == Basin::Transit { j + 2 } else { j + 1 };
        let Some(&(to, ts, te)) = runs.get(next) else { continue };
        if to == Basin::Transit || to == from {
            continue;
        }
        let peak = (fe - 1..=ts).map(spread).fold(f64::MIN, f64::max);
        let base_sum: f64 = (fs..fe).chain(ts..te).map(spread).sum();
        let baseline = base_sum / ((fe - fs) + (te - ts)) as f64;
        out.push(JumpReport {
            from,
            to,
            t_leave: record.times[fe - 1],
            t_enter: record.times[ts],
            peak_variance: peak,
            baseline_variance: baseline,
            ratio: peak / baseline,
        });
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepDirection {
    Up,
    Down,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub detuning: f64,
    pub measured_n: f64,
    pub direction: SweepDirection,
    /// Geometric mean of the two classical stable excitations at the
    /// detuning clamped into the bistable window.
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HysteresisRecord {
    pub sweep: Vec<SweepPoint>,
    /// |up jump − down jump|, or 0 when either jump is missing.
    pub detuning_width: f64,
    pub up_jump: Option<f64>,
    pub down_jump: Option<f64>,
    pub jumps_detected: bool,
    pub t_m: f64,
    pub step: f64,
}

/// What carries the state through the sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepEngine {
    /// Mean-field equation integrated with RK4; noise-free.
    Classical,
    Quantum(Engine),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub detuning_range: (f64, f64),
    pub step: f64,
    pub t_m: f64,
    pub dt: f64,
    pub seed: u64,
    pub engine: SweepEngine,
}

/// Jump threshold at `detuning`, or `None` when no detuning is bistable.
fn jump_threshold(base: &ModelParams, window: Option<(f64, f64)>, detuning: f64) -> Result<Option<f64>> {
    let Some((lo, hi)) = window else { return Ok(None) };
    let eps = 1e-6 * (hi - lo);
    let d = detuning.clamp(lo + eps, hi - eps);
    let stable: Vec<f64> = steady_states(&base.with_detuning(d))?
        .into_iter()
        .filter(|b| b.stable)
        .map(|b| b.excitation)
        .collect();
    if stable.len() != 2 {
        return Ok(None);
    }
    Ok(Some((stable[0] * stable[1]).sqrt()))
}

/// Adiabatic up-then-down detuning sweep with a readout of ⟨a†a⟩ after
/// each waiting time `t_m`. The readout leaves the state untouched.
pub fn hysteresis_sweep(base: &ModelParams, opts: &SweepOptions) -> Result<HysteresisRecord> {
    base.validate()?;
    let (lo, hi) = opts.detuning_range;
    if !(opts.step > 0.0) || !(hi > lo) {
        return Err(Error::param("step", "need step > 0 and a non-empty range"));
    }
    if !(opts.t_m > 0.0) || !(opts.dt > 0.0) {
        return Err(Error::param("t_m", "t_m and dt must be positive"));
    }
    if opts.t_m < 10.0 / base.kappa {
        log::warn!("t_m = {} is below 10/kappa; readouts may not have settled", opts.t_m);
    }
    let k_max = ((hi - lo) / opts.step).round() as usize;
    let grid: Vec<f64> = (0..=k_max).map(|k| lo + k as f64 * opts.step).collect();
    let window = bistable_window(base)?;
    let start = base.with_detuning(lo);
    let alpha0 = steady_states(&start)?
        .into_iter()
        .find(|b| b.stable)
        .map(|b| b.alpha)
        .ok_or(Error::Invariant("no stable branch at sweep start".into()))?;

    enum Carrier {
        Classical(Complex64),
        Quantum(Trajectory),
    }
    let mut carrier = match opts.engine {
        SweepEngine::Classical => Carrier::Classical(alpha0),
        SweepEngine::Quantum(engine) => {
            let local = match engine {
                Engine::Fixed { dim } => dim,
                Engine::Mqsd { local_dim, .. } => local_dim,
            };
            let psi0 = DisplacedState::coherent(alpha0, local);
            Carrier::Quantum(engine.start(&psi0, start, opts.seed)?)
        }
    };
    let order = grid
        .iter()
        .map(|&d| (d, SweepDirection::Up))
        .chain(grid.iter().rev().map(|&d| (d, SweepDirection::Down)));
    let mut sweep = Vec::with_capacity(2 * grid.len());
    for (d, direction) in order {
        let p = base.with_detuning(d);
        let measured_n = match &mut carrier {
            Carrier::Classical(alpha) => {
                *alpha = integrate_mean_field(*alpha, &p, opts.t_m, opts.dt);
                alpha.norm_sqr()
            }
            Carrier::Quantum(traj) => {
                traj.set_params(p)?;
                traj.advance(opts.t_m, opts.dt)?;
                traj.moments().n
            }
        };
        let threshold = jump_threshold(base, window, d)?.unwrap_or(f64::NAN);
        sweep.push(SweepPoint { detuning: d, measured_n, direction, threshold });
    }
    let crossing = |dir: SweepDirection| -> Option<f64> {
        let pts: Vec<&SweepPoint> = sweep.iter().filter(|s| s.direction == dir).collect();
        pts.windows(2).find_map(|w| {
            let above = |s: &SweepPoint| s.measured_n > s.threshold;
            let crossed = match dir {
                SweepDirection::Up => !above(w[0]) && above(w[1]),
                SweepDirection::Down => above(w[0]) && !above(w[1]),
            };
            crossed.then(|| 0.5 * (w[0].detuning + w[1].detuning))
        })
    };
    let up_jump = crossing(SweepDirection::Up);
    let down_jump = crossing(SweepDirection::Down);
    let jumps_detected = up_jump.is_some() && down_jump.is_some();
    let detuning_width = match (up_jump, down_jump) {
        (Some(u), Some(d)) => (u - d).abs(),
        _ => 0.0,
    };
    Ok(HysteresisRecord {
        sweep,
        detuning_width,
        up_jump,
        down_jump,
        jumps_detected,
        t_m: opts.t_m,
        step: opts.step,
    })
}

/// Which classical stable branch the decay run starts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StartBranch {
    /// The branch farther from the exact steady ⟨a⟩.
    #[default]
    Metastable,
    Lower,
    Upper,
}

/// Q(t), P(t) ≈ (Q∞, P∞) + (A_Q, A_P)·e^{−(t−t₀)/τ}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub tau: f64,
    pub q_inf: f64,
    pub p_inf: f64,
    pub amp_q: f64,
    pub amp_p: f64,
    pub t0: f64,
    pub rms_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayReport {
    pub stats: EnsembleStats,
    pub start_alpha: Complex64,
    /// √2 Re⟨a⟩, √2 Im⟨a⟩ of the exact steady state.
    pub exact_q: f64,
    pub exact_p: f64,
    pub fit: core::result::Result<DecayFit, Error>,
    /// τκ, i.e. τ in units of the dissipative time 1/κ.
    pub tau_over_dissipative: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayOptions {
    pub ensemble: EnsembleOptions,
    pub start: StartBranch,
    /// Samples before this time are left out of the fit.
    pub fit_from: f64,
}

/// Relaxation of the ensemble mean from a coherent state on one stable
/// branch toward the exact steady state.
pub fn decay_experiment<E: Executor>(params: &ModelParams, opts: &DecayOptions, exec: &E) -> Result<DecayReport> {
    let basins = BasinMap::from_params(params, DEFAULT_RADIUS_FRACTION)?;
    let exact = steady_moment(0, 1, params)?;
    let start_alpha = match opts.start {
        StartBranch::Lower => basins.lower_alpha,
        StartBranch::Upper => basins.upper_alpha,
        StartBranch::Metastable => {
            if (basins.lower_alpha - exact).norm() >= (basins.upper_alpha - exact).norm() {
                basins.lower_alpha
            } else {
                basins.upper_alpha
            }
        }
    };
    let local = match opts.ensemble.engine {
        Engine::Fixed { dim } => dim,
        Engine::Mqsd { local_dim, .. } => local_dim,
    };
    let psi0 = DisplacedState::coherent(start_alpha, local);
    let stats = run_ensemble(&psi0, params, &opts.ensemble, exec)?;
    let (exact_q, exact_p) = amplitude_to_qp(exact);
    let fit = fit_exponential(&stats.times, &stats.mean_q, &stats.mean_p, opts.fit_from);
    let tau_over_dissipative = fit.as_ref().ok().map(|f| f.tau * params.kappa);
    Ok(DecayReport { stats, start_alpha, exact_q, exact_p, fit, tau_over_dissipative })
}

/// Least-squares offset + amplitude for a fixed decay shape; returns
/// (offset, amplitude, squared residual).
fn project(shape: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = y.len() as f64;
    let (se, see) = shape.iter().fold((0.0, 0.0), |a, e| (a.0 + e, a.1 + e * e));
    let (sy, sey) = shape.iter().zip(y).fold((0.0, 0.0), |a, (e, v)| (a.0 + v, a.1 + e * v));
    let det = n * see - se * se;
    if det.abs() < 1e-300 {
        let off = sy / n;
        return (off, 0.0, y.iter().map(|v| (v - off).powi(2)).sum());
    }
    let off = (see * sy - se * sey) / det;
    let amp = (n * sey - se * sy) / det;
    let ss = shape.iter().zip(y).map(|(e, v)| (v - off - amp * e).powi(2)).sum();
    (off, amp, ss)
}

/// Joint single-exponential fit of two series sharing τ (variable
/// projection: linear parameters solved exactly, τ by golden section on
/// log τ after a coarse scan).
pub fn fit_exponential(times: &[f64], q: &[f64], p: &[f64], fit_from: f64) -> core::result::Result<DecayFit, Error> {
    let idx: Vec<usize> = (0..times.len()).filter(|&i| times[i] >= fit_from).collect();
    if idx.len() < 5 {
        return Err(Error::param("fit_from", "fewer than 5 samples to fit"));
    }
    let t0 = times[idx[0]];
    let span = times[*idx.last().unwrap()] - t0;
    if !(span > 0.0) {
        return Err(Error::param("times", "zero fit span"));
    }
    let ts: Vec<f64> = idx.iter().map(|&i| times[i] - t0).collect();
    let qs: Vec<f64> = idx.iter().map(|&i| q[i]).collect();
    let ps: Vec<f64> = idx.iter().map(|&i| p[i]).collect();
    let cost = |log_tau: f64| {
        let tau = log_tau.exp();
        let shape: Vec<f64> = ts.iter().map(|t| (-t / tau).exp()).collect();
        let (oq, aq, sq) = project(&shape, &qs);
        let (op, ap, sp) = project(&shape, &ps);
        (sq + sp, oq, aq, op, ap)
    };
    let (lo, hi) = ((1e-3 * span).ln(), (1e2 * span).ln());
    let m = 240;
    let grid = |k: usize| lo + (hi - lo) * k as f64 / m as f64;
    let best = (0..=m)
        .min_by(|&a, &b| cost(grid(a)).0.partial_cmp(&cost(grid(b)).0).unwrap_or(core::cmp::Ordering::Equal))
        .unwrap();
    if best == 0 || best == m {
        return Err(Error::NoConvergence(m));
    }
    let (mut a, mut b) = (grid(best - 1), grid(best + 1));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if cost(c).0 < cost(d).0 {
            b = d;
        } else {
            a = c;
        }
    }
    let lt = 0.5 * (a + b);
    let (ss, q_inf, amp_q, p_inf, amp_p) = cost(lt);
    Ok(DecayFit {
        tau: lt.exp(),
        q_inf,
        p_inf,
        amp_q,
        amp_p,
        t0,
        rms_residual: (ss / (2 * ts.len()) as f64).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn reference() -> ModelParams {
        ModelParams::new(-5.0, -7.0, 0.05, 1.5).unwrap()
    }

    fn labelled(labels: &[Basin], dt: f64) -> TrajectoryRecord {
        let n = labels.len();
        TrajectoryRecord {
            times: (0..n).map(|i| i as f64 * dt).collect(),
            q: vec![0.0; n],
            p: vec![0.0; n],
            var_q: vec![0.5; n],
            var_p: vec![0.5; n],
            excitation: vec![1.0; n],
            basin: labels.to_vec(),
        }
    }

    #[test]
    fn basin_map_needs_bistability() {
        assert!(BasinMap::from_params(&reference(), 0.35).is_ok());
        assert!(matches!(BasinMap::from_params(&reference().with_detuning(2.0), 0.35), Err(Error::Monostable)));
        assert!(BasinMap::from_params(&reference(), 0.6).is_err());
    }

    #[test]
    fn classification_examples() {
        let m = BasinMap::from_params(&reference(), 0.35).unwrap();
        assert_eq!(m.classify(m.lower_alpha), Basin::Lower);
        assert_eq!(m.classify(m.upper_alpha), Basin::Upper);
        assert_eq!(m.classify(0.5 * (m.lower_alpha + m.upper_alpha)), Basin::Transit);
    }

    #[test]
    fn periodic_labels_give_equal_dwells() {
        use Basin::*;
        let period = 5;
        let mut labels = Vec::new();
        for k in 0..8 {
            let b = if k % 2 == 0 { Lower } else { Upper };
            labels.extend(core::iter::repeat(b).take(period));
        }
        let rec = labelled(&labels, 0.5);
        let st = transition_stats(&[rec], 0.0);
        assert_eq!(st.n_jumps, 7);
        for d in st.dwell_lower.iter().chain(&st.dwell_upper) {
            assert_eq!(*d, 2.5);
        }
        assert_eq!(st.mean_exit_lower, 2.5);
        assert!(!st.no_jumps);
    }

    #[test]
    fn transit_is_absorbed_and_time_is_conserved() {
        use Basin::*;
        let labels = [Transit, Transit, Lower, Lower, Transit, Lower, Transit, Transit, Upper, Upper, Transit, Lower, Lower];
        let rec = labelled(&labels, 0.25);
        let st = transition_stats(&[rec], 0.0);
        assert_eq!(st.dwell_lower, vec![1.5]);
        assert_eq!(st.dwell_upper, vec![0.75]);
        assert_eq!(st.head, 0.5);
        assert_eq!(st.head + 1.5 + 0.75 + st.tail, st.total_time);
    }

    #[test]
    fn no_jumps_is_flagged() {
        let rec = labelled(&[Basin::Lower; 10], 1.0);
        let st = transition_stats(&[rec], 0.0);
        assert!(st.no_jumps);
        assert!(st.mean_exit_lower.is_nan());
        assert_eq!(st.tail, 9.0);
    }

    #[test]
    fn burn_in_discards_early_samples() {
        use Basin::*;
        let labels = [Upper, Upper, Upper, Lower, Lower, Upper, Upper];
        let st = transition_stats(&[labelled(&labels, 1.0)], 2.0);
        // dwell in Upper starts at the burn-in time
        assert_eq!(st.dwell_upper, vec![1.0]);
        assert_eq!(st.dwell_lower, vec![2.0]);
        assert_eq!(st.total_time, 4.0);
    }

    #[test]
    fn occupancy_weights_by_time() {
        use Basin::*;
        let labels = [Lower, Lower, Lower, Upper, Lower, Lower, Lower, Upper, Upper];
        let mut rec = labelled(&labels, 1.0);
        for (i, b) in labels.iter().enumerate() {
            rec.excitation[i] = if *b == Lower { 1.0 } else { 9.0 };
        }
        let occ = basin_occupancy(&[rec], 0.0).unwrap();
        assert_eq!(occ.fraction_lower, 0.75);
        assert_eq!(occ.mean_n_upper, 9.0);
        assert_eq!(occ.weighted_mean_n, 0.75 * 1.0 + 0.25 * 9.0);
    }

    #[test]
    fn coherent_segment_baseline_and_jump_report() {
        use Basin::*;
        let labels = [Lower, Lower, Lower, Transit, Transit, Upper, Upper, Upper];
        let mut rec = labelled(&labels, 1.0);
        rec.var_q[3] = 2.0;
        rec.var_p[4] = 3.0;
        let jumps = jump_snapshot(&rec);
        assert_eq!(jumps.len(), 1);
        let j = jumps[0];
        assert_eq!((j.from, j.to), (Lower, Upper));
        assert_eq!(j.baseline_variance, 1.0);
        assert_eq!(j.peak_variance, 3.5);
        assert_eq!((j.t_leave, j.t_enter), (2.0, 5.0));
        assert!(jump_snapshot(&labelled(&[Lower, Transit, Lower], 1.0)).is_empty());
    }

    #[test]
    fn exponential_fit_recovers_parameters() {
        let times: Vec<f64> = (0..300).map(|i| i as f64 * 0.5).collect();
        let q: Vec<f64> = times.iter().map(|t| -2.0 + 7.0 * (-t / 23.0).exp()).collect();
        let p: Vec<f64> = times.iter().map(|t| 0.3 + 4.0 * (-t / 23.0).exp()).collect();
        let f = fit_exponential(&times, &q, &p, 0.0).unwrap();
        assert!((f.tau - 23.0).abs() < 1e-6);
        assert!((f.q_inf + 2.0).abs() < 1e-8 && (f.p_inf - 0.3).abs() < 1e-8);
        assert!((f.amp_q - 7.0).abs() < 1e-7);
        assert!(fit_exponential(&times[..3], &q[..3], &p[..3], 0.0).is_err());
    }

    #[test]
    fn classical_sweep_recovers_window() {
        let base = reference();
        let (lo, hi) = bistable_window(&base).unwrap().unwrap();
        let step = 0.1;
        let opts = SweepOptions {
            detuning_range: (-11.0, -1.0),
            step,
            t_m: 50.0,
            dt: 0.01,
            seed: 0,
            engine: SweepEngine::Classical,
        };
        let rec = hysteresis_sweep(&base, &opts).unwrap();
        assert!(rec.jumps_detected);
        assert!((rec.detuning_width - (hi - lo)).abs() <= step, "{} vs {}", rec.detuning_width, hi - lo);
        let again = hysteresis_sweep(&base, &SweepOptions { seed: 99, ..opts }).unwrap();
        assert_eq!(rec, again);
    }

    #[test]
    fn classical_sweep_without_bistability_flags_missing_jumps() {
        let base = ModelParams::new(0.0, -0.5, 0.05, 1.5).unwrap();
        let opts = SweepOptions {
            detuning_range: (-3.0, 1.0),
            step: 0.5,
            t_m: 20.0,
            dt: 0.01,
            seed: 0,
            engine: SweepEngine::Classical,
        };
        let rec = hysteresis_sweep(&base, &opts).unwrap();
        assert!(!rec.jumps_detected);
        assert_eq!(rec.detuning_width, 0.0);
        assert_eq!(rec.sweep.len(), 2 * 9);
    }

    #[test]
    fn metastable_start_is_the_branch_away_from_the_exact_mean() {
        let p = reference();
        let exact = steady_moment(0, 1, &p).unwrap();
        let m = BasinMap::from_params(&p, 0.35).unwrap();
        // exact ⟨a⟩ ≈ −1.44 + 0.23i sits on the lower branch here
        assert!((m.lower_alpha - exact).norm() < (m.upper_alpha - exact).norm());
    }
}
