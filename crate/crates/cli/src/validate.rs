//! The acceptance suite: ten numbered cross-checks of the simulator
//! against analytic results, the master equation and the expected
//! metastable phenomenology.

use std::fmt::Write as _;
use std::time::Instant;

use anyhow::{ensure, Context, Result};
use kerr_qsd::classical::{bistability_margins, bistable, bistable_window, excitation_residual, steady_states};
use kerr_qsd::ensemble::{run_ensemble, Engine, EnsembleOptions, Executor};
use kerr_qsd::exact_steady::{mean_excitation, steady_moment};
use kerr_qsd::experiments::{
    basin_occupancy, decay_experiment, hysteresis_sweep, jump_snapshot, transition_stats, Basin, BasinMap,
    DecayOptions, StartBranch, SweepEngine, SweepOptions, DEFAULT_RADIUS_FRACTION,
};
use kerr_qsd::hilbert::{annihilation, coherent_state, number, qp_to_amplitude};
use kerr_qsd::master::{default_master_dt, evolve_master_sampled, steady_state_density, DensityMatrix};
use kerr_qsd::noise::{wiener_increment, NoiseStream};
use kerr_qsd::qsd::{check_mean_field, evolve_fixed, DisplacedState, Scheme, StepOptions, TrajectoryRecord};
use kerr_qsd::{FockDim, ModelParams, StateVector};
use num_complex::Complex64;

pub const CRITERIA: [(u8, &str); 10] = [
    (1, "classical bistability"),
    (2, "exact quantum steady state"),
    (3, "noise statistics"),
    (4, "coherent determinism"),
    (5, "ensemble vs master equation"),
    (6, "moving basis vs fixed basis"),
    (7, "metastable switching"),
    (8, "ensemble decay"),
    (9, "hysteresis"),
    (10, "mean-field consistency"),
];

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl Outcome {
    pub fn line(&self) -> String {
        format!(
            "[{}] criterion {:>2} {:<30} {:>8.1} s  {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.seconds,
            self.detail
        )
    }
}

/// Runs one criterion. Errors count as failures and land in `detail`.
pub fn run<E: Executor>(id: u8, exec: &E) -> Outcome {
    let title = CRITERIA.iter().find(|c| c.0 == id).map_or("unknown", |c| c.1);
    let t0 = Instant::now();
    let result = match id {
        1 => classical_bistability(),
        2 => exact_steady_state(),
        3 => noise_statistics(),
        4 => coherent_determinism(),
        5 => ensemble_vs_master(exec),
        6 => moving_vs_fixed(exec),
        7 => metastable_switching(exec),
        8 => ensemble_decay(exec),
        9 => hysteresis(exec),
        10 => mean_field_consistency(),
        _ => Err(anyhow::anyhow!("no criterion {id}")),
    };
    let (passed, detail) = match result {
        Ok(v) => v,
        Err(e) => (false, format!("error: {e:#}")),
    };
    Outcome { id, title, passed, detail, seconds: t0.elapsed().as_secs_f64() }
}

/// Runs `ids` in order, reporting each outcome as it completes.
pub fn run_all<E: Executor>(ids: &[u8], exec: &E, mut report: impl FnMut(&Outcome)) -> Vec<Outcome> {
    ids.iter()
        .map(|&id| {
            let o = run(id, exec);
            report(&o);
            o
        })
        .collect()
}

type Verdict = Result<(bool, String)>;

fn dim(n: usize) -> FockDim {
    FockDim::new(n).expect("literal dimension")
}

/// κ=1.5, β=−7, χ=0.05, Δω=−5.
pub fn reference_params() -> ModelParams {
    ModelParams::new(-5.0, -7.0, 0.05, 1.5).expect("valid literal parameters")
}

/// Reference set with χ scaled by `s` and β by 1/√s (same classical
/// branches in units of the shifted detuning, fewer photons).
pub fn intermediate_params(s: f64, detuning: f64) -> ModelParams {
    reference_params().rescaled(s).expect("positive scale").with_detuning(detuning)
}

fn classical_bistability() -> Verdict {
    let p = reference_params();
    let window = bistable_window(&p)?.context("no bistable detuning found")?;
    let contains = window.0 < -5.0 && -5.0 < window.1;

    let beta2 = p.drive * p.drive;
    let mut worst = 0.0f64;
    for k in 0..=400 {
        let q = p.with_detuning(-12.0 + 14.0 * k as f64 / 400.0);
        for b in steady_states(&q)? {
            worst = worst.max(excitation_residual(b.excitation, &q).abs() / beta2);
        }
    }

    let (mut agree, mut considered, mut skipped) = (0usize, 0usize, 0usize);
    for i in 0..100 {
        for j in 0..100 {
            let dw = -15.0 + 20.0 * (i as f64 + 0.5) / 100.0;
            let beta = -15.0 + 14.9 * (j as f64 + 0.5) / 100.0;
            let q = ModelParams::new(dw, beta, p.chi, p.kappa)?;
            if near_boundary(&q) {
                skipped += 1;
                continue;
            }
            considered += 1;
            let three = steady_states(&q)?.len() == 3;
            if three == bistable(&q)? {
                agree += 1;
            }
        }
    }
    let passed = contains && worst < 1e-9 && agree == considered;
    Ok((
        passed,
        format!(
            "window [{:.4}, {:.4}] contains -5: {contains}; max residual/beta^2 {worst:.2e}; \
             classifier agrees {agree}/{considered} ({skipped} boundary points skipped)",
            window.0, window.1
        ),
    ))
}

/// Within 1e−6 of a sign change of any bistability inequality.
fn near_boundary(p: &ModelParams) -> bool {
    let d = p.shifted_detuning();
    let k = 0.5 * p.kappa;
    let r = k / d;
    let lhs = 27.0 * p.chi * p.drive * p.drive / (d * d * d) + 1.0 + 9.0 * r * r;
    let rhs = 1.0 - 3.0 * r * r;
    let m = bistability_margins(p);
    d.abs() < 1e-6 || m[1].abs() < 1e-6 || m[2].abs() < 1e-6 * (rhs.abs().powi(3) + lhs * lhs)
}

fn exact_steady_state() -> Verdict {
    let sets = [
        (-1.0, 0.5, 0.5, 1.0),
        (0.5, 0.8, 0.3, 1.2),
        (-2.0, 1.0, 0.4, 2.0),
        (1.0, -0.7, 0.6, 0.8),
        (-0.5, 1.2, 0.8, 1.5),
    ];
    let d = dim(26);
    let a = annihilation(d);
    let ad = a.adjoint();
    let ad2a2 = &(&ad * &ad) * &(&a * &a);
    let mut worst = 0.0f64;
    for (dw, b, chi, k) in sets {
        let p = ModelParams::new(dw, b, chi, k)?;
        let rho = steady_state_density(&p, d)?;
        let pairs = [
            (rho.expectation(&number(d))?, steady_moment(1, 1, &p)?),
            (rho.expectation(&a)?, steady_moment(0, 1, &p)?),
            (rho.expectation(&ad2a2)?, steady_moment(2, 2, &p)?),
        ];
        for (num, exact) in pairs {
            worst = worst.max((num - exact).norm() / exact.norm());
        }
    }

    // Continuity: halving the grid step halves the largest increment.
    let p = reference_params();
    let curve = |h: f64| -> Result<Vec<f64>> {
        let k = (12.0 / h).round() as usize;
        Ok((0..=k)
            .map(|i| mean_excitation(&p.with_detuning(-10.0 + h * i as f64)))
            .collect::<kerr_qsd::Result<_>>()?)
    };
    let coarse = curve(0.02)?;
    let fine = curve(0.01)?;
    let max_step = |c: &[f64]| c.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
    let refinement = max_step(&coarse) / max_step(&fine);
    let finite = fine.iter().all(|n| n.is_finite() && *n > 0.0);
    let rises: Vec<bool> = fine.windows(2).map(|w| w[1] > w[0]).collect();
    let turns = rises.windows(2).filter(|w| w[0] != w[1]).count();
    let peak = fine.iter().copied().fold(0.0, f64::max);
    let smooth = finite && turns <= 1 && refinement > 1.5;
    Ok((
        worst < 1e-6 && smooth,
        format!(
            "max relative moment error {worst:.2e} over 5 sets at dim 26; reference curve: {turns} turning point(s), \
             peak {peak:.4}, largest-step ratio under grid halving {refinement:.2}"
        ),
    ))
}

fn noise_statistics() -> Verdict {
    let dt = 0.01;
    let n = 1_000_000usize;
    let mut s = NoiseStream::new(0x5eed);
    let (mut m1, mut m2, mut m3) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), 0.0);
    for _ in 0..n {
        let x = wiener_increment(&mut s, dt);
        m1 += x;
        m2 += x * x;
        m3 += x.norm_sqr();
    }
    let nf = n as f64;
    let (m1, m2, m3) = (m1 / nf, m2 / nf, m3 / nf);
    let s1 = (0.5 * dt / nf).sqrt();
    let s2 = dt / nf.sqrt();
    let z = [m1.re / s1, m1.im / s1, m2.re / s2, m2.im / s2, (m3 - dt) / s2];
    let worst = z.iter().map(|v| v.abs()).fold(0.0, f64::max);
    Ok((worst < 4.0, format!("largest deviation {worst:.2} sigma over 5 moment components, 1e6 samples")))
}

fn coherent_determinism() -> Verdict {
    let p = ModelParams::new(1.3, 0.0, 0.0, 0.8)?;
    let a0 = Complex64::new(2.0, 1.0);
    let psi = coherent_state(a0, dim(40));
    let opts = StepOptions::new(2.5e-4, 5.0, 40);
    let r1 = evolve_fixed(&psi, &p, &opts, 1)?;
    let r2 = evolve_fixed(&psi, &p, &opts, 2)?;
    let mut err = 0.0f64;
    let mut spread = 0.0f64;
    for i in 0..r1.len() {
        let t = r1.times[i];
        let exact = a0 * (Complex64::new(-0.5 * p.kappa, -p.detuning) * t).exp();
        err = err.max((r1.alpha(i) - exact).norm());
        spread = spread.max((r1.alpha(i) - r2.alpha(i)).norm());
    }
    Ok((
        err < 1e-6 && spread < 1e-10,
        format!("max |<a> - exact| {err:.2e}; seed-to-seed difference {spread:.2e}"),
    ))
}

fn ensemble_vs_master<E: Executor>(exec: &E) -> Verdict {
    let p = ModelParams::new(-1.0, 0.5, 0.5, 1.0)?;
    let d = dim(15);
    let dt = 5e-4;
    let t_final = 8.0 / p.kappa;
    let step = StepOptions::new(dt, t_final, 800);
    let psi0 = DisplacedState::coherent(Complex64::new(0.0, 0.0), d);
    let engine = Engine::Fixed { dim: d };
    let ensemble = |n: usize, seed: u64| -> Result<kerr_qsd::ensemble::EnsembleStats> {
        let mut o = EnsembleOptions::new(n, seed, engine, step);
        o.density_dim = Some(d);
        Ok(run_ensemble(&psi0, &p, &o, exec)?)
    };
    let main = ensemble(2000, 1)?;
    let rho0 = DensityMatrix::from_state(&StateVector::vacuum(d));
    let master = evolve_master_sampled(&rho0, &p, d, &main.times, default_master_dt(&p, d))?;
    let num = number(d);
    let mut worst_z = 0.0f64;
    for (i, rho) in master.iter().enumerate() {
        let exact = rho.expectation(&num)?.re;
        let dev = (main.mean_n[i] - exact).abs();
        let z = if main.stderr_n[i] > 0.0 { dev / main.stderr_n[i] } else if dev < 1e-12 { 0.0 } else { f64::INFINITY };
        worst_z = worst_z.max(z);
    }
    let rho_t = master.last().context("empty master record")?;
    let dist = |st: &kerr_qsd::ensemble::EnsembleStats| -> Result<f64> {
        Ok(st.final_density.as_ref().context("no density")?.frobenius_distance(rho_t)?)
    };
    let mut points = Vec::new();
    for (n, copies, seed0) in [(125usize, 16u64, 100u64), (500, 4, 200)] {
        let mut sum = 0.0;
        for k in 0..copies {
            sum += dist(&ensemble(n, seed0 + k)?)?;
        }
        points.push((n as f64, sum / copies as f64));
    }
    points.push((2000.0, dist(&main)?));
    let slope = -loglog_slope(&points);
    let passed = worst_z <= 4.0 && (0.4..=0.6).contains(&slope);
    let mut detail = format!("max |ens - master|/stderr {worst_z:.2} over {} grid points; ", master.len());
    let _ = write!(detail, "Frobenius distances");
    for (n, dd) in &points {
        let _ = write!(detail, " N={n}: {dd:.4e}");
    }
    let _ = write!(detail, "; decay exponent {slope:.3}");
    Ok((passed, detail))
}

fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Start of the reference single-trajectory run, (Q, P) = (7, 14).
pub fn reference_start() -> Complex64 {
    qp_to_amplitude(7.0, 14.0)
}

fn moving_vs_fixed<E: Executor>(exec: &E) -> Verdict {
    let p = reference_params();
    let a0 = reference_start();
    let (fixed_dim, local_dim) = (dim(384), dim(96));
    let opts = StepOptions::new(2e-4, 5.0 / p.kappa, 25);
    let seeds = [0u64, 1, 2];
    let diffs = exec.map(0..seeds.len(), |k| -> kerr_qsd::Result<f64> {
        let seed = seeds[k];
        let fixed = Engine::Fixed { dim: fixed_dim }.start(&DisplacedState::coherent(a0, local_dim), p, seed)?.run(&opts, None)?;
        let moving = Engine::mqsd(local_dim).start(&DisplacedState::coherent(a0, local_dim), p, seed)?.run(&opts, None)?;
        Ok((0..fixed.len()).map(|i| (fixed.alpha(i) - moving.alpha(i)).norm()).fold(0.0, f64::max))
    });
    let diffs: Vec<f64> = diffs.into_iter().collect::<kerr_qsd::Result<_>>()?;
    let worst = diffs.iter().copied().fold(0.0, f64::max);
    Ok((
        worst < 1e-4 && 4 * local_dim.get() <= fixed_dim.get(),
        format!(
            "max |<a>_mqsd - <a>_fixed| {worst:.2e} to t = 5/kappa over seeds {seeds:?} (local {}, fixed {})",
            local_dim.get(),
            fixed_dim.get()
        ),
    ))
}

fn median(mut xs: Vec<f64>) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.sort_by(|a, b| a.total_cmp(b));
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        0.5 * (xs[m - 1] + xs[m])
    }
}

fn metastable_switching<E: Executor>(exec: &E) -> Verdict {
    // Reference parameters: basin entry and delocalization at jumps.
    let p = reference_params();
    let basins = BasinMap::from_params(&p, DEFAULT_RADIUS_FRACTION)?;
    let local = dim(96);
    let opts = StepOptions::new(2e-4, 6.0, 50);
    let records: Vec<TrajectoryRecord> = exec
        .map(0..20, |seed| {
            Engine::mqsd(local)
                .start(&DisplacedState::coherent(reference_start(), local), p, seed as u64)?
                .run(&opts, Some(&basins))
        })
        .into_iter()
        .collect::<kerr_qsd::Result<_>>()?;
    let horizon = 2.0 / p.kappa;
    let entered = records
        .iter()
        .filter(|r| r.basin.iter().zip(&r.times).any(|(b, t)| *b != Basin::Transit && *t <= horizon))
        .count();
    let entry_fraction = entered as f64 / records.len() as f64;
    let ref_ratios: Vec<f64> = records.iter().flat_map(jump_snapshot).map(|j| j.ratio).collect();
    let ref_min = ref_ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let ref_max = ref_ratios.iter().copied().fold(0.0, f64::max);

    // Intermediate excitation: many jumps in an affordable run.
    let q = intermediate_params(6.0, -3.6);
    let basins = BasinMap::from_params(&q, DEFAULT_RADIUS_FRACTION)?;
    let d = dim(30);
    let opts = StepOptions::new(2e-3, 2000.0, 20);
    let long: Vec<TrajectoryRecord> = exec
        .map(0..2, |seed| {
            Engine::Fixed { dim: d }
                .start(&DisplacedState::coherent(basins.lower_alpha, d), q, seed as u64)?
                .run(&opts, Some(&basins))
        })
        .into_iter()
        .collect::<kerr_qsd::Result<_>>()?;
    let burn = 3.0 / q.kappa;
    let st = transition_stats(&long, burn);
    let occ = basin_occupancy(&long, burn)?;
    let exact_n = mean_excitation(&q)?;
    let occ_z = (occ.weighted_mean_n - exact_n).abs() / occ.stderr;
    let mid_ratio = median(long.iter().flat_map(jump_snapshot).map(|j| j.ratio).collect());

    let passed = entry_fraction >= 0.5
        && !ref_ratios.is_empty()
        && ref_min > 1.0
        && st.n_jumps >= 10
        && mid_ratio > 1.0
        && occ_z <= 4.0;
    Ok((
        passed,
        format!(
            "reference: {entered}/20 enter a basin by 2/kappa, {} jumps by t=6 with variance ratio {ref_min:.2}..{ref_max:.2}; \
             intermediate: {} jumps, exit times lower {:.1}+-{:.1} upper {:.1}+-{:.1}, median ratio {mid_ratio:.2}, \
             dwell-weighted <n> {:.3}+-{:.3} vs exact {exact_n:.3} ({occ_z:.2} sigma)",
            ref_ratios.len(),
            st.n_jumps,
            st.mean_exit_lower,
            st.stderr_exit_lower,
            st.mean_exit_upper,
            st.stderr_exit_upper,
            occ.weighted_mean_n,
            occ.stderr,
        ),
    ))
}

fn ensemble_decay<E: Executor>(exec: &E) -> Verdict {
    let p = intermediate_params(4.0, -5.15);
    let opts = DecayOptions {
        ensemble: EnsembleOptions::new(100, 5, Engine::Fixed { dim: dim(48) }, StepOptions::new(2e-3, 200.0, 250)),
        start: StartBranch::Metastable,
        fit_from: 3.0 / p.kappa,
    };
    let r = decay_experiment(&p, &opts, exec)?;
    let st = &r.stats;
    let last = st.times.len() - 1;
    let zq = (st.mean_q[last] - r.exact_q).abs() / st.stderr_q[last];
    let zp = (st.mean_p[last] - r.exact_p).abs() / st.stderr_p[last];
    let (ratio, fit) = match &r.fit {
        Ok(f) => (f.tau * p.kappa, format!("fit asymptote ({:.4}, {:.4})", f.q_inf, f.p_inf)),
        Err(e) => (f64::NAN, format!("fit failed: {e}")),
    };
    Ok((
        ratio > 10.0 && zq <= 4.0 && zp <= 4.0,
        format!(
            "tau*kappa {ratio:.1}; final mean ({:.4}, {:.4}) vs exact ({:.4}, {:.4}) at {zq:.2}/{zp:.2} sigma; {fit}",
            st.mean_q[last], st.mean_p[last], r.exact_q, r.exact_p
        ),
    ))
}

fn hysteresis<E: Executor>(exec: &E) -> Verdict {
    let base = reference_params();
    let (lo, hi) = bistable_window(&base)?.context("reference parameters not bistable")?;
    let classical = |seed| SweepOptions {
        detuning_range: (-10.0, -2.0),
        step: 0.1,
        t_m: 50.0,
        dt: 0.01,
        seed,
        engine: SweepEngine::Classical,
    };
    let c1 = hysteresis_sweep(&base, &classical(1))?;
    let c2 = hysteresis_sweep(&base, &classical(2))?;
    let classical_ok = c1.jumps_detected && (c1.detuning_width - (hi - lo)).abs() <= 0.1 && c1 == c2;

    let quantum_widths: Vec<f64> = exec
        .map(0..2, |k| {
            let opts = SweepOptions {
                dt: 4e-4,
                seed: k as u64 + 1,
                engine: SweepEngine::Quantum(Engine::mqsd(dim(96))),
                ..classical(0)
            };
            hysteresis_sweep(&base, &opts).map(|r| r.detuning_width)
        })
        .into_iter()
        .collect::<kerr_qsd::Result<_>>()?;
    let quantum_ok = quantum_widths.iter().all(|w| *w > 0.0) && quantum_widths[0] != quantum_widths[1];

    let family = reference_params().rescaled(6.0)?;
    let t_ms = [2.0, 20.0, 200.0];
    let mut means = Vec::new();
    for t_m in t_ms {
        let widths: Vec<f64> = exec
            .map(0..20, |seed| {
                let opts = SweepOptions {
                    detuning_range: (-10.0, -2.5),
                    step: 0.25,
                    t_m,
                    dt: 2e-3,
                    seed: seed as u64,
                    engine: SweepEngine::Quantum(Engine::Fixed { dim: dim(30) }),
                };
                hysteresis_sweep(&family, &opts).map(|r| r.detuning_width)
            })
            .into_iter()
            .collect::<kerr_qsd::Result<_>>()?;
        let m = widths.iter().sum::<f64>() / widths.len() as f64;
        let sd = (widths.iter().map(|w| (w - m) * (w - m)).sum::<f64>() / (widths.len() - 1) as f64).sqrt();
        means.push((m, sd / (widths.len() as f64).sqrt()));
    }
    let decreasing = means.windows(2).all(|w| w[1].0 < w[0].0);
    let mut detail = format!(
        "classical width {:.3} vs window {:.3}, seed-independent: {}; quantum widths {:?}; mean width vs t_m:",
        c1.detuning_width,
        hi - lo,
        c1 == c2,
        quantum_widths
    );
    for (t_m, (m, se)) in t_ms.iter().zip(&means) {
        let _ = write!(detail, " {t_m}: {m:.3}+-{se:.3}");
    }
    Ok((classical_ok && quantum_ok && decreasing, detail))
}

fn mean_field_consistency() -> Verdict {
    let p = reference_params();
    let psi = coherent_state(Complex64::new(-1.4, 0.2), dim(40));
    let r1 = check_mean_field(&psi, &p, 1e-4, 4000, 9, Scheme::Rk4Drift)?;
    let r2 = check_mean_field(&psi, &p, 5e-5, 8000, 9, Scheme::Rk4Drift)?;
    let bound = 50.0 * 1e-4f64.powf(1.5);
    let ratio = r1.rms_residual / r2.rms_residual;
    let target = 8f64.sqrt();
    ensure!(ratio.is_finite(), "non-finite residual ratio");
    Ok((
        r1.max_residual < bound && (ratio / target - 1.0).abs() <= 0.3,
        format!(
            "max residual {:.2e} (bound {bound:.2e}); rms ratio under dt halving {ratio:.3} (target {target:.3})",
            r1.max_residual
        ),
    ))
}
