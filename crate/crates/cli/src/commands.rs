use std::io::Write;

use anyhow::{bail, Context, Result};
use kerr_qsd::classical::{
    bistability_margins, bistable, bistable_window, params_from_reduced, steady_states, ReducedCoords,
};
use kerr_qsd::ensemble::{run_ensemble, Engine, EnsembleOptions, Executor};
use kerr_qsd::exact_steady::steady_moment;
use kerr_qsd::experiments::{
    basin_occupancy, decay_experiment, hysteresis_sweep, jump_snapshot, transition_stats, BasinMap, DecayOptions,
    StartBranch, SweepEngine, SweepOptions,
};
use kerr_qsd::hilbert::{amplitude_to_qp, qp_to_amplitude};
use kerr_qsd::qsd::{default_qsd_dt, DisplacedState, StepOptions, TrajectoryRecord};
use kerr_qsd::FockDim;

use crate::config::{EngineKind, RunConfig, StartBranchKind};
use crate::csv::{Cell, CsvWriter};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    ClassicalSweep,
    QuantumSteady,
    DomainMap,
    Trajectory,
    Ensemble,
    Transitions,
    Decay,
    Hysteresis,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::ClassicalSweep => "classical-sweep",
            Command::QuantumSteady => "quantum-steady",
            Command::DomainMap => "domain-map",
            Command::Trajectory => "trajectory",
            Command::Ensemble => "ensemble",
            Command::Transitions => "transitions",
            Command::Decay => "decay",
            Command::Hysteresis => "hysteresis",
        }
    }
}

/// Runs one subcommand and writes its CSV to `out`.
pub fn dispatch<E: Executor>(cmd: Command, cfg: &RunConfig, exec: &E, out: &mut dyn Write) -> Result<()> {
    let head = format!("kerr-qsd {}\n{}", cmd.name(), cfg.echo());
    match cmd {
        Command::ClassicalSweep => classical_sweep(cfg, &head, out),
        Command::QuantumSteady => quantum_steady(cfg, &head, out),
        Command::DomainMap => domain_map(cfg, &head, out),
        Command::Trajectory => trajectory(cfg, &head, out),
        Command::Ensemble => ensemble(cfg, exec, &head, out),
        Command::Transitions => transitions(cfg, exec, &head, out),
        Command::Decay => decay(cfg, exec, &head, out),
        Command::Hysteresis => hysteresis(cfg, &head, out),
    }
    .with_context(|| format!("{} failed", cmd.name()))
}

fn quantum_engine(cfg: &RunConfig) -> Result<(Engine, FockDim)> {
    match cfg.engine {
        EngineKind::Fixed => Ok((Engine::Fixed { dim: cfg.dim }, cfg.dim)),
        EngineKind::Mqsd => Ok((
            Engine::Mqsd { local_dim: cfg.local_dim, recenter_threshold: cfg.recenter_threshold },
            cfg.local_dim,
        )),
        EngineKind::Classical => bail!("engine = classical is only available for hysteresis"),
    }
}

fn step_options(cfg: &RunConfig, dim: FockDim) -> StepOptions {
    let dt = cfg.dt.unwrap_or_else(|| default_qsd_dt(&cfg.params, dim));
    StepOptions::new(dt, cfg.t_final, cfg.record_stride)
}

fn classical_sweep(cfg: &RunConfig, head: &str, out: &mut dyn Write) -> Result<()> {
    let header = ["detuning", "branch", "alpha_re", "alpha_im", "q", "p", "excitation", "stable", "degenerate"];
    let mut w = CsvWriter::new(out, head, &header)?;
    for d in cfg.detuning_grid() {
        let p = cfg.params.with_detuning(d);
        for (k, b) in steady_states(&p)?.iter().enumerate() {
            let (q, pp) = amplitude_to_qp(b.alpha);
            w.row(&[
                d.into(),
                k.into(),
                b.alpha.re.into(),
                b.alpha.im.into(),
                q.into(),
                pp.into(),
                b.excitation.into(),
                b.stable.into(),
                b.degenerate.into(),
            ])?;
        }
    }
    w.finish()?;
    Ok(())
}

fn quantum_steady(cfg: &RunConfig, head: &str, out: &mut dyn Write) -> Result<()> {
    let header = ["detuning", "excitation", "a_re", "a_im", "adag2_a2"];
    let mut w = CsvWriter::new(out, head, &header)?;
    for d in cfg.detuning_grid() {
        let p = cfg.params.with_detuning(d);
        let n = steady_moment(1, 1, &p)?.re;
        let a = steady_moment(0, 1, &p)?;
        let g2 = steady_moment(2, 2, &p)?.re;
        w.row(&[d.into(), n.into(), a.re.into(), a.im.into(), g2.into()])?;
    }
    w.finish()?;
    Ok(())
}

fn domain_map(cfg: &RunConfig, head: &str, out: &mut dyn Write) -> Result<()> {
    let header = ["x", "y", "bistable", "margin_sign", "margin_detuning", "margin_cubic"];
    let mut w = CsvWriter::new(out, head, &header)?;
    let axis = |(lo, hi): (f64, f64), i: usize| lo + (hi - lo) * i as f64 / (cfg.grid - 1) as f64;
    for i in 0..cfg.grid {
        let x = axis(cfg.x_range, i);
        if x == 0.0 {
            continue;
        }
        for j in 0..cfg.grid {
            let y = axis(cfg.y_range, j);
            if !(y > 0.0) {
                continue;
            }
            let p = params_from_reduced(ReducedCoords { x, y })?;
            let m = bistability_margins(&p);
            w.row(&[x.into(), y.into(), bistable(&p)?.into(), m[0].into(), m[1].into(), m[2].into()])?;
        }
    }
    w.finish()?;
    Ok(())
}

const RECORD_HEADER: [&str; 8] = ["t", "q", "p", "var_q", "var_p", "excitation", "basin", "trajectory"];

fn write_record(w: &mut CsvWriter<&mut dyn Write>, rec: &TrajectoryRecord, index: usize) -> Result<()> {
    for i in 0..rec.len() {
        w.row(&[
            rec.times[i].into(),
            rec.q[i].into(),
            rec.p[i].into(),
            rec.var_q[i].into(),
            rec.var_p[i].into(),
            rec.excitation[i].into(),
            rec.basin[i].as_str().into(),
            index.into(),
        ])?;
    }
    Ok(())
}

fn trajectory(cfg: &RunConfig, head: &str, out: &mut dyn Write) -> Result<()> {
    let (engine, dim) = quantum_engine(cfg)?;
    let opts = step_options(cfg, dim);
    let basins = BasinMap::from_params(&cfg.params, cfg.radius_fraction).ok();
    let psi0 = DisplacedState::coherent(qp_to_amplitude(cfg.start.0, cfg.start.1), dim);
    let rec = engine.start(&psi0, cfg.params, cfg.seed)?.run(&opts, basins.as_ref())?;
    let head = format!("{head}resolved dt = {}\n", opts.dt);
    let mut w = CsvWriter::new(out, &head, &RECORD_HEADER)?;
    write_record(&mut w, &rec, 0)?;
    w.finish()?;
    Ok(())
}

fn ensemble<E: Executor>(cfg: &RunConfig, exec: &E, head: &str, out: &mut dyn Write) -> Result<()> {
    let (engine, dim) = quantum_engine(cfg)?;
    let opts = EnsembleOptions::new(cfg.n_traj, cfg.seed, engine, step_options(cfg, dim));
    let psi0 = DisplacedState::coherent(qp_to_amplitude(cfg.start.0, cfg.start.1), dim);
    let st = run_ensemble(&psi0, &cfg.params, &opts, exec)?;
    let head = format!("{head}resolved dt = {}\n", opts.step.dt);
    let header = ["t", "mean_q", "stderr_q", "mean_p", "stderr_p", "mean_n", "stderr_n"];
    let mut w = CsvWriter::new(out, &head, &header)?;
    for i in 0..st.times.len() {
        w.row(&[
            st.times[i].into(),
            st.mean_q[i].into(),
            st.stderr_q[i].into(),
            st.mean_p[i].into(),
            st.stderr_p[i].into(),
            st.mean_n[i].into(),
            st.stderr_n[i].into(),
        ])?;
    }
    w.finish()?;
    Ok(())
}

fn transitions<E: Executor>(cfg: &RunConfig, exec: &E, head: &str, out: &mut dyn Write) -> Result<()> {
    let (engine, dim) = quantum_engine(cfg)?;
    let opts = step_options(cfg, dim);
    let basins = BasinMap::from_params(&cfg.params, cfg.radius_fraction)?;
    let psi0 = DisplacedState::coherent(basins.lower_alpha, dim);
    let records = exec
        .map(0..cfg.n_traj, |i| {
            let seed = kerr_qsd::noise::trajectory_seed(cfg.seed, i as u64);
            engine.start(&psi0, cfg.params, seed)?.run(&opts, Some(&basins))
        })
        .into_iter()
        .collect::<kerr_qsd::Result<Vec<_>>>()?;
    let burn = cfg.burn_in();
    let st = transition_stats(&records, burn);
    let exact_n = steady_moment(1, 1, &cfg.params)?.re;
    let mut summary = format!(
        "{head}resolved dt = {}\njumps = {}\nmean_exit_lower = {} +- {}\nmean_exit_upper = {} +- {}\n\
         head = {}\ntail = {}\ntotal_time = {}\nexact_excitation = {exact_n}\n",
        opts.dt,
        st.n_jumps,
        st.mean_exit_lower,
        st.stderr_exit_lower,
        st.mean_exit_upper,
        st.stderr_exit_upper,
        st.head,
        st.tail,
        st.total_time,
    );
    if let Ok(occ) = basin_occupancy(&records, burn) {
        summary.push_str(&format!(
            "fraction_lower = {}\nfraction_upper = {}\ndwell_weighted_excitation = {} +- {}\n",
            occ.fraction_lower, occ.fraction_upper, occ.weighted_mean_n, occ.stderr
        ));
    }
    let ratios: Vec<f64> = records.iter().flat_map(jump_snapshot).map(|j| j.ratio).collect();
    if !ratios.is_empty() {
        let max = ratios.iter().copied().fold(f64::MIN, f64::max);
        summary.push_str(&format!("max_transit_variance_ratio = {max}\n"));
    }
    if st.no_jumps {
        summary.push_str("no jumps observed\n");
    }
    let mut w = CsvWriter::new(out, &summary, &["basin", "dwell"])?;
    for d in &st.dwell_lower {
        w.row(&["lower".into(), (*d).into()])?;
    }
    for d in &st.dwell_upper {
        w.row(&["upper".into(), (*d).into()])?;
    }
    w.finish()?;
    Ok(())
}

fn decay<E: Executor>(cfg: &RunConfig, exec: &E, head: &str, out: &mut dyn Write) -> Result<()> {
    let (engine, dim) = quantum_engine(cfg)?;
    let start = match cfg.start_branch {
        StartBranchKind::Metastable => StartBranch::Metastable,
        StartBranchKind::Lower => StartBranch::Lower,
        StartBranchKind::Upper => StartBranch::Upper,
    };
    let opts = DecayOptions {
        ensemble: EnsembleOptions::new(cfg.n_traj, cfg.seed, engine, step_options(cfg, dim)),
        start,
        fit_from: cfg.burn_in(),
    };
    let r = decay_experiment(&cfg.params, &opts, exec)?;
    let mut summary = format!(
        "{head}resolved dt = {}\nstart_alpha = {}, {}\nexact_q = {}\nexact_p = {}\n",
        opts.ensemble.step.dt, r.start_alpha.re, r.start_alpha.im, r.exact_q, r.exact_p
    );
    match &r.fit {
        Ok(f) => summary.push_str(&format!(
            "fit_tau = {}\nfit_q_inf = {}\nfit_p_inf = {}\ntau_kappa = {}\n",
            f.tau,
            f.q_inf,
            f.p_inf,
            f.tau * cfg.params.kappa
        )),
        Err(e) => summary.push_str(&format!("fit failed: {e}\n")),
    }
    let st = &r.stats;
    let header = ["t", "mean_q", "stderr_q", "mean_p", "stderr_p", "mean_n", "stderr_n"];
    let mut w = CsvWriter::new(out, &summary, &header)?;
    for i in 0..st.times.len() {
        w.row(&[
            st.times[i].into(),
            st.mean_q[i].into(),
            st.stderr_q[i].into(),
            st.mean_p[i].into(),
            st.stderr_p[i].into(),
            st.mean_n[i].into(),
            st.stderr_n[i].into(),
        ])?;
    }
    w.finish()?;
    Ok(())
}

fn hysteresis(cfg: &RunConfig, head: &str, out: &mut dyn Write) -> Result<()> {
    let (engine, dt) = match cfg.engine {
        EngineKind::Classical => (SweepEngine::Classical, cfg.dt.unwrap_or(0.01)),
        _ => {
            let (e, dim) = quantum_engine(cfg)?;
            (SweepEngine::Quantum(e), cfg.dt.unwrap_or_else(|| default_qsd_dt(&cfg.params, dim)))
        }
    };
    let opts = SweepOptions {
        detuning_range: cfg.detuning_range,
        step: cfg.step,
        t_m: cfg.t_m,
        dt,
        seed: cfg.seed,
        engine,
    };
    let r = hysteresis_sweep(&cfg.params, &opts)?;
    let window = bistable_window(&cfg.params)?;
    let fmt_opt = |x: Option<f64>| x.map_or("none".to_string(), |v| v.to_string());
    let summary = format!(
        "{head}resolved dt = {dt}\nup_jump = {}\ndown_jump = {}\ndetuning_width = {}\njumps_detected = {}\n\
         classical_window = {}\nreadout = nondemolition <a^dag a> of the current state\n",
        fmt_opt(r.up_jump),
        fmt_opt(r.down_jump),
        r.detuning_width,
        r.jumps_detected,
        window.map_or("none".to_string(), |(lo, hi)| format!("{lo}, {hi}")),
    );
    let mut w = CsvWriter::new(out, &summary, &["direction", "detuning", "excitation", "threshold"])?;
    for s in &r.sweep {
        let dir = match s.direction {
            kerr_qsd::experiments::SweepDirection::Up => "up",
            kerr_qsd::experiments::SweepDirection::Down => "down",
        };
        w.row(&[Cell::Text(dir), s.detuning.into(), s.measured_n.into(), s.threshold.into()])?;
    }
    w.finish()?;
    Ok(())
}
