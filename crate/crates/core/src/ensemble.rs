//! Ensembles of independent trajectories: streaming statistics on a shared
//! time grid and the projector average ρ = M(|ψ⟩⟨ψ|).
//!
//! Results depend only on the master seed. Work is handed to an
//! [`Executor`] in index-ordered batches and folded in index order, so
//! the number of workers never changes a single bit of the output.

use alloc::boxed::Box;
use alloc::vec::Vec;

use nalgebra::DVector;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::hilbert::{FockDim, StateVector};
use crate::linalg::CMatrix;
use crate::master::DensityMatrix;
use crate::model::ModelParams;
use crate::noise::trajectory_seed;
use crate::qsd::{DisplacedState, StepOptions, Trajectory, TrajectoryRecord, DEFAULT_RECENTER_THRESHOLD};

/// Runs independent jobs. Implementations may evaluate in any order or
/// concurrently but must return results in index order.
pub trait Executor {
    fn map<T, F>(&self, range: core::ops::Range<usize>, job: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync;
}

/// Evaluates jobs one after another on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Serial;

impl Executor for Serial {
    fn map<T, F>(&self, range: core::ops::Range<usize>, job: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync,
    {
        range.map(job).collect()
    }
}

/// Which integrator a trajectory uses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Engine {
    Fixed { dim: FockDim },
    Mqsd { local_dim: FockDim, recenter_threshold: f64 },
}

impl Engine {
    pub fn mqsd(local_dim: FockDim) -> Self {
        Engine::Mqsd { local_dim, recenter_threshold: DEFAULT_RECENTER_THRESHOLD }
    }

    /// Builds a trajectory from a (possibly displaced) initial state.
    pub fn start(&self, psi0: &DisplacedState, params: ModelParams, seed: u64) -> Result<Trajectory> {
        match *self {
            Engine::Fixed { dim } => {
                let psi = if psi0.base == Complex64::new(0.0, 0.0) && psi0.local.dim() == dim {
                    psi0.local.clone()
                } else {
                    psi0.to_fock(dim)?
                };
                Trajectory::fixed(&psi, params, seed)
            }
            Engine::Mqsd { local_dim, recenter_threshold } => {
                let local = if psi0.local.dim() == local_dim {
                    psi0.local.clone()
                } else {
                    psi0.local.padded(local_dim)?
                };
                let state = DisplacedState { base: psi0.base, local };
                Trajectory::mqsd(&state, params, seed, recenter_threshold)
            }
        }
    }
}

/// Ensemble means and standard errors on the record grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStats {
    pub times: Vec<f64>,
    pub mean_q: Vec<f64>,
    pub mean_p: Vec<f64>,
    pub mean_n: Vec<f64>,
    pub stderr_q: Vec<f64>,
    pub stderr_p: Vec<f64>,
    pub stderr_n: Vec<f64>,
    pub n_traj: usize,
    /// Average of final projectors, when requested.
    pub final_density: Option<DensityMatrix>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleOptions {
    pub n_traj: usize,
    pub master_seed: u64,
    pub engine: Engine,
    pub step: StepOptions,
    /// Fock dimension of the final-state density average, if wanted.
    pub density_dim: Option<FockDim>,
    /// Trajectories handed to the executor at once.
    pub batch: usize,
}

impl EnsembleOptions {
    pub fn new(n_traj: usize, master_seed: u64, engine: Engine, step: StepOptions) -> Self {
        EnsembleOptions { n_traj, master_seed, engine, step, density_dim: None, batch: 64 }
    }
}

#[derive(Debug, Clone, Default)]
struct Welford {
    n: f64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Welford {
    fn push(&mut self, xs: &[f64]) {
        if self.mean.is_empty() {
            self.mean = alloc::vec![0.0; xs.len()];
            self.m2 = alloc::vec![0.0; xs.len()];
        }
        self.n += 1.0;
        for (i, &x) in xs.iter().enumerate() {
            let delta = x - self.mean[i];
            self.mean[i] += delta / self.n;
            self.m2[i] += delta * (x - self.mean[i]);
        }
    }

    fn stderr(&self) -> Vec<f64> {
        self.m2
            .iter()
            .map(|m2| if self.n > 1.0 { (m2 / (self.n - 1.0)).sqrt() / self.n.sqrt() } else { 0.0 })
            .collect()
    }
}

struct Outcome {
    record: TrajectoryRecord,
    final_state: Option<StateVector>,
}

/// Runs `opts.n_traj` trajectories from `psi0`. Trajectory i uses the
/// seed `trajectory_seed(master_seed, i)`.
pub fn run_ensemble<E: Executor>(
    psi0: &DisplacedState,
    params: &ModelParams,
    opts: &EnsembleOptions,
    exec: &E,
) -> Result<EnsembleStats> {
    params.validate()?;
    if opts.n_traj < 2 {
        return Err(Error::param("n_traj", "need at least 2 trajectories"));
    }
    if opts.batch == 0 {
        return Err(Error::param("batch", "must be at least 1"));
    }
    if let (Engine::Fixed { dim }, Some(dd)) = (opts.engine, opts.density_dim) {
        if dim != dd {
            return Err(Error::DimensionMismatch { expected: dim.get(), found: dd.get() });
        }
    }
    let job = |i: usize| -> Result<Outcome> {
        let seed = trajectory_seed(opts.master_seed, i as u64);
        let wrap = |e: Error| Error::Trajectory { index: i, seed, source: Box::new(e) };
        let mut traj = opts.engine.start(psi0, *params, seed).map_err(wrap)?;
        let record = traj.run(&opts.step, None).map_err(wrap)?;
        let final_state = match opts.density_dim {
            None => None,
            Some(d) => Some(match opts.engine {
                Engine::Fixed { .. } => traj.local_state(),
                Engine::Mqsd { .. } => traj.displaced_state().to_fock(d).map_err(wrap)?,
            }),
        };
        Ok(Outcome { record, final_state })
    };

    let (mut wq, mut wp, mut wn) = (Welford::default(), Welford::default(), Welford::default());
    let mut times = Vec::new();
    let mut rho_sum: Option<CMatrix> = None;
    let mut start = 0;
    while start < opts.n_traj {
        let end = (start + opts.batch).min(opts.n_traj);
        for out in exec.map(start..end, job) {
            let out = out?;
            if times.is_empty() {
                times = out.record.times.clone();
            }
            wq.push(&out.record.q);
            wp.push(&out.record.p);
            wn.push(&out.record.excitation);
            if let Some(psi) = out.final_state {
                let v = DVector::from_column_slice(psi.amplitudes());
                let proj = &v * v.adjoint();
                match rho_sum.as_mut() {
                    Some(acc) => *acc += proj,
                    None => rho_sum = Some(proj),
                }
            }
        }
        start = end;
    }
    let final_density = match rho_sum {
        None => None,
        Some(m) => Some(finish_density(m, opts.n_traj)?),
    };
    Ok(EnsembleStats {
        times,
        stderr_q: wq.stderr(),
        stderr_p: wp.stderr(),
        stderr_n: wn.stderr(),
        mean_q: wq.mean,
        mean_p: wp.mean,
        mean_n: wn.mean,
        n_traj: opts.n_traj,
        final_density,
    })
}

fn finish_density(sum: CMatrix, n: usize) -> Result<DensityMatrix> {
    let m = sum / Complex64::new(n as f64, 0.0);
    let m = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
    DensityMatrix::new(m)
}

/// ρ = (1/N) Σ |ψᵢ⟩⟨ψᵢ| over states sharing one Fock basis.
pub fn density_from_ensemble(states: &[StateVector]) -> Result<DensityMatrix> {
    let first = states.first().ok_or(Error::param("states", "empty ensemble"))?;
    let d = first.dim().get();
    let mut sum = CMatrix::zeros(d, d);
    for s in states {
        if s.dim().get() != d {
            return Err(Error::DimensionMismatch { expected: d, found: s.dim().get() });
        }
        let v = DVector::from_column_slice(s.amplitudes());
        sum += &v * v.adjoint();
    }
    finish_density(sum, states.len())
}
