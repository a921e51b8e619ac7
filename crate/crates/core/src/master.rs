//! Lindblad master equation: direct RK4 evolution and the Liouvillian
//! null-space steady state. Serves as the deterministic oracle for the
//! trajectory code.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::hilbert::{FockDim, Operator, StateVector};
use crate::linalg::{self, CMatrix};
use crate::model::{hamiltonian, lindblad, ModelParams};

const HERMITIAN_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-10;
const POSITIVITY_TOL: f64 = 1e-8;

/// A Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    m: CMatrix,
}

impl DensityMatrix {
    /// Validates the density-matrix invariants.
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
        }
        FockDim::new(m.nrows())?;
        let rho = DensityMatrix { m };
        rho.check()?;
        Ok(rho)
    }

    pub fn from_state(psi: &StateVector) -> Self {
        let v = DVector::from_column_slice(psi.amplitudes());
        DensityMatrix { m: &v * v.adjoint() }
    }

    pub fn dim(&self) -> FockDim {
        FockDim::new(self.m.nrows()).expect("validated on construction")
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn trace(&self) -> Complex64 {
        linalg::trace(&self.m)
    }

    /// tr(ρ O)
    pub fn expectation(&self, op: &Operator) -> Result<Complex64> {
        if op.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.m.nrows(), found: op.dim().get() });
        }
        let o = op.matrix();
        let d = self.m.nrows();
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..d {
            for j in 0..d {
                acc += self.m[(i, j)] * o[(j, i)];
            }
        }
        Ok(acc)
    }

    /// Diagonal of ρ in the Fock basis.
    pub fn populations(&self) -> Vec<f64> {
        (0..self.m.nrows()).map(|i| self.m[(i, i)].re).collect()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        linalg::hermitian_eigenvalues(&self.m)[0]
    }

    pub fn frobenius_distance(&self, other: &DensityMatrix) -> Result<f64> {
        if self.m.shape() != other.m.shape() {
            return Err(Error::DimensionMismatch { expected: self.m.nrows(), found: other.m.nrows() });
        }
        Ok(linalg::frobenius(&(&self.m - &other.m)))
    }

    fn check(&self) -> Result<()> {
        let herm = linalg::hermiticity_defect(&self.m);
        if herm > HERMITIAN_TOL {
            return Err(Error::Invariant(format!("hermiticity defect {herm:e}")));
        }
        let tr = self.trace();
        if (tr - 1.0).norm() > TRACE_TOL {
            return Err(Error::Invariant(format!("trace {tr}")));
        }
        let min = self.min_eigenvalue();
        if min < -POSITIVITY_TOL {
            return Err(Error::Invariant(format!("negative eigenvalue {min:e}")));
        }
        Ok(())
    }
}

struct Generator {
    h: CMatrix,
    l: CMatrix,
    ld: CMatrix,
    ldl: CMatrix,
}

impl Generator {
    fn new(params: &ModelParams, dim: FockDim) -> Self {
        let h = hamiltonian(params, dim).into_matrix();
        let l = lindblad(params, dim).into_matrix();
        let ld = l.adjoint();
        let ldl = &ld * &l;
        Generator { h, l, ld, ldl }
    }

    fn apply(&self, rho: &CMatrix) -> CMatrix {
        let i = Complex64::new(0.0, 1.0);
        let hr = &self.h * rho;
        let rh = rho * &self.h;
        let jump = &self.l * rho * &self.ld;
        let anti = &self.ldl * rho + rho * &self.ldl;
        (hr - rh) * (-i) + jump - anti * Complex64::new(0.5, 0.0)
    }
}

/// −i[H,ρ] + LρL† − ½{L†L, ρ}
pub fn lindblad_rhs(rho: &DensityMatrix, params: &ModelParams, dim: FockDim) -> Result<CMatrix> {
    if rho.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim.get(), found: rho.dim().get() });
    }
    Ok(Generator::new(params, dim).apply(&rho.m))
}

/// Largest step accepted by [`evolve_master`].
pub fn max_master_dt(params: &ModelParams, dim: FockDim) -> f64 {
    0.05 / params.kappa.max(params.detuning.abs() + params.chi * dim.get() as f64)
}

/// Accuracy-oriented step: half the inverse spectral radius of the
/// truncated generator, well inside [`max_master_dt`].
pub fn default_master_dt(params: &ModelParams, dim: FockDim) -> f64 {
    let d = dim.get() as f64;
    let radius = params.detuning.abs() * d + params.chi * d * d + params.kappa * d + 2.0 * params.drive.abs() * d.sqrt();
    (0.5 / radius).min(max_master_dt(params, dim))
}

/// RK4 evolution to `t_final`.
pub fn evolve_master(
    rho0: &DensityMatrix,
    params: &ModelParams,
    dim: FockDim,
    t_final: f64,
    dt: f64,
) -> Result<DensityMatrix> {
    let mut out = evolve_master_sampled(rho0, params, dim, &[t_final], dt)?;
    Ok(out.pop().expect("one sample requested"))
}

/// RK4 evolution returning ρ at each of the ascending `times`. Steps are
/// shortened between samples so every sample is hit exactly.
pub fn evolve_master_sampled(
    rho0: &DensityMatrix,
    params: &ModelParams,
    dim: FockDim,
    times: &[f64],
    dt: f64,
) -> Result<Vec<DensityMatrix>> {
    params.validate()?;
    if rho0.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim.get(), found: rho0.dim().get() });
    }
    let bound = max_master_dt(params, dim);
    if !(dt > 0.0) || dt > bound * (1.0 + 1e-12) {
        return Err(Error::param("dt", format!("must lie in (0, {bound}]")));
    }
    let gen = Generator::new(params, dim);
    let mut rho = rho0.m.clone();
    let mut t = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &target in times {
        if target < t {
            return Err(Error::param("times", "sample times must ascend from 0"));
        }
        let steps = ((target - t) / dt).ceil() as usize;
        if steps > 0 {
            let h = Complex64::new((target - t) / steps as f64, 0.0);
            let half = h * 0.5;
            for _ in 0..steps {
                let k1 = gen.apply(&rho);
                let k2 = gen.apply(&(&rho + &k1 * half));
                let k3 = gen.apply(&(&rho + &k2 * half));
                let k4 = gen.apply(&(&rho + &k3 * h));
                rho += (k1 + (k2 + k3) * Complex64::new(2.0, 0.0) + k4) * (h / 6.0);
                rho = (&rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
                let tr = linalg::trace(&rho).re;
                rho /= Complex64::new(tr, 0.0);
            }
        }
        t = target;
        let snap = DensityMatrix { m: rho.clone() };
        snap.check().map_err(|e| match e {
            Error::Invariant(msg) => {
                Error::Invariant(format!("at t = {t}: {msg}; raise dim or lower dt"))
            }
            other => other,
        })?;
        out.push(snap);
    }
    Ok(out)
}

/// Dense Liouvillian superoperator acting on column-major vec(ρ).
pub fn liouvillian(params: &ModelParams, dim: FockDim) -> CMatrix {
    let d = dim.get();
    let gen = Generator::new(params, dim);
    let mut sup = DMatrix::zeros(d * d, d * d);
    let mut basis = CMatrix::zeros(d, d);
    for j in 0..d {
        for i in 0..d {
            basis[(i, j)] = Complex64::new(1.0, 0.0);
            let col = gen.apply(&basis);
            sup.column_mut(j * d + i).copy_from_slice(col.as_slice());
            basis[(i, j)] = Complex64::new(0.0, 0.0);
        }
    }
    sup
}

/// Trace-one null vector of the Liouvillian.
pub fn steady_state_density(params: &ModelParams, dim: FockDim) -> Result<DensityMatrix> {
    params.validate()?;
    let d = dim.get();
    let mut sup = liouvillian(params, dim);
    // The (0,0) row is redundant given trace preservation; swap in tr ρ = 1.
    sup.row_mut(0).fill(Complex64::new(0.0, 0.0));
    for k in 0..d {
        sup[(0, k * d + k)] = Complex64::new(1.0, 0.0);
    }
    let mut rhs = DVector::zeros(d * d);
    rhs[0] = Complex64::new(1.0, 0.0);
    let lu = sup.clone().lu();
    let x = lu.solve(&rhs).ok_or(Error::Singular)?;
    if !x.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Singular);
    }
    let resid = (&sup * &x - &rhs).norm();
    if resid > 1e-8 {
        return Err(Error::Singular);
    }
    let m = DMatrix::from_column_slice(d, d, x.as_slice());
    let m = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let rho = DensityMatrix { m };
    let top = rho.m[(d - 1, d - 1)].re.abs().max(rho.m[(d - 2, d - 2)].re.abs());
    if top > 1e-10 {
        return Err(Error::Truncation(format!(
            "top Fock populations reach {top:e} at dim {d}; raise dim"
        )));
    }
    rho.check()?;
    Ok(rho)
}
