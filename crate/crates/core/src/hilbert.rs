//! Truncated Fock-space states and operators.
//!
//! Conventions: ħ = 1 and a = (Q + iP)/√2, so a coherent state |α⟩ sits at
//! ⟨Q⟩ = √2 Re α, ⟨P⟩ = √2 Im α with ΔQ² = ΔP² = 1/2.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Sub};

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Number of retained Fock levels; indices run over `0..dim`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FockDim(usize);

impl FockDim {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::DimensionTooSmall(dim));
        }
        Ok(FockDim(dim))
    }

    #[inline]
    pub fn get(self) -> usize {
        self.0
    }

    /// Smallest dimension satisfying `dim ≥ |α|² + 6|α| + 10`, which keeps
    /// the coherent-state tail below about 1e-8.
    pub fn for_amplitude(alpha: Complex64) -> Self {
        let r = alpha.norm();
        FockDim(((r * r + 6.0 * r + 10.0).ceil() as usize).max(2))
    }
}

impl TryFrom<usize> for FockDim {
    type Error = Error;
    fn try_from(dim: usize) -> Result<Self> {
        FockDim::new(dim)
    }
}

/// A normalized pure state over a truncated Fock basis.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: Vec<Complex64>,
}

impl StateVector {
    /// Builds a state from raw amplitudes, normalizing them.
    pub fn from_amplitudes(mut amps: Vec<Complex64>) -> Result<Self> {
        FockDim::new(amps.len())?;
        let norm = norm_of(&amps);
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::ZeroNorm);
        }
        let inv = 1.0 / norm;
        amps.iter_mut().for_each(|z| *z *= inv);
        Ok(StateVector { amps })
    }

    pub(crate) fn from_normalized(amps: Vec<Complex64>) -> Self {
        debug_assert!((norm_of(&amps) - 1.0).abs() < 1e-8);
        StateVector { amps }
    }

    pub fn fock(n: usize, dim: FockDim) -> Result<Self> {
        if n >= dim.get() {
            return Err(Error::param("n", "Fock level outside the truncated basis"));
        }
        let mut amps = vec![ZERO; dim.get()];
        amps[n] = Complex64::new(1.0, 0.0);
        Ok(StateVector { amps })
    }

    pub fn vacuum(dim: FockDim) -> Self {
        let mut amps = vec![ZERO; dim.get()];
        amps[0] = Complex64::new(1.0, 0.0);
        StateVector { amps }
    }

    pub fn dim(&self) -> FockDim {
        FockDim(self.amps.len())
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        check_dims(self.amps.len(), other.amps.len())?;
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn norm(&self) -> f64 {
        norm_of(&self.amps)
    }

    /// Total population in the top `k` Fock levels.
    pub fn tail_population(&self, k: usize) -> f64 {
        let d = self.amps.len();
        self.amps[d.saturating_sub(k)..]
            .iter()
            .map(|z| z.norm_sqr())
            .sum()
    }

    /// Embeds the state into a larger (or equal) basis by zero padding.
    pub fn padded(&self, dim: FockDim) -> Result<StateVector> {
        if dim.get() < self.amps.len() {
            return Err(Error::DimensionMismatch {
                expected: self.amps.len(),
                found: dim.get(),
            });
        }
        let mut amps = self.amps.clone();
        amps.resize(dim.get(), ZERO);
        Ok(StateVector { amps })
    }
}

pub(crate) fn norm_of(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Dense square operator on a truncated Fock space.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    m: CMatrix,
}

impl Operator {
    pub fn from_matrix(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        FockDim::new(m.nrows())?;
        Ok(Operator { m })
    }

    pub fn identity(dim: FockDim) -> Self {
        Operator {
            m: CMatrix::identity(dim.get(), dim.get()),
        }
    }

    pub fn zeros(dim: FockDim) -> Self {
        Operator {
            m: CMatrix::zeros(dim.get(), dim.get()),
        }
    }

    pub fn dim(&self) -> FockDim {
        FockDim(self.m.nrows())
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.m[(row, col)]
    }

    pub fn adjoint(&self) -> Operator {
        Operator {
            m: self.m.adjoint(),
        }
    }

    pub fn scale(&self, s: Complex64) -> Operator {
        Operator { m: &self.m * s }
    }

    pub fn scale_real(&self, s: f64) -> Operator {
        self.scale(Complex64::new(s, 0.0))
    }

    /// Returns `op·ψ` as raw (unnormalized) amplitudes.
    pub fn apply(&self, psi: &StateVector) -> Result<Vec<Complex64>> {
        check_dims(self.m.nrows(), psi.amps.len())?;
        let d = psi.amps.len();
        let mut out = vec![ZERO; d];
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = ZERO;
            for (j, a) in psi.amps.iter().enumerate() {
                acc += self.m[(i, j)] * a;
            }
            *o = acc;
        }
        Ok(out)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        linalg::hermiticity_defect(&self.m) <= tol
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        Operator { m: &self.m * &rhs.m }
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        Operator { m: &self.m + &rhs.m }
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        Operator { m: &self.m - &rhs.m }
    }
}

/// The lowering operator: entries (n−1, n) = √n.
pub fn annihilation(dim: FockDim) -> Operator {
    let d = dim.get();
    let mut m = CMatrix::zeros(d, d);
    for n in 1..d {
        m[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    Operator { m }
}

pub fn creation(dim: FockDim) -> Operator {
    annihilation(dim).adjoint()
}

pub fn number(dim: FockDim) -> Operator {
    let d = dim.get();
    let mut m = CMatrix::zeros(d, d);
    for n in 0..d {
        m[(n, n)] = Complex64::new(n as f64, 0.0);
    }
    Operator { m }
}

/// ⟨ψ|op|ψ⟩
pub fn expectation(op: &Operator, psi: &StateVector) -> Result<Complex64> {
    let v = op.apply(psi)?;
    Ok(psi.amps.iter().zip(&v).map(|(a, b)| a.conj() * b).sum())
}

/// A truncated coherent state together with the probability mass lost to
/// truncation before renormalization.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherentState {
    pub state: StateVector,
    pub truncation_deficit: f64,
}

/// Coherent state |α⟩ truncated to `dim` levels and renormalized.
pub fn coherent_state_with_deficit(alpha: Complex64, dim: FockDim) -> CoherentState {
    let d = dim.get();
    let r = alpha.norm();
    let mut amps = vec![ZERO; d];
    if r == 0.0 {
        amps[0] = Complex64::new(1.0, 0.0);
        return CoherentState {
            state: StateVector { amps },
            truncation_deficit: 0.0,
        };
    }
    // |c_n| = exp(−|α|²/2) |α|^n / √n!, built in log form so large |α| cannot
    // underflow the leading coefficient.
    let ln_r = r.ln();
    let phase = alpha / r;
    let mut ln_mag = -0.5 * r * r;
    let mut ph = Complex64::new(1.0, 0.0);
    let mut kept = 0.0;
    for (n, slot) in amps.iter_mut().enumerate() {
        if n > 0 {
            ln_mag += ln_r - 0.5 * (n as f64).ln();
            ph *= phase;
        }
        let mag = ln_mag.exp();
        *slot = ph * mag;
        kept += mag * mag;
    }
    let deficit = (1.0 - kept).max(0.0);
    let inv = 1.0 / kept.sqrt();
    amps.iter_mut().for_each(|z| *z *= inv);
    CoherentState {
        state: StateVector { amps },
        truncation_deficit: deficit,
    }
}

/// Coherent state |α⟩; logs a warning if the truncation deficit exceeds 1e-8.
pub fn coherent_state(alpha: Complex64, dim: FockDim) -> StateVector {
    let c = coherent_state_with_deficit(alpha, dim);
    if c.truncation_deficit > 1e-8 {
        log::warn!(
            "coherent state alpha={} truncated at dim={} loses {:.3e} of its norm",
            alpha,
            dim.get(),
            c.truncation_deficit
        );
    }
    c.state
}

/// D(α) = exp(α a† − α* a) on the truncated space, by dense matrix exponential.
pub fn displacement(alpha: Complex64, dim: FockDim) -> Operator {
    let a = annihilation(dim);
    let gen = &a.adjoint().scale(alpha) - &a.scale(alpha.conj());
    Operator {
        m: linalg::expm(&gen.m),
    }
}

/// Returns D(α)ψ, renormalized.
pub fn apply_displacement(alpha: Complex64, psi: &StateVector) -> StateVector {
    if alpha == ZERO {
        return psi.clone();
    }
    let d = displacement(alpha, psi.dim());
    let amps = d.apply(psi).expect("dimensions agree by construction");
    StateVector::from_amplitudes(amps).expect("displacement of a normalized state is nonzero")
}

/// Position/momentum means and variances of a pure state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadratures {
    pub q: f64,
    pub p: f64,
    pub var_q: f64,
    pub var_p: f64,
}

pub fn quadratures(psi: &StateVector) -> Quadratures {
    Moments::of(&psi.amps).quadratures()
}

/// Phase-space position (⟨Q⟩, ⟨P⟩) of an amplitude α = ⟨a⟩.
#[inline]
pub fn amplitude_to_qp(alpha: Complex64) -> (f64, f64) {
    (
        core::f64::consts::SQRT_2 * alpha.re,
        core::f64::consts::SQRT_2 * alpha.im,
    )
}

#[inline]
pub fn qp_to_amplitude(q: f64, p: f64) -> Complex64 {
    Complex64::new(q, p) / core::f64::consts::SQRT_2
}

/// Low-order normal-ordered moments of a pure state, computed from the
/// ladder action without building operators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    /// ⟨a⟩
    pub a: Complex64,
    /// ⟨a²⟩
    pub a2: Complex64,
    /// ⟨a†a⟩
    pub n: f64,
    /// ⟨a†a²⟩
    pub ada2: Complex64,
}

impl Moments {
    /// Moments of the (not necessarily normalized) vector `v`.
    pub fn of(v: &[Complex64]) -> Moments {
        let d = v.len();
        let mut norm2 = 0.0;
        let mut a = ZERO;
        let mut a2 = ZERO;
        let mut n = 0.0;
        let mut ada2 = ZERO;
        for k in 0..d {
            let ck = v[k].conj();
            let kf = k as f64;
            norm2 += v[k].norm_sqr();
            n += kf * v[k].norm_sqr();
            if k + 1 < d {
                let s = (kf + 1.0).sqrt();
                a += ck * v[k + 1] * s;
                // ⟨k|a†a a|k+1⟩ = k √(k+1)
                ada2 += ck * v[k + 1] * (kf * s);
            }
            if k + 2 < d {
                a2 += ck * v[k + 2] * ((kf + 1.0) * (kf + 2.0)).sqrt();
            }
        }
        let inv = 1.0 / norm2;
        Moments {
            a: a * inv,
            a2: a2 * inv,
            n: n * inv,
            ada2: ada2 * inv,
        }
    }

    /// Quadrature means and variances, using ⟨aa†⟩ = ⟨a†a⟩ + 1.
    pub fn quadratures(&self) -> Quadratures {
        let (q, p) = amplitude_to_qp(self.a);
        let q2 = self.a2.re + self.n + 0.5;
        let p2 = -self.a2.re + self.n + 0.5;
        Quadratures {
            q,
            p,
            var_q: (q2 - q * q).max(0.0),
            var_p: (p2 - p * p).max(0.0),
        }
    }
}

/// Square roots √0 … √dim, cached for the ladder kernels.
#[derive(Debug, Clone)]
pub(crate) struct SqrtTable(Vec<f64>);

impl SqrtTable {
    pub(crate) fn new(dim: usize) -> Self {
        SqrtTable((0..=dim).map(|n| (n as f64).sqrt()).collect())
    }

    #[inline(always)]
    pub(crate) fn at(&self, n: usize) -> f64 {
        self.0[n]
    }
}

/// out = (α a† − α* a) v on the truncated space.
fn apply_displacement_generator(
    alpha: Complex64,
    v: &[Complex64],
    out: &mut [Complex64],
    sq: &SqrtTable,
) {
    let d = v.len();
    let ac = alpha.conj();
    for n in 0..d {
        let mut acc = ZERO;
        if n > 0 {
            acc += alpha * v[n - 1] * sq.at(n);
        }
        if n + 1 < d {
            acc -= ac * v[n + 1] * sq.at(n + 1);
        }
        out[n] = acc;
    }
}

/// In-place D(α)v using the Taylor series of the exponential's action,
/// split into substeps with ‖α a† − α* a‖ ≤ 1 each. Equals the dense
/// `displacement` operator to rounding; used on the moving-basis hot path.
pub(crate) fn displace_in_place(alpha: Complex64, v: &mut [Complex64], sq: &SqrtTable) {
    let d = v.len();
    if alpha == ZERO {
        return;
    }
    let bound = 2.0 * alpha.norm() * (d as f64).sqrt();
    let substeps = bound.ceil().max(1.0) as usize;
    let h = alpha / substeps as f64;
    let mut term = vec![ZERO; d];
    let mut next = vec![ZERO; d];
    for _ in 0..substeps {
        term.copy_from_slice(v);
        let scale = norm_of(v);
        for k in 1..60 {
            apply_displacement_generator(h, &term, &mut next, sq);
            let inv_k = 1.0 / k as f64;
            let mut tnorm = 0.0;
            for (t, nx) in term.iter_mut().zip(&next) {
                *t = nx * inv_k;
                tnorm += t.norm_sqr();
            }
            for (x, t) in v.iter_mut().zip(&term) {
                *x += t;
            }
            if tnorm.sqrt() <= 1e-17 * scale {
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn dim(d: usize) -> FockDim {
        FockDim::new(d).unwrap()
    }

    #[test]
    fn fock_dim_rejects_small() {
        assert_eq!(FockDim::new(1), Err(Error::DimensionTooSmall(1)));
        assert!(FockDim::new(0).is_err());
        assert!(FockDim::new(2).is_ok());
    }

    #[test]
    fn annihilation_dim2() {
        let a = annihilation(dim(2));
        assert_eq!(a.entry(0, 1), c(1.0, 0.0));
        assert_eq!(a.entry(0, 0), ZERO);
        assert_eq!(a.entry(1, 0), ZERO);
        assert_eq!(a.entry(1, 1), ZERO);
    }

    #[test]
    fn annihilation_dim3_ladder() {
        let a = annihilation(dim(3));
        for i in 0..3 {
            for j in 0..3 {
                let expect = match (i, j) {
                    (0, 1) => 1.0,
                    (1, 2) => 2f64.sqrt(),
                    _ => 0.0,
                };
                assert_eq!(a.entry(i, j), c(expect, 0.0));
            }
        }
    }

    #[test]
    fn number_from_ladder_is_diagonal() {
        let d = dim(7);
        let a = annihilation(d);
        let n = &a.adjoint() * &a;
        for i in 0..7 {
            for j in 0..7 {
                assert!((n.entry(i, j) - number(d).entry(i, j)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn commutator_is_identity_below_truncation() {
        let d = dim(9);
        let a = annihilation(d);
        let ad = a.adjoint();
        let comm = &(&a * &ad) - &(&ad * &a);
        for i in 0..8 {
            for j in 0..8 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(comm.entry(i, j).re, expect, epsilon = 1e-14);
                assert_abs_diff_eq!(comm.entry(i, j).im, 0.0, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn expectation_examples() {
        let d = dim(30);
        let n = number(d);
        assert_eq!(expectation(&n, &StateVector::vacuum(d)).unwrap(), ZERO);
        let psi = coherent_state(c(1.0, 0.0), d);
        let a = annihilation(d);
        let ea = expectation(&a, &psi).unwrap();
        assert!((ea - c(1.0, 0.0)).norm() < 1e-8);
        let id = Operator::identity(d);
        let e1 = expectation(&id, &psi).unwrap();
        assert!((e1 - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn expectation_dimension_mismatch() {
        let err = expectation(&number(dim(3)), &StateVector::vacuum(dim(4))).unwrap_err();
        assert_eq!(
            err,
            Error::DimensionMismatch {
                expected: 3,
                found: 4
            }
        );
    }

    #[test]
    fn coherent_zero_is_vacuum() {
        let d = dim(5);
        assert_eq!(coherent_state(ZERO, d), StateVector::vacuum(d));
    }

    #[test]
    fn coherent_large_offset_centres_on_requested_point() {
        let alpha = qp_to_amplitude(7.0, 14.0);
        let d = FockDim::for_amplitude(alpha);
        let cs = coherent_state_with_deficit(alpha, d);
        assert!(cs.truncation_deficit < 1e-8);
        let q = quadratures(&cs.state);
        assert_abs_diff_eq!(q.q, 7.0, epsilon = 1e-7);
        assert_abs_diff_eq!(q.p, 14.0, epsilon = 1e-7);
    }

    #[test]
    fn coherent_truncation_deficit_reported() {
        let cs = coherent_state_with_deficit(c(3.0, 0.0), dim(5));
        assert!(cs.truncation_deficit > 0.5);
        assert_abs_diff_eq!(cs.state.norm(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn displacement_of_vacuum_is_coherent() {
        let d = dim(40);
        let alpha = c(1.3, -0.7);
        let disp = apply_displacement(alpha, &StateVector::vacuum(d));
        let coh = coherent_state(alpha, d);
        let overlap = disp.inner(&coh).unwrap().norm();
        assert_abs_diff_eq!(overlap, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn displacement_identity_and_inverse() {
        let d = dim(40);
        let psi = StateVector::from_amplitudes(vec![
            c(0.3, 0.1),
            c(-0.2, 0.5),
            c(0.1, 0.0),
            ZERO,
            ZERO,
            ZERO,
        ])
        .unwrap()
        .padded(d)
        .unwrap();
        assert_eq!(apply_displacement(ZERO, &psi), psi);
        let alpha = c(0.9, 1.1);
        let back = apply_displacement(-alpha, &apply_displacement(alpha, &psi));
        for (x, y) in back.amplitudes().iter().zip(psi.amplitudes()) {
            assert!((x - y).norm() < 1e-8);
        }
    }

    #[test]
    fn taylor_action_matches_dense_exponential() {
        let d = dim(30);
        let alpha = c(-1.7, 0.4);
        let psi = coherent_state(c(0.5, 0.5), d);
        let dense = displacement(alpha, d).apply(&psi).unwrap();
        let mut v = psi.amplitudes().to_vec();
        displace_in_place(alpha, &mut v, &SqrtTable::new(30));
        for (x, y) in v.iter().zip(&dense) {
            assert!((x - y).norm() < 1e-13);
        }
    }

    #[test]
    fn quadrature_examples() {
        let d = dim(20);
        let q0 = quadratures(&StateVector::vacuum(d));
        assert_eq!((q0.q, q0.p), (0.0, 0.0));
        assert_abs_diff_eq!(q0.var_q, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(q0.var_p, 0.5, epsilon = 1e-15);

        let alpha = c(1.2, -0.4);
        let qc = quadratures(&coherent_state(alpha, dim(40)));
        assert_abs_diff_eq!(qc.q, 2f64.sqrt() * 1.2, epsilon = 1e-10);
        assert_abs_diff_eq!(qc.var_q, 0.5, epsilon = 1e-10);
        assert_abs_diff_eq!(qc.var_p, 0.5, epsilon = 1e-10);

        let q1 = quadratures(&StateVector::fock(1, d).unwrap());
        assert_eq!((q1.q, q1.p), (0.0, 0.0));
        assert_abs_diff_eq!(q1.var_q, 1.5, epsilon = 1e-15);
        assert_abs_diff_eq!(q1.var_p, 1.5, epsilon = 1e-15);
    }

    #[test]
    fn moments_match_dense_operators() {
        let d = dim(12);
        let psi = StateVector::from_amplitudes(
            (0..12)
                .map(|k| c((k as f64 * 0.7).sin(), (k as f64 * 0.3).cos() / (1.0 + k as f64)))
                .collect(),
        )
        .unwrap();
        let a = annihilation(d);
        let ad = a.adjoint();
        let m = Moments::of(psi.amplitudes());
        assert!((m.a - expectation(&a, &psi).unwrap()).norm() < 1e-13);
        assert!((m.a2 - expectation(&(&a * &a), &psi).unwrap()).norm() < 1e-13);
        assert!((m.n - expectation(&(&ad * &a), &psi).unwrap().re).abs() < 1e-13);
        let ada2 = &(&ad * &a) * &a;
        assert!((m.ada2 - expectation(&ada2, &psi).unwrap()).norm() < 1e-13);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn state(d: usize) -> impl Strategy<Value = StateVector> {
            prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), d).prop_filter_map(
                "nonzero",
                |v| StateVector::from_amplitudes(v.into_iter().map(|(r, i)| c(r, i)).collect()).ok(),
            )
        }

        proptest! {
            #[test]
            fn hermitian_expectations_are_real(psi in state(8)) {
                let d = psi.dim();
                let a = annihilation(d);
                let x = &a + &a.adjoint();
                let h = &(&x * &x) + &number(d);
                prop_assert!(expectation(&h, &psi).unwrap().im.abs() < 1e-12);
            }

            #[test]
            fn coherent_recovers_alpha(re in -2.0f64..2.0, im in -2.0f64..2.0) {
                let alpha = c(re, im);
                let d = FockDim::for_amplitude(alpha);
                let cs = coherent_state_with_deficit(alpha, d);
                let ea = expectation(&annihilation(d), &cs.state).unwrap();
                prop_assert!((ea - alpha).norm() < 1e-7 + 10.0 * cs.truncation_deficit.sqrt());
            }

            #[test]
            fn displacement_preserves_norm_for_low_support(re in -1.5f64..1.5, im in -1.5f64..1.5, psi in state(4)) {
                let alpha = c(re, im);
                let d = FockDim::new(4 + 10 + (6.0 * alpha.norm() + alpha.norm_sqr()).ceil() as usize * 2).unwrap();
                let wide = psi.padded(d).unwrap();
                let raw = displacement(alpha, d).apply(&wide).unwrap();
                prop_assert!((norm_of(&raw) - 1.0).abs() < 1e-10);
            }
        }
    }
}
