//! Classical mean-field limit: factorized equation of motion for α = ⟨a⟩,
//! its stationary branches, their linear stability and the bistability
//! domain.

use alloc::vec::Vec;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::model::ModelParams;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// A stationary solution of the mean-field equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyBranch {
    pub alpha: Complex64,
    /// |α|²
    pub excitation: f64,
    pub stable: bool,
    /// Eigenvalues of the 2×2 Jacobian in (Re α, Im α).
    pub jacobian_eigen: [Complex64; 2],
    /// Set when the branch is a (numerically) double root, i.e. the
    /// parameters sit on the edge of the bistable domain.
    pub degenerate: bool,
}

/// Reduced coordinates x = (κ/2)/(Δω+χ), y = (κ/2)³/(β²χ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedCoords {
    pub x: f64,
    pub y: f64,
}

/// dα/dt = −i{β + (Δω+χ)α + 2χ|α|²α} − (κ/2)α
pub fn mean_field_rhs(alpha: Complex64, params: &ModelParams) -> Complex64 {
    let d = params.shifted_detuning();
    -I * (params.drive + d * alpha + 2.0 * params.chi * alpha.norm_sqr() * alpha)
        - 0.5 * params.kappa * alpha
}

/// Jacobian of the mean-field flow in real coordinates (Re α, Im α).
pub fn jacobian(alpha: Complex64, params: &ModelParams) -> [[f64; 2]; 2] {
    // dF = A dα + B dα*, so dF = (A + B) dx + i(A − B) dy.
    let d = params.shifted_detuning();
    let a = -I * (d + 4.0 * params.chi * alpha.norm_sqr()) - 0.5 * params.kappa;
    let b = -I * 2.0 * params.chi * alpha * alpha;
    let dx = a + b;
    let dy = I * (a - b);
    [[dx.re, dy.re], [dx.im, dy.im]]
}

fn eigen2(j: &[[f64; 2]; 2]) -> [Complex64; 2] {
    let tr = j[0][0] + j[1][1];
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let disc = Complex64::new(0.25 * tr * tr - det, 0.0).sqrt();
    [0.5 * tr + disc, 0.5 * tr - disc]
}

/// Stationary amplitude on the branch with excitation `n`.
fn alpha_from_excitation(n: f64, params: &ModelParams) -> Complex64 {
    if params.drive == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let e = params.shifted_detuning() + 2.0 * params.chi * n;
    -I * params.drive / (I * e + 0.5 * params.kappa)
}

/// n[(κ/2)² + (Δω+χ+2χn)²] − β²
pub fn excitation_residual(n: f64, params: &ModelParams) -> f64 {
    let k = 0.5 * params.kappa;
    let e = params.shifted_detuning() + 2.0 * params.chi * n;
    n * (k * k + e * e) - params.drive * params.drive
}

fn make_branch(n: f64, degenerate: bool, params: &ModelParams) -> SteadyBranch {
    let alpha = alpha_from_excitation(n, params);
    let eig = eigen2(&jacobian(alpha, params));
    let max_re = eig[0].re.max(eig[1].re);
    SteadyBranch {
        alpha,
        excitation: alpha.norm_sqr(),
        // marginal cases count as unstable
        stable: max_re < -1e-10,
        jacobian_eigen: eig,
        degenerate,
    }
}

struct Cubic {
    c: [f64; 4], // c[0] + c[1] n + c[2] n² + c[3] n³
}

impl Cubic {
    fn eval(&self, n: f64) -> f64 {
        ((self.c[3] * n + self.c[2]) * n + self.c[1]) * n + self.c[0]
    }

    fn deriv(&self, n: f64) -> f64 {
        (3.0 * self.c[3] * n + 2.0 * self.c[2]) * n + self.c[1]
    }

    fn polish(&self, mut n: f64) -> f64 {
        for _ in 0..12 {
            let d = self.deriv(n);
            if d == 0.0 {
                break;
            }
            let step = self.eval(n) / d;
            let next = n - step;
            if !next.is_finite() {
                break;
            }
            n = next;
            if step.abs() <= 1e-16 * n.abs().max(1e-300) {
                break;
            }
        }
        n
    }

    fn bisect(&self, mut lo: f64, mut hi: f64) -> f64 {
        let mut flo = self.eval(lo);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            let fm = self.eval(mid);
            if (fm < 0.0) == (flo < 0.0) {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Real roots (ascending) of the excitation cubic with a degeneracy flag
/// for double roots.
fn excitation_roots(params: &ModelParams) -> Vec<(f64, bool)> {
    let k = 0.5 * params.kappa;
    let d = params.shifted_detuning();
    let chi = params.chi;
    let b2 = params.drive * params.drive;
    if b2 == 0.0 {
        return alloc::vec![(0.0, false)];
    }
    if chi == 0.0 {
        return alloc::vec![(b2 / (d * d + k * k), false)];
    }
    let cubic = Cubic {
        c: [-b2, d * d + k * k, 4.0 * chi * d, 4.0 * chi * chi],
    };
    // Monic and depressed forms.
    let p2 = cubic.c[2] / cubic.c[3];
    let p1 = cubic.c[1] / cubic.c[3];
    let p0 = cubic.c[0] / cubic.c[3];
    let shift = p2 / 3.0;
    let p = p1 - p2 * p2 / 3.0;
    let q = 2.0 * p2 * p2 * p2 / 27.0 - p2 * p1 / 3.0 + p0;
    let scale = 4.0 * p.abs().powi(3) + 27.0 * q * q;
    let disc = -(4.0 * p * p * p + 27.0 * q * q);
    let rel = if scale > 0.0 { disc / scale } else { 0.0 };

    let mut roots: Vec<(f64, bool)> = Vec::with_capacity(3);
    if rel > 1e-12 {
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = ((3.0 * q / (2.0 * p)) * (-3.0 / p).sqrt()).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        for j in 0..3 {
            let t = m * (theta - 2.0 * core::f64::consts::PI * j as f64 / 3.0).cos();
            roots.push((cubic.polish(t - shift), false));
        }
    } else if rel < -1e-12 {
        let s = (0.25 * q * q + p * p * p / 27.0).sqrt();
        let u = (-0.5 * q - q.signum() * s).cbrt();
        let t = if u != 0.0 { u - p / (3.0 * u) } else { 0.0 };
        roots.push((cubic.polish(t - shift), false));
    } else {
        roots = bracketed_roots(&cubic, b2 / (k * k));
    }
    roots.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(core::cmp::Ordering::Equal));
    roots
}

/// Root isolation on the monotone pieces of the cubic; used where the
/// closed form is ill-conditioned (discriminant near zero).
fn bracketed_roots(cubic: &Cubic, n_max: f64) -> Vec<(f64, bool)> {
    let (a, b, c) = (3.0 * cubic.c[3], 2.0 * cubic.c[2], cubic.c[1]);
    let dd = b * b - 4.0 * a * c;
    let mut knots = alloc::vec![0.0];
    if dd >= 0.0 {
        let r = dd.sqrt();
        let mut crit = [(-b - r) / (2.0 * a), (-b + r) / (2.0 * a)];
        crit.sort_by(|x, y| x.partial_cmp(y).unwrap());
        for x in crit {
            if x > 0.0 && x < n_max {
                knots.push(x);
            }
        }
    }
    knots.push(n_max * (1.0 + 1e-12) + 1e-300);
    let tol = 1e-13 * (-cubic.c[0]);
    let mut out: Vec<(f64, bool)> = Vec::new();
    // Double roots sit on interior knots (critical points).
    for &x in &knots[1..knots.len() - 1] {
        if cubic.eval(x).abs() <= tol {
            out.push((x, true));
        }
    }
    for w in knots.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let (flo, fhi) = (cubic.eval(lo), cubic.eval(hi));
        let near_double = |x: f64| out.iter().any(|&(r, dbl)| dbl && (r - x).abs() <= 1e-9 * r.max(1.0));
        if flo.abs() <= tol && near_double(lo) || fhi.abs() <= tol && near_double(hi) {
            continue;
        }
        if (flo < 0.0) != (fhi < 0.0) {
            out.push((cubic.bisect(lo, hi), false));
        }
    }
    out
}

/// Stationary mean-field branches sorted by excitation |α|².
pub fn steady_states(params: &ModelParams) -> Result<Vec<SteadyBranch>> {
    params.validate()?;
    Ok(excitation_roots(params)
        .into_iter()
        .map(|(n, deg)| make_branch(n, deg, params))
        .collect())
}

/// The three inequalities for three stationary solutions.
pub fn bistable(params: &ModelParams) -> Result<bool> {
    params.validate()?;
    if params.chi == 0.0 {
        return Err(Error::param("chi", "bistability test needs chi > 0"));
    }
    Ok(bistability_margins(params).iter().all(|m| *m > 0.0))
}

/// Signed margins of the three bistability inequalities (all positive
/// inside the domain): −χ(Δω+χ), |(Δω+χ)/(κ/2)| − √3, and
/// [1 − 3r²]³ − [27χβ²/(Δω+χ)³ + 1 + 9r²]² with r = (κ/2)/(Δω+χ).
pub fn bistability_margins(params: &ModelParams) -> [f64; 3] {
    let d = params.shifted_detuning();
    let k = 0.5 * params.kappa;
    let m1 = -params.chi * d;
    let m2 = (d / k).abs() - 3f64.sqrt();
    let r = k / d;
    let lhs = 27.0 * params.chi * params.drive * params.drive / (d * d * d) + 1.0 + 9.0 * r * r;
    let rhs = 1.0 - 3.0 * r * r;
    let m3 = rhs * rhs * rhs - lhs * lhs;
    [m1, m2, m3]
}

pub fn reduced_coords(params: &ModelParams) -> Result<ReducedCoords> {
    params.validate()?;
    let d = params.shifted_detuning();
    if d == 0.0 {
        return Err(Error::param("detuning", "detuning + chi must be nonzero"));
    }
    if params.drive == 0.0 {
        return Err(Error::param("drive", "drive must be nonzero"));
    }
    if params.chi == 0.0 {
        return Err(Error::param("chi", "chi must be positive"));
    }
    let k = 0.5 * params.kappa;
    Ok(ReducedCoords {
        x: k / d,
        y: k * k * k / (params.drive * params.drive * params.chi),
    })
}

/// A representative parameter set with the given reduced coordinates
/// (κ/2 = 1, χ = 1, β < 0).
pub fn params_from_reduced(coords: ReducedCoords) -> Result<ModelParams> {
    if coords.x == 0.0 || !(coords.y > 0.0) {
        return Err(Error::param("reduced", "need x != 0 and y > 0"));
    }
    let d = 1.0 / coords.x;
    ModelParams::new(d - 1.0, -(1.0 / coords.y).sqrt(), 1.0, 2.0)
}

/// Detuning interval [lo, hi] of the bistable domain at fixed β, χ, κ, or
/// `None` when no detuning is bistable.
pub fn bistable_window(params: &ModelParams) -> Result<Option<(f64, f64)>> {
    params.validate()?;
    if params.chi == 0.0 || params.drive == 0.0 {
        return Ok(None);
    }
    let k = 0.5 * params.kappa;
    let chi = params.chi;
    let inside = |d: f64| bistability_margins(&params.with_detuning(d - chi)).iter().all(|m| *m > 0.0);
    let d_hi = -(3f64.sqrt()) * k;
    let reach = (27.0 * chi * params.drive * params.drive).cbrt();
    let d_lo = -(3.0 * reach + 10.0 * k);
    let samples = 4000;
    let mut first = None;
    let mut last = None;
    for i in 0..=samples {
        let d = d_lo + (d_hi - d_lo) * i as f64 / samples as f64;
        if inside(d) {
            if first.is_none() {
                first = Some(i);
            }
            last = Some(i);
        }
    }
    let (Some(i0), Some(i1)) = (first, last) else {
        return Ok(None);
    };
    let grid = |i: usize| d_lo + (d_hi - d_lo) * i as f64 / samples as f64;
    let refine = |mut a: f64, mut b: f64| {
        // `a` is outside, `b` inside
        for _ in 0..100 {
            let m = 0.5 * (a + b);
            if inside(m) {
                b = m;
            } else {
                a = m;
            }
        }
        b
    };
    let lo = if i0 == 0 { grid(0) } else { refine(grid(i0 - 1), grid(i0)) };
    let hi = if i1 == samples { grid(samples) } else { refine(grid(i1 + 1), grid(i1)) };
    Ok(Some((lo - chi, hi - chi)))
}

/// Integrates the mean-field equation with classic RK4.
pub fn integrate_mean_field(alpha0: Complex64, params: &ModelParams, duration: f64, dt: f64) -> Complex64 {
    let steps = (duration / dt).ceil().max(0.0) as usize;
    if steps == 0 {
        return alpha0;
    }
    let h = duration / steps as f64;
    let mut a = alpha0;
    for _ in 0..steps {
        let k1 = mean_field_rhs(a, params);
        let k2 = mean_field_rhs(a + 0.5 * h * k1, params);
        let k3 = mean_field_rhs(a + 0.5 * h * k2, params);
        let k4 = mean_field_rhs(a + h * k3, params);
        a += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn reference() -> ModelParams {
        ModelParams::new(-5.0, -7.0, 0.05, 1.5).unwrap()
    }

    /// Independent root oracle: dense sign-change scan plus bisection.
    fn scan_roots(p: &ModelParams) -> Vec<f64> {
        let k = 0.5 * p.kappa;
        let top = 4.0 * p.drive * p.drive / (k * k);
        let m = 200_000;
        let f = |n: f64| excitation_residual(n, p);
        let mut out = Vec::new();
        let mut prev = f(0.0);
        for i in 1..=m {
            let x = top * i as f64 / m as f64;
            let fx = f(x);
            if (fx < 0.0) != (prev < 0.0) {
                let (mut lo, mut hi) = (top * (i - 1) as f64 / m as f64, x);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if (f(mid) < 0.0) == (f(lo) < 0.0) {
                        lo = mid
                    } else {
                        hi = mid
                    }
                }
                out.push(0.5 * (lo + hi));
            }
            prev = fx;
        }
        out
    }

    #[test]
    fn rhs_examples() {
        let p = reference();
        assert_eq!(mean_field_rhs(Complex64::new(0.0, 0.0), &p), Complex64::new(0.0, 7.0));
        let lin = ModelParams::new(0.8, 0.0, 0.0, 1.5).unwrap();
        let r = mean_field_rhs(Complex64::new(1.0, 0.0), &lin);
        assert_abs_diff_eq!(r.re, -0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(r.im, -0.8, epsilon = 1e-15);
    }

    #[test]
    fn linear_oscillator_single_lorentzian_root() {
        let p = ModelParams::new(0.7, 1.3, 0.0, 1.1).unwrap();
        let b = steady_states(&p).unwrap();
        assert_eq!(b.len(), 1);
        let expect = 1.3f64.powi(2) / (0.55f64.powi(2) + 0.49);
        assert_abs_diff_eq!(b[0].excitation, expect, epsilon = 1e-13);
        assert!(b[0].stable);
    }

    #[test]
    fn zero_drive_single_vacuum_branch() {
        let p = ModelParams::new(-5.0, 0.0, 0.05, 1.5).unwrap();
        let b = steady_states(&p).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(b[0].alpha, Complex64::new(0.0, 0.0));
        assert!(b[0].stable);
    }

    #[test]
    fn reference_point_has_three_branches_middle_unstable() {
        let b = steady_states(&reference()).unwrap();
        assert_eq!(b.len(), 3);
        assert!(b[0].stable && !b[1].stable && b[2].stable);
        assert!(b[0].excitation < b[1].excitation && b[1].excitation < b[2].excitation);
    }

    #[test]
    fn roots_agree_with_scan_oracle() {
        for p in [
            reference(),
            reference().with_detuning(-3.2),
            reference().with_detuning(-8.7),
            reference().with_detuning(-1.0),
            ModelParams::new(-3.8, -3.5, 0.2, 1.5).unwrap(),
        ] {
            let b = steady_states(&p).unwrap();
            let scan = scan_roots(&p);
            assert_eq!(b.len(), scan.len(), "root count at {p:?}");
            for (br, s) in b.iter().zip(&scan) {
                assert!((br.excitation - s).abs() < 1e-8 * s.max(1.0));
                let res = excitation_residual(br.excitation, &p).abs();
                assert!(res < 1e-9 * p.drive * p.drive);
                assert!(mean_field_rhs(br.alpha, &p).norm() < 1e-10);
                assert_abs_diff_eq!(br.excitation, br.alpha.norm_sqr(), epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn imaginary_part_follows_damping_relation() {
        let p = reference();
        for br in steady_states(&p).unwrap() {
            let ratio = br.alpha.im / br.excitation;
            assert_abs_diff_eq!(ratio, -p.kappa / (2.0 * p.drive), epsilon = 1e-12);
        }
    }

    #[test]
    fn bistable_examples() {
        assert!(bistable(&reference()).unwrap());
        assert!(!bistable(&reference().with_detuning(5.0)).unwrap());
        assert!(bistable(&ModelParams::new(-5.0, -7.0, 0.0, 1.5).unwrap()).is_err());
    }

    #[test]
    fn reduced_coords_examples() {
        let rc = reduced_coords(&reference()).unwrap();
        assert_abs_diff_eq!(rc.x, 0.75 / -4.95, epsilon = 1e-12);
        assert_abs_diff_eq!(rc.y, 0.421875 / (49.0 * 0.05), epsilon = 1e-12);
        assert_abs_diff_eq!(rc.x, -0.151515, epsilon = 1e-6);
        assert_abs_diff_eq!(rc.y, 0.172194, epsilon = 1e-6);
        assert!(reduced_coords(&reference().with_detuning(-0.05)).is_err());
    }

    #[test]
    fn reduced_roundtrip() {
        let rc = reduced_coords(&reference()).unwrap();
        let q = params_from_reduced(rc).unwrap();
        let back = reduced_coords(&q).unwrap();
        assert_abs_diff_eq!(rc.x, back.x, epsilon = 1e-12);
        assert_abs_diff_eq!(rc.y, back.y, epsilon = 1e-12);
        assert!(bistable(&q).unwrap());
    }

    #[test]
    fn window_contains_reference_detuning() {
        let (lo, hi) = bistable_window(&reference()).unwrap().unwrap();
        assert!(lo < -5.0 && -5.0 < hi);
        assert!(steady_states(&reference().with_detuning(lo + 1e-6)).unwrap().len() == 3);
        assert!(steady_states(&reference().with_detuning(hi - 1e-6)).unwrap().len() == 3);
        assert!(steady_states(&reference().with_detuning(lo - 1e-6)).unwrap().len() == 1);
        assert!(steady_states(&reference().with_detuning(hi + 1e-6)).unwrap().len() == 1);
    }

    #[test]
    fn edge_of_window_reports_degenerate_pair() {
        let (_, hi) = bistable_window(&reference()).unwrap().unwrap();
        let b = steady_states(&reference().with_detuning(hi)).unwrap();
        assert!(b.len() == 2 || b.len() == 3, "got {} branches", b.len());
        for br in &b {
            let p = reference().with_detuning(hi);
            let res = excitation_residual(br.excitation, &p).abs();
            assert!(res < 1e-9 * 49.0, "{br:?} residual {res}");
        }
    }

    #[test]
    fn mean_field_flow_relaxes_to_stable_branch() {
        let p = reference();
        let b = steady_states(&p).unwrap();
        let a = integrate_mean_field(b[2].alpha + Complex64::new(0.3, -0.2), &p, 40.0, 1e-3);
        assert!((a - b[2].alpha).norm() < 1e-6);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(200))]

            #[test]
            fn three_branches_iff_bistable(dw in -15.0f64..5.0, beta in -15.0f64..-0.1) {
                let p = ModelParams::new(dw, beta, 0.05, 1.5).unwrap();
                let margins = bistability_margins(&p);
                prop_assume!(margins.iter().all(|m| m.abs() > 1e-6));
                let count = steady_states(&p).unwrap().len();
                prop_assert_eq!(count == 3, bistable(&p).unwrap());
            }

            #[test]
            fn equal_reduced_coords_equal_verdict(dw in -12.0f64..2.0, beta in -10.0f64..-0.5, s in 0.2f64..5.0) {
                let p = ModelParams::new(dw, beta, 0.05, 1.5).unwrap();
                prop_assume!(p.shifted_detuning().abs() > 1e-6);
                prop_assume!(bistability_margins(&p).iter().all(|m| m.abs() > 1e-6));
                let rc = reduced_coords(&p).unwrap();
                // same (x, y) with a different damping scale
                let k2 = 0.75 * s;
                let d2 = k2 / rc.x;
                let chi2 = 0.3;
                let beta2 = -(k2 * k2 * k2 / (rc.y * chi2)).sqrt();
                let q = ModelParams::new(d2 - chi2, beta2, chi2, 2.0 * k2).unwrap();
                prop_assume!(bistability_margins(&q).iter().all(|m| m.abs() > 1e-6));
                prop_assert_eq!(bistable(&p).unwrap(), bistable(&q).unwrap());
            }

            #[test]
            fn middle_branch_is_the_unstable_one(dw in -9.0f64..-3.0, beta in -9.0f64..-5.0) {
                let p = ModelParams::new(dw, beta, 0.05, 1.5).unwrap();
                let b = steady_states(&p).unwrap();
                for br in &b {
                    prop_assert!(mean_field_rhs(br.alpha, &p).norm() < 1e-10 * (1.0 + br.alpha.norm()));
                }
                if b.len() == 3 && !b.iter().any(|x| x.degenerate) {
                    prop_assert!(b[0].stable && !b[1].stable && b[2].stable);
                }
            }
        }
    }
}
