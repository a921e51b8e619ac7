//! Exact steady-state moments of the driven damped Kerr oscillator via the
//! ₀F₂ series. Gamma-function ratios are reduced to Pochhammer symbols so
//! nothing overflows for |c| in the hundreds.

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Series parameters of the steady state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperParams {
    pub c: Complex64,
    pub z: f64,
}

impl HyperParams {
    pub fn from_model(params: &ModelParams) -> Result<Self> {
        params.validate()?;
        if params.chi <= 0.0 {
            return Err(Error::param("chi", "exact steady state needs chi > 0"));
        }
        let chi = params.chi;
        Ok(Self {
            c: Complex64::new(params.shifted_detuning() / chi, -params.kappa / (2.0 * chi)),
            z: 2.0 * (params.drive / chi).powi(2),
        })
    }
}

/// A complex number times 2^exp2, for sums that leave the f64 range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaled {
    pub mantissa: Complex64,
    pub exp2: i64,
}

impl Scaled {
    pub fn to_complex(self) -> Complex64 {
        self.mantissa * pow2(self.exp2)
    }

    /// self / other without leaving the scaled representation early.
    pub fn ratio(self, other: Scaled) -> Complex64 {
        (self.mantissa / other.mantissa) * pow2(self.exp2 - other.exp2)
    }
}

fn pow2(e: i64) -> f64 {
    // split so each factor stays finite
    let e = e.clamp(-2200, 2200) as i32;
    let h = e / 2;
    2f64.powi(h) * 2f64.powi(e - h)
}

const RESCALE: i64 = 600;
const TERM_CAP: usize = 1_000_000;

fn check_pole(c: Complex64) -> Result<()> {
    if c.im == 0.0 && c.re <= 0.0 && c.re == c.re.round() {
        return Err(Error::PochhammerPole(c));
    }
    Ok(())
}

/// Neumaier-compensated complex accumulator.
#[derive(Default, Clone, Copy)]
struct Accum {
    sum: Complex64,
    comp: Complex64,
}

impl Accum {
    fn add(&mut self, x: Complex64) {
        self.sum.re = two_sum(self.sum.re, x.re, &mut self.comp.re);
        self.sum.im = two_sum(self.sum.im, x.im, &mut self.comp.im);
    }

    fn value(&self) -> Complex64 {
        self.sum + self.comp
    }

    fn scale(&mut self, f: f64) {
        self.sum *= f;
        self.comp *= f;
    }
}

fn two_sum(s: f64, x: f64, comp: &mut f64) -> f64 {
    let t = s + x;
    if s.abs() >= x.abs() {
        *comp += (s - t) + x;
    } else {
        *comp += (x - t) + s;
    }
    t
}

/// ₀F₂(;c,d;z) in scaled form.
pub fn hyper0f2_scaled(c: Complex64, d: Complex64, z: Complex64) -> Result<Scaled> {
    check_pole(c)?;
    check_pole(d)?;
    let mut term = Complex64::new(1.0, 0.0);
    let mut term_exp: i64 = 0;
    let mut acc = Accum::default();
    acc.add(term);
    let mut sum_exp: i64 = 0;
    // Terms may grow, dip and grow again while n < −Re c, −Re d.
    let n_min = (-c.re).max(-d.re).max(0.0);
    let mut small_run = 0;
    let mut prev_ratio = f64::INFINITY;
    for n in 0..TERM_CAP {
        let nf = n as f64;
        let r = z / ((c + nf) * (d + nf) * (nf + 1.0));
        term *= r;
        if term == Complex64::new(0.0, 0.0) {
            return Ok(Scaled { mantissa: acc.value(), exp2: sum_exp });
        }
        let mag = term.norm();
        if mag > pow2(RESCALE) || mag < pow2(-RESCALE) {
            let shift = mag.log2().round() as i64;
            term *= pow2(-shift);
            term_exp += shift;
        }
        if term_exp > sum_exp {
            acc.scale(pow2(sum_exp - term_exp));
            sum_exp = term_exp;
        }
        let aligned = term * pow2(term_exp - sum_exp);
        acc.add(aligned);
        if acc.sum.norm() > pow2(RESCALE) {
            let shift = acc.sum.norm().log2().round() as i64;
            acc.scale(pow2(-shift));
            sum_exp += shift;
        }
        let ratio = r.norm();
        let past_peaks = nf > n_min && ratio < 1.0 && ratio <= prev_ratio;
        prev_ratio = ratio;
        if past_peaks && aligned.norm() < 1e-16 * acc.value().norm() {
            small_run += 1;
            if small_run >= 3 {
                return Ok(Scaled { mantissa: acc.value(), exp2: sum_exp });
            }
        } else {
            small_run = 0;
        }
    }
    Err(Error::NoConvergence(TERM_CAP))
}

/// ₀F₂(;c,d;z) = Σₙ zⁿ/(n! (c)ₙ (d)ₙ).
pub fn hyper0f2(c: Complex64, d: Complex64, z: Complex64) -> Result<Complex64> {
    hyper0f2_scaled(c, d, z).map(Scaled::to_complex)
}

/// Rising factorial (c)ₙ.
pub fn pochhammer(c: Complex64, n: u32) -> Complex64 {
    (0..n).fold(Complex64::new(1.0, 0.0), |acc, k| acc * (c + k as f64))
}

/// Practical cap on moment orders.
pub const MAX_MOMENT_ORDER: u32 = 32;

/// ⟨(a†)ⁿ aᵐ⟩ in the exact steady state.
pub fn steady_moment(n: u32, m: u32, params: &ModelParams) -> Result<Complex64> {
    if n > MAX_MOMENT_ORDER || m > MAX_MOMENT_ORDER {
        return Err(Error::param("order", "moment order above 32"));
    }
    let hp = HyperParams::from_model(params)?;
    if n == 0 && m == 0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    if params.drive == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let (c, cc) = (hp.c, hp.c.conj());
    let z = Complex64::new(hp.z, 0.0);
    let base = hyper0f2_scaled(c, cc, z)?;
    let shifted = hyper0f2_scaled(c + m as f64, cc + n as f64, z)?;
    // (−β/χ) carries the sign of ⟨a⟩; its modulus is √(z/2).
    let lead = (-params.drive / params.chi).powi((n + m) as i32);
    Ok(shifted.ratio(base) * lead / (pochhammer(c, m) * pochhammer(cc, n)))
}

/// ⟨a†a⟩ = β²/((Δω+χ)²+(κ/2)²) · F(c+1,c*+1)/F(c,c*).
pub fn mean_excitation(params: &ModelParams) -> Result<f64> {
    let hp = HyperParams::from_model(params)?;
    if params.drive == 0.0 {
        return Ok(0.0);
    }
    let (c, cc) = (hp.c, hp.c.conj());
    let z = Complex64::new(hp.z, 0.0);
    let base = hyper0f2_scaled(c, cc, z)?;
    let shifted = hyper0f2_scaled(c + 1.0, cc + 1.0, z)?;
    let k = 0.5 * params.kappa;
    let d = params.shifted_detuning();
    let pre = params.drive * params.drive / (d * d + k * k);
    Ok(pre * shifted.ratio(base).re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_argument_is_one() {
        assert_eq!(hyper0f2(c(2.5, 1.0), c(-0.5, 3.0), c(0.0, 0.0)).unwrap(), c(1.0, 0.0));
    }

    #[test]
    fn unit_parameters_match_extended_precision_oracle() {
        // Σ 1/(n!)³, evaluated to 30 digits in extended precision.
        let v = hyper0f2(c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)).unwrap();
        assert_relative_eq!(v.re, 2.129_702_548_983_306_4, max_relative = 1e-15);
        assert_eq!(v.im, 0.0);
        let partial: f64 = (0..20u32)
            .map(|n| 1.0 / (1..=n).map(f64::from).product::<f64>().powi(3))
            .sum();
        assert_relative_eq!(v.re, partial, max_relative = 1e-15);
    }

    #[test]
    fn poles_rejected() {
        assert!(matches!(
            hyper0f2(c(-2.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)),
            Err(Error::PochhammerPole(_))
        ));
        assert!(hyper0f2(c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)).is_err());
        assert!(hyper0f2(c(-2.0, 1e-3), c(1.0, 0.0), c(1.0, 0.0)).is_ok());
    }

    #[test]
    fn conjugate_pair_is_real() {
        for (cc, z) in [(c(3.0, -1.5), 10.0), (c(-99.0, -15.0), 39200.0), (c(-20.5, -2.0), 900.0)] {
            let v = hyper0f2_scaled(cc, cc.conj(), c(z, 0.0)).unwrap();
            assert!(v.mantissa.im.abs() < 1e-13 * v.mantissa.re.abs());
        }
    }

    #[test]
    fn large_argument_ratio_matches_mpmath() {
        // mpmath at 50 digits: F(c+1,c*+1,z)/F(c,c*,z) for c = −99 − 15i, z = 39200.
        let p = ModelParams::new(-5.0, -7.0, 0.05, 1.5).unwrap();
        let n = mean_excitation(&p).unwrap();
        assert_relative_eq!(n, 2.133_827_746, max_relative = 1e-9);
        let a = steady_moment(0, 1, &p).unwrap();
        assert_relative_eq!(a.re, -1.442_373_233, max_relative = 1e-9);
        assert_relative_eq!(a.im, 0.228_624_401_4, max_relative = 1e-9);
    }

    #[test]
    fn hyper_params_from_model() {
        let p = ModelParams::new(-5.0, -7.0, 0.05, 1.5).unwrap();
        let hp = HyperParams::from_model(&p).unwrap();
        assert_relative_eq!(hp.c.re, -99.0, max_relative = 1e-12);
        assert_relative_eq!(hp.c.im, -15.0, max_relative = 1e-12);
        assert_relative_eq!(hp.z, 39200.0, max_relative = 1e-12);
        assert!(HyperParams::from_model(&p.with_chi(0.0)).is_err());
    }

    #[test]
    fn trivial_moments() {
        let p = ModelParams::new(-1.0, 0.0, 0.5, 1.0).unwrap();
        assert_eq!(steady_moment(0, 0, &p).unwrap(), c(1.0, 0.0));
        assert_eq!(steady_moment(1, 1, &p).unwrap(), c(0.0, 0.0));
        assert_eq!(steady_moment(0, 2, &p).unwrap(), c(0.0, 0.0));
        assert_eq!(mean_excitation(&p).unwrap(), 0.0);
    }

    #[test]
    fn low_excitation_oracle() {
        // Liouvillian null vector at dim 40, computed independently.
        let p = ModelParams::new(-1.0, 0.5, 0.5, 1.0).unwrap();
        assert_relative_eq!(mean_excitation(&p).unwrap(), 0.614_626_840_336_639, max_relative = 1e-10);
    }

    #[test]
    fn mean_excitation_equals_first_moment() {
        for p in [
            ModelParams::new(-1.0, 0.5, 0.5, 1.0).unwrap(),
            ModelParams::new(-5.0, -7.0, 0.05, 1.5).unwrap(),
            ModelParams::new(2.0, 1.5, 0.3, 0.7).unwrap(),
        ] {
            let m = steady_moment(1, 1, &p).unwrap();
            assert_relative_eq!(m.re, mean_excitation(&p).unwrap(), max_relative = 1e-13);
            assert!(m.im.abs() < 1e-13 * m.re);
        }
    }

    #[test]
    fn coherent_amplitude_sign_follows_drive() {
        // Weak nonlinearity: ⟨a⟩ approaches the linear response −iβ/(iD + κ/2).
        let p = ModelParams::new(-1.0, 0.8, 1e-4, 1.0).unwrap();
        let a = steady_moment(0, 1, &p).unwrap();
        let lin = -Complex64::i() * 0.8 / (Complex64::i() * (-1.0 + 1e-4) + 0.5);
        assert!((a - lin).norm() < 1e-3);
        let pm = p.with_drive(-0.8);
        assert!((steady_moment(0, 1, &pm).unwrap() + lin).norm() < 1e-3);
    }

    #[test]
    fn reference_curve_has_single_peak() {
        let base = ModelParams::new(0.0, -7.0, 0.05, 1.5).unwrap();
        let grid: Vec<f64> = (0..=240).map(|i| -12.0 + 0.05 * i as f64).collect();
        let vals: Vec<f64> = grid
            .iter()
            .map(|&dw| mean_excitation(&base.with_detuning(dw)).unwrap())
            .collect();
        let mut sign_changes = 0;
        for w in vals.windows(3) {
            if (w[1] - w[0]) * (w[2] - w[1]) < 0.0 {
                sign_changes += 1;
            }
        }
        assert_eq!(sign_changes, 1);
        for w in vals.windows(2) {
            assert!(((w[1] - w[0]) / 0.05).abs() < 500.0);
        }
    }

    mod props {
        use super::*;
        use nalgebra::DMatrix;
        use proptest::prelude::*;

        fn params() -> impl Strategy<Value = ModelParams> {
            (-4.0f64..4.0, -2.0f64..2.0, 0.05f64..1.0, 0.2f64..3.0)
                .prop_map(|(dw, b, chi, k)| ModelParams::new(dw, b, chi, k).unwrap())
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn conjugation_symmetry(p in params()) {
                for n in 0..=4 {
                    for m in 0..=4 {
                        let a = steady_moment(n, m, &p).unwrap();
                        let b = steady_moment(m, n, &p).unwrap();
                        prop_assert!((a - b.conj()).norm() <= 1e-12 * a.norm().max(1e-300));
                    }
                }
            }

            #[test]
            fn moment_matrix_is_psd(p in params()) {
                let m = DMatrix::from_fn(4, 4, |i, j| steady_moment(i as u32, j as u32, &p).unwrap());
                let ev = crate::linalg::hermitian_eigenvalues(&m);
                let scale = ev.iter().fold(1.0f64, |a, b| a.max(b.abs()));
                prop_assert!(ev[0] >= -1e-10 * scale, "eigenvalues {:?}", ev);
            }
        }
    }
}
