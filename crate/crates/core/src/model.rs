//! The driven damped Kerr oscillator in the frame rotating with the drive.
//!
//! H = Δω a†a + β (a† + a) + χ (a†a)², damped through the single Lindblad
//! channel L = √κ a (zero-temperature bath).

use alloc::format;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::hilbert::{annihilation, FockDim, Operator};
use crate::linalg::CMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Δω, oscillator frequency minus drive frequency.
    pub detuning: f64,
    /// β, real drive amplitude (a complex drive is only a phase-space rotation).
    pub drive: f64,
    /// χ ≥ 0, Kerr anharmonicity.
    pub chi: f64,
    /// κ > 0, energy damping rate.
    pub kappa: f64,
}

impl ModelParams {
    pub fn new(detuning: f64, drive: f64, chi: f64, kappa: f64) -> Result<Self> {
        let p = ModelParams {
            detuning,
            drive,
            chi,
            kappa,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("detuning", self.detuning),
            ("drive", self.drive),
            ("chi", self.chi),
            ("kappa", self.kappa),
        ] {
            if !v.is_finite() {
                return Err(Error::param(name, format!("must be finite, got {v}")));
            }
        }
        if self.kappa <= 0.0 {
            return Err(Error::param(
                "kappa",
                format!("damping must be positive, got {}", self.kappa),
            ));
        }
        if self.chi < 0.0 {
            return Err(Error::param(
                "chi",
                format!("anharmonicity must be non-negative, got {}", self.chi),
            ));
        }
        Ok(())
    }

    pub fn with_detuning(self, detuning: f64) -> Self {
        ModelParams { detuning, ..self }
    }

    pub fn with_drive(self, drive: f64) -> Self {
        ModelParams { drive, ..self }
    }

    pub fn with_chi(self, chi: f64) -> Self {
        ModelParams { chi, ..self }
    }

    /// Shifted detuning Δω + χ that appears throughout the mean-field theory.
    #[inline]
    pub fn shifted_detuning(&self) -> f64 {
        self.detuning + self.chi
    }

    /// Rescales the excitation scale while keeping κ, Δω + χ and the reduced
    /// coordinates (x, y) fixed: χ → sχ, β → β/√s. Classical excitation
    /// numbers scale as 1/s, so s > 1 moves toward the quantum regime.
    pub fn rescaled(self, s: f64) -> Result<Self> {
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::param("scale", format!("must be positive, got {s}")));
        }
        let shifted = self.shifted_detuning();
        let chi = self.chi * s;
        ModelParams::new(shifted - chi, self.drive / s.sqrt(), chi, self.kappa)
    }
}

/// Dense rotating-frame Hamiltonian on `dim` Fock levels.
pub fn hamiltonian(params: &ModelParams, dim: FockDim) -> Operator {
    let d = dim.get();
    let mut m = CMatrix::zeros(d, d);
    for n in 0..d {
        let nf = n as f64;
        m[(n, n)] = Complex64::new(params.detuning * nf + params.chi * nf * nf, 0.0);
        if n + 1 < d {
            let off = Complex64::new(params.drive * (nf + 1.0).sqrt(), 0.0);
            m[(n, n + 1)] = off;
            m[(n + 1, n)] = off;
        }
    }
    Operator::from_matrix(m).expect("square by construction")
}

/// L = √κ a.
pub fn lindblad(params: &ModelParams, dim: FockDim) -> Operator {
    annihilation(dim).scale_real(params.kappa.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::number;

    fn dim(d: usize) -> FockDim {
        FockDim::new(d).unwrap()
    }

    #[test]
    fn rejects_bad_params() {
        assert!(ModelParams::new(0.0, 1.0, 0.1, 0.0).is_err());
        assert!(ModelParams::new(0.0, 1.0, -1.0, 1.0).is_err());
        assert!(ModelParams::new(f64::NAN, 1.0, 0.1, 1.0).is_err());
        assert!(ModelParams::new(-5.0, -7.0, 0.05, 1.5).is_ok());
    }

    #[test]
    fn hamiltonian_number_operator_case() {
        let p = ModelParams::new(1.0, 0.0, 0.0, 1.0).unwrap();
        assert_eq!(hamiltonian(&p, dim(2)), number(dim(2)));
    }

    #[test]
    fn hamiltonian_drive_entry() {
        let p = ModelParams::new(0.3, 2.5, 0.1, 1.0).unwrap();
        let h = hamiltonian(&p, dim(4));
        assert_eq!(h.entry(1, 0), Complex64::new(2.5, 0.0));
        assert_eq!(h.entry(0, 1), Complex64::new(2.5, 0.0));
    }

    #[test]
    fn hamiltonian_diagonal_entry() {
        let p = ModelParams::new(-5.0, -7.0, 0.05, 1.5).unwrap();
        let h = hamiltonian(&p, dim(12));
        assert!((h.entry(10, 10).re - (-45.0)).abs() < 1e-12);
    }

    #[test]
    fn hamiltonian_matches_operator_algebra() {
        let p = ModelParams::new(-1.3, 0.7, 0.4, 1.0).unwrap();
        let d = dim(9);
        let a = annihilation(d);
        let ad = a.adjoint();
        let n = &ad * &a;
        let expect = &(&(&n.scale_real(p.detuning) + &(&ad + &a).scale_real(p.drive))
            + &(&n * &n).scale_real(p.chi))
            + &Operator::zeros(d);
        let h = hamiltonian(&p, d);
        for i in 0..9 {
            for j in 0..9 {
                assert!((h.entry(i, j) - expect.entry(i, j)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn hamiltonian_structure() {
        let p = ModelParams::new(-2.0, -1.5, 0.2, 1.0).unwrap();
        let h = hamiltonian(&p, dim(10));
        assert_eq!(h, h.adjoint());
        for i in 0..10 {
            for j in 0..10 {
                assert_eq!(h.entry(i, j).im, 0.0);
                if i.abs_diff(j) > 1 {
                    assert_eq!(h.entry(i, j), Complex64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn lindblad_examples() {
        let p = ModelParams::new(0.0, 0.0, 0.0, 1.5).unwrap();
        let l = lindblad(&p, dim(2));
        assert_eq!(l.entry(0, 1), Complex64::new(1.5f64.sqrt(), 0.0));
        assert_eq!(l.entry(1, 0), Complex64::new(0.0, 0.0));

        let p1 = ModelParams { kappa: 1.0, ..p };
        assert_eq!(lindblad(&p1, dim(3)), annihilation(dim(3)));

        let p4 = ModelParams { kappa: 4.0, ..p };
        assert_eq!(lindblad(&p4, dim(3)).entry(0, 1), Complex64::new(2.0, 0.0));
    }

    #[test]
    fn rescaling_keeps_shifted_detuning() {
        let p = ModelParams::new(-5.0, -7.0, 0.05, 1.5).unwrap();
        let q = p.rescaled(4.0).unwrap();
        assert!((q.shifted_detuning() - p.shifted_detuning()).abs() < 1e-14);
        assert!((q.chi - 0.2).abs() < 1e-15);
        assert!((q.drive + 3.5).abs() < 1e-15);
    }
}
