//! Replayable complex Wiener increments.
//!
//! Each trajectory owns a ChaCha8 keystream; the increment for step k is
//! read from a fixed word offset, so (seed, counter) alone determines it.

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

const WORDS_PER_DRAW: u128 = 4;

/// A seeded, seekable source of Gaussian increments.
#[derive(Debug, Clone)]
pub struct NoiseStream {
    seed: u64,
    counter: u64,
    rng: ChaCha8Rng,
}

impl PartialEq for NoiseStream {
    fn eq(&self, other: &Self) -> bool {
        self.seed == other.seed && self.counter == other.counter
    }
}

impl NoiseStream {
    pub fn new(seed: u64) -> Self {
        Self::at(seed, 0)
    }

    /// Stream positioned at draw `counter`.
    pub fn at(seed: u64, counter: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_word_pos(counter as u128 * WORDS_PER_DRAW);
        NoiseStream { seed, counter, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn counter(&self) -> u64 {
        self.counter
    }

    /// Two independent standard normals (Box–Muller); advances the counter.
    pub fn gaussian_pair(&mut self) -> (f64, f64) {
        // u1 in (0, 1] keeps the logarithm finite.
        let u1 = ((self.rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        self.counter += 1;
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (core::f64::consts::TAU * u2).sin_cos();
        (r * c, r * s)
    }
}

/// dξ = (g₁ + i g₂)√(dt/2), so M(dξ) = M(dξ²) = 0 and M(|dξ|²) = dt.
pub fn wiener_increment(stream: &mut NoiseStream, dt: f64) -> Complex64 {
    let (g1, g2) = stream.gaussian_pair();
    Complex64::new(g1, g2) * (0.5 * dt).sqrt()
}

/// Seed for trajectory `index` of an ensemble: the first word of the
/// master seed's ChaCha stream number `index`.
pub fn trajectory_seed(master_seed: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng.next_u64()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    #[test]
    fn replay_from_counter() {
        let mut a = NoiseStream::new(42);
        let draws: Vec<Complex64> = (0..10).map(|_| wiener_increment(&mut a, 0.01)).collect();
        let mut b = NoiseStream::at(42, 7);
        assert_eq!(wiener_increment(&mut b, 0.01), draws[7]);
        assert_eq!(b.counter(), 8);
        let mut c = NoiseStream::new(43);
        assert_ne!(wiener_increment(&mut c, 0.01), draws[0]);
    }

    #[test]
    fn trajectory_seeds_are_distinct_and_stable() {
        let s: Vec<u64> = (0..100).map(|i| trajectory_seed(9, i)).collect();
        let mut sorted = s.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 100);
        assert_eq!(trajectory_seed(9, 17), s[17]);
        assert_ne!(trajectory_seed(10, 17), s[17]);
    }

    #[test]
    fn moments_within_four_sigma() {
        let dt = 0.01;
        let n = 1_000_000;
        let mut st = NoiseStream::new(2024);
        let (mut m1, mut m2, mut m3) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), 0.0);
        for _ in 0..n {
            let x = wiener_increment(&mut st, dt);
            m1 += x;
            m2 += x * x;
            m3 += x.norm_sqr();
        }
        let nf = n as f64;
        let (m1, m2, m3) = (m1 / nf, m2 / nf, m3 / nf);
        assert!(m1.norm() < 4.0 * (dt / nf).sqrt());
        // Var(Re dξ²) = Var(Im dξ²) = dt²/2, Var(|dξ|²) = dt².
        assert!(m2.re.abs() < 4.0 * dt / (2.0 * nf).sqrt());
        assert!(m2.im.abs() < 4.0 * dt / (2.0 * nf).sqrt());
        assert!((m3 - dt).abs() < 4.0 * dt / nf.sqrt());
    }
}
