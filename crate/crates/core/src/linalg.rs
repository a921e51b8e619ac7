//! Dense complex matrix helpers shared by the operator and density-matrix code.

use alloc::vec::Vec;
use nalgebra::DMatrix;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

pub type CMatrix = DMatrix<Complex64>;

/// Induced 1-norm (maximum absolute column sum).
pub fn one_norm(m: &CMatrix) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Matrix exponential by scaling and squaring with a Taylor kernel.
///
/// The scaled matrix has 1-norm at most 1/2, and the series is summed until
/// the next term is below 1e-16 of the partial sum in 1-norm, well inside
/// the 1e-12 accuracy needed by the displacement code.
pub fn expm(m: &CMatrix) -> CMatrix {
    assert!(m.is_square(), "expm of a non-square matrix");
    let n = m.nrows();
    let norm = one_norm(m);
    let mut squarings = 0u32;
    if norm > 0.5 {
        squarings = (norm / 0.5).log2().ceil() as u32;
    }
    let scale = Complex64::new(0.5f64.powi(squarings as i32), 0.0);
    let a = m * scale;

    let mut sum = CMatrix::identity(n, n);
    let mut term = CMatrix::identity(n, n);
    for k in 1..=60u32 {
        term = (&term * &a) * Complex64::new(1.0 / k as f64, 0.0);
        sum += &term;
        if one_norm(&term) <= 1e-16 * one_norm(&sum) {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// Eigenvalues of a Hermitian matrix, ascending. Only the lower triangle is read.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let eig = nalgebra::linalg::SymmetricEigen::new(m.clone());
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
    vals
}

/// Largest entry-wise deviation from Hermiticity.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}
