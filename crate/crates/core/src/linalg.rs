//! Thin wrappers over the dense eigensolvers.

use faer::linalg::solvers::Solve;
use faer::{Mat, Side};
use num_complex::Complex64;

/// Eigenvalues and right eigenvectors (columns, unit 2-norm) of a general complex matrix.
pub fn complex_eigen(m: &Mat<Complex64>) -> Option<(Vec<Complex64>, Mat<Complex64>)> {
    let evd = m.eigen().ok()?;
    let n = m.nrows();
    let values: Vec<Complex64> = (0..n).map(|i| evd.S()[i]).collect();
    let mut vectors = evd.U().to_owned();
    for j in 0..n {
        let norm = (0..n).map(|i| vectors[(i, j)].norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return None;
        }
        for i in 0..n {
            vectors[(i, j)] /= norm;
        }
    }
    if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return None;
    }
    Some((values, vectors))
}

/// Eigenvalues (ascending) and orthonormal eigenvectors of a real symmetric matrix.
pub fn symmetric_eigen(m: &Mat<f64>) -> Option<(Vec<f64>, Mat<f64>)> {
    let evd = m.self_adjoint_eigen(Side::Lower).ok()?;
    let n = m.nrows();
    let values: Vec<f64> = (0..n).map(|i| evd.S()[i]).collect();
    Some((values, evd.U().to_owned()))
}

/// Solves `m x = rhs` with partial-pivoting LU.
pub fn solve(m: &Mat<Complex64>, rhs: &[Complex64]) -> Vec<Complex64> {
    let b = Mat::<Complex64>::from_fn(rhs.len(), 1, |i, _| rhs[i]);
    let x = m.partial_piv_lu().solve(&b);
    (0..rhs.len()).map(|i| x[(i, 0)]).collect()
}

/// Determinant by Gaussian elimination with partial pivoting; `1` for an empty matrix.
pub fn determinant(m: &Mat<Complex64>) -> Complex64 {
    let n = m.nrows();
    let mut a = m.to_owned();
    let mut det = Complex64::new(1.0, 0.0);
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[(i, k)].norm().total_cmp(&a[(j, k)].norm())).expect("k < n");
        if a[(p, k)].norm() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if p != k {
            for j in 0..n {
                let t = a[(k, j)];
                a[(k, j)] = a[(p, j)];
                a[(p, j)] = t;
            }
            det = -det;
        }
        let pivot = a[(k, k)];
        det *= pivot;
        for i in k + 1..n {
            let f = a[(i, k)] / pivot;
            for j in k..n {
                let t = a[(k, j)];
                a[(i, j)] -= f * t;
            }
        }
    }
    det
}

pub fn column(m: &Mat<Complex64>, j: usize) -> Vec<Complex64> {
    (0..m.nrows()).map(|i| m[(i, j)]).collect()
}

/// Bilinear (non-conjugating) product `Σ aᵢ bᵢ`.
pub fn bilinear(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Hermitian product `Σ conj(aᵢ) bᵢ`.
pub fn hermitian(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}
