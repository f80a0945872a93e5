use faer::Mat;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::EffectiveHamiltonian;

/// Below this value of `|φᵀφ|` (for a unit-norm eigenvector) the bilinear
/// normalization is refused and the spectrum is marked defective.
pub const DEFAULT_DEFECT_TOL: f64 = 1e-6;

/// Biorthogonal eigensystem of a complex symmetric `H_eff(E)`.
///
/// Right eigenvectors are stored as columns normalized with the bilinear
/// product, `φ_λᵀ φ_λ′ = δ_λλ′`; the left eigenvectors are their complex
/// conjugates. `a_diag`, `b_matrix` and `phase_rigidity` are the Hermitian
/// overlaps `A_λ = φ_λ†φ_λ`, `B_λλ′ = φ_λ†φ_λ′` and `r_λ = 1/A_λ`.
#[derive(Clone, Debug)]
pub struct ResonanceSpectrum {
    pub energy: f64,
    pub eigenvalues: Vec<Complex64>,
    pub right_eigenvectors: Mat<Complex64>,
    pub a_diag: Vec<f64>,
    pub b_matrix: Mat<Complex64>,
    pub phase_rigidity: Vec<f64>,
    /// Set when some eigenvector has (numerically) vanishing bilinear norm, i.e. the
    /// matrix sits at an exceptional point. Offending vectors keep unit 2-norm.
    pub defective: bool,
}

impl ResonanceSpectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvector(&self, lambda: usize) -> Vec<Complex64> {
        linalg::column(&self.right_eigenvectors, lambda)
    }

    /// `Γ_λ = −2 Im z_λ`.
    pub fn widths(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|z| -2.0 * z.im).collect()
    }

    pub fn positions(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|z| z.re).collect()
    }

    /// `max |φ_λᵀφ_λ′ − δ_λλ′|`.
    pub fn biorthogonality_residual(&self) -> f64 {
        let n = self.len();
        let vecs: Vec<_> = (0..n).map(|l| self.eigenvector(l)).collect();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((linalg::bilinear(&vecs[i], &vecs[j]) - target).norm());
            }
        }
        worst
    }

    /// `max_{λ≠λ′} |B_λλ′ + B_λ′λ|`.
    pub fn antisymmetry_residual(&self) -> f64 {
        let n = self.len();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    worst = worst.max((self.b_matrix[(i, j)] + self.b_matrix[(j, i)]).norm());
                }
            }
        }
        worst
    }

    /// `max |Σ_λ φ_λ φ_λᵀ − I|`, the bilinear completeness relation.
    pub fn closure_residual(&self) -> f64 {
        let n = self.len();
        let u = &self.right_eigenvectors;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let s: Complex64 = (0..n).map(|l| u[(i, l)] * u[(j, l)]).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((s - target).norm());
            }
        }
        worst
    }

    /// `max_λ ‖H φ_λ − z_λ φ_λ‖ / ‖φ_λ‖`.
    pub fn eigen_residual(&self, h: &EffectiveHamiltonian) -> f64 {
        let n = self.len();
        (0..n)
            .map(|l| {
                let phi = self.eigenvector(l);
                let r: Vec<Complex64> = (0..n)
                    .map(|i| (0..n).map(|j| h.matrix[(i, j)] * phi[j]).sum::<Complex64>() - self.eigenvalues[l] * phi[i])
                    .collect();
                linalg::norm(&r) / linalg::norm(&phi)
            })
            .fold(0.0, f64::max)
    }
}

pub fn diagonalize(h: &EffectiveHamiltonian) -> Result<ResonanceSpectrum> {
    diagonalize_with(h, DEFAULT_DEFECT_TOL)
}

pub fn diagonalize_with(h: &EffectiveHamiltonian, defect_tol: f64) -> Result<ResonanceSpectrum> {
    let n = h.size();
    if n == 0 {
        return Err(Error::InvalidInput("empty effective Hamiltonian".into()));
    }
    let failure = |context: &str| Error::NumericalFailure {
        context: context.to_string(),
        frobenius_norm: h.frobenius_norm(),
        max_entry: h.max_entry(),
    };

    let (values, mut vectors) = if h.is_real() {
        let (vals, vecs) = linalg::symmetric_eigen(&h.hermitian_part).ok_or_else(|| failure("real symmetric eigensolver"))?;
        (
            vals.into_iter().map(|v| Complex64::new(v, 0.0)).collect::<Vec<_>>(),
            Mat::<Complex64>::from_fn(n, n, |i, j| Complex64::new(vecs[(i, j)], 0.0)),
        )
    } else {
        linalg::complex_eigen(&h.matrix).ok_or_else(|| failure("complex eigensolver"))?
    };

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].re.total_cmp(&values[b].re).then(values[a].im.total_cmp(&values[b].im)));
    let eigenvalues: Vec<Complex64> = order.iter().map(|&k| values[k]).collect();
    vectors = Mat::from_fn(n, n, |i, j| vectors[(i, order[j])]);

    let scale = h.frobenius_norm().max(1.0);
    orthogonalize_clusters(&eigenvalues, &mut vectors, 1e-12 * scale, defect_tol);

    let mut defective = false;
    let mut rigidity = vec![0.0; n];
    let mut normalized = vec![false; n];
    for l in 0..n {
        let mut phi = linalg::column(&vectors, l);
        let q = linalg::bilinear(&phi, &phi);
        let norm2 = linalg::norm(&phi).powi(2);
        rigidity[l] = q.norm() / norm2;
        if q.norm() < defect_tol * norm2 {
            defective = true;
            continue;
        }
        normalized[l] = true;
        let s = q.sqrt();
        for p in phi.iter_mut() {
            *p /= s;
        }
        fix_sign(&mut phi);
        for i in 0..n {
            vectors[(i, l)] = phi[i];
        }
    }

    let b_matrix = Mat::<Complex64>::from_fn(n, n, |i, j| (0..n).map(|k| vectors[(k, i)].conj() * vectors[(k, j)]).sum());
    let mut a_diag = vec![0.0; n];
    for l in 0..n {
        if normalized[l] {
            a_diag[l] = b_matrix[(l, l)].re;
            rigidity[l] = 1.0 / a_diag[l];
        } else {
            // unnormalized unit vector: r = |φᵀφ| / φ†φ still holds
            a_diag[l] = 1.0 / rigidity[l];
        }
    }

    Ok(ResonanceSpectrum {
        energy: h.energy,
        eigenvalues,
        right_eigenvectors: vectors,
        a_diag,
        b_matrix,
        phase_rigidity: rigidity,
        defective,
    })
}

/// Bilinear Gram–Schmidt inside groups of (numerically) equal eigenvalues.
/// Distinct eigenvalues of a complex symmetric matrix already give bilinearly
/// orthogonal eigenvectors; degenerate ones need not.
fn orthogonalize_clusters(values: &[Complex64], vectors: &mut Mat<Complex64>, tol: f64, defect_tol: f64) {
    let n = values.len();
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && (values[j] - values[i]).norm() <= tol {
            j += 1;
        }
        if j - i > 1 {
            let mut done: Vec<Vec<Complex64>> = Vec::new();
            for l in i..j {
                let mut v = linalg::column(vectors, l);
                for u in &done {
                    let c = linalg::bilinear(u, &v);
                    for (vi, ui) in v.iter_mut().zip(u) {
                        *vi -= c * ui;
                    }
                }
                let q = linalg::bilinear(&v, &v);
                let norm2 = linalg::norm(&v).powi(2);
                if q.norm() < defect_tol * norm2 {
                    // Jordan block; leave the cluster to the defect check
                    break;
                }
                let s = q.sqrt();
                let normalized: Vec<Complex64> = v.iter().map(|x| x / s).collect();
                let unit = linalg::norm(&v);
                for k in 0..n {
                    vectors[(k, l)] = v[k] / unit;
                }
                done.push(normalized);
            }
        }
        i = j;
    }
}

/// Chooses the overall sign so that the largest-magnitude component has argument in (−π/2, π/2].
fn fix_sign(phi: &mut [Complex64]) {
    let mut k = 0;
    for (i, p) in phi.iter().enumerate() {
        if p.norm() > phi[k].norm() {
            k = i;
        }
    }
    let arg = phi[k].arg();
    if arg > std::f64::consts::FRAC_PI_2 || arg <= -std::f64::consts::FRAC_PI_2 {
        for p in phi.iter_mut() {
            *p = -*p;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_h_eff, Channel, SystemModel};

    fn heff_from(m: [[Complex64; 2]; 2]) -> EffectiveHamiltonian {
        let matrix = Mat::from_fn(2, 2, |i, j| m[i][j]);
        EffectiveHamiltonian {
            energy: 0.0,
            hermitian_part: Mat::from_fn(2, 2, |i, j| m[i][j].re),
            antihermitian_part: Mat::from_fn(2, 2, |i, j| -m[i][j].im / std::f64::consts::PI),
            matrix,
            open_channel_mask: vec![true],
        }
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn hermitian_limit() {
        let m = SystemModel::from_parts(&[vec![1.0, 0.0], vec![0.0, 2.0]], vec![Channel::Wideband { dos: 1.0 }], &[vec![0.0], vec![0.0]]).unwrap();
        let s = diagonalize(&build_h_eff(&m, 0.0).unwrap()).unwrap();
        assert_eq!(s.eigenvalues, vec![c(1.0, 0.0), c(2.0, 0.0)]);
        assert_eq!(s.a_diag, vec![1.0, 1.0]);
        assert_eq!(s.phase_rigidity, vec![1.0, 1.0]);
        assert_eq!(s.b_matrix[(0, 1)], c(0.0, 0.0));
        assert!(!s.defective);
    }

    #[test]
    fn rank_one_two_by_two() {
        let h = heff_from([[c(0.0, -1.0), c(0.0, -1.0)], [c(0.0, -1.0), c(0.0, -1.0)]]);
        let s = diagonalize(&h).unwrap();
        let mut z = s.eigenvalues.clone();
        z.sort_by(|a, b| b.im.total_cmp(&a.im));
        assert!((z[0] - c(0.0, 0.0)).norm() < 1e-14);
        assert!((z[1] - c(0.0, -2.0)).norm() < 1e-14);
        let r = 1.0 / 2f64.sqrt();
        for l in 0..2 {
            let phi = s.eigenvector(l);
            let expected = if s.eigenvalues[l].im > -1.0 { [r, -r] } else { [r, r] };
            for i in 0..2 {
                assert!((phi[i] - c(expected[i], 0.0)).norm() < 1e-14, "{phi:?}");
            }
            assert!((s.a_diag[l] - 1.0).abs() < 1e-14);
            assert!((s.phase_rigidity[l] - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn exceptional_point_is_defective() {
        // discriminant e² + v² with e = i, v = 1 vanishes: double eigenvalue −i
        let h = heff_from([[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, -2.0)]]);
        let s = diagonalize(&h).unwrap();
        assert!(s.defective);
        for z in &s.eigenvalues {
            assert!((z - c(0.0, -1.0)).norm() < 1e-6, "{z}");
        }
    }

    #[test]
    fn sign_convention() {
        let mut v = vec![c(0.1, 0.0), c(-0.9, 0.1)];
        fix_sign(&mut v);
        assert_eq!(v[1], c(0.9, -0.1));
        let mut w = vec![c(0.0, -1.0)];
        fix_sign(&mut w);
        assert_eq!(w[0], c(0.0, 1.0), "arg −π/2 is excluded, +π/2 kept");
    }

    #[test]
    fn degenerate_complex_eigenvalues_are_orthogonalized() {
        // two identical decoupled blocks: z = 1 − 0.5i twice, eigenspace is 2D
        let z0 = c(1.0, -0.5);
        let matrix = Mat::from_fn(3, 3, |i, j| if i == j { if i < 2 { z0 } else { c(3.0, -0.1) } } else { c(0.0, 0.0) });
        let h = EffectiveHamiltonian {
            energy: 0.0,
            hermitian_part: Mat::from_fn(3, 3, |i, j| matrix[(i, j)].re),
            antihermitian_part: Mat::from_fn(3, 3, |i, j| -matrix[(i, j)].im / std::f64::consts::PI),
            matrix,
            open_channel_mask: vec![true],
        };
        let s = diagonalize(&h).unwrap();
        assert!(s.biorthogonality_residual() < 1e-12);
        assert!(s.closure_residual() < 1e-12);
    }
}
