//! Resonance S-matrix, transmission and the phase rigidity of the internal
//! scattering wave function.
//!
//! With `v_C = coupling_vector(C, E)` and the biorthogonal eigenpairs of
//! `H_eff(E)`, the open-channel S-matrix is
//!
//! ```text
//! S_C′C(E) = δ_C′C − 2πi Σ_λ (v_C′ᵀφ_λ)(φ_λᵀv_C) / (E − z_λ)
//! ```
//!
//! which is unitary because `H_eff = H_R − iπ Σ_open v_C v_Cᵀ` with a real
//! symmetric `H_R`. The resonance amplitude `S^res = I − S` and the
//! transmission `t_C′C = S_C′C` (C′ ≠ C) are the two pieces of it.
//!
//! The phase rigidity `ρ` of `Ψ̂ = Σ_λ c_λ φ_λ` is computed directly from the
//! assembled vector as `|Ψ̂ᵀΨ̂| / Ψ̂†Ψ̂`, which is bounded by construction.

use std::f64::consts::PI;

use faer::Mat;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{build_h_eff, coupling_vector, CouplingVector, SystemModel};
use crate::spectral::{diagonalize, ResonanceSpectrum};

/// Largest tolerated `‖S†S − I‖_F` before the assembly is considered broken.
pub const UNITARITY_LIMIT: f64 = 1e-6;
/// Relative agreement required between the two transmission routes.
pub const TRANSMISSION_ROUTE_TOL: f64 = 1e-9;

/// S-matrix restricted to the channels open at its energy.
#[derive(Clone, Debug)]
pub struct OpenSMatrix {
    pub channels: Vec<usize>,
    pub matrix: Mat<Complex64>,
}

impl OpenSMatrix {
    pub fn dim(&self) -> usize {
        self.channels.len()
    }

    /// Entry for channel indices of the full model; `None` if either is closed.
    pub fn get(&self, to: usize, from: usize) -> Option<Complex64> {
        let i = self.channels.iter().position(|&c| c == to)?;
        let j = self.channels.iter().position(|&c| c == from)?;
        Some(self.matrix[(i, j)])
    }

    pub fn unitarity_residual(&self) -> f64 {
        unitarity_residual(&self.matrix)
    }

    /// Total scattering phase `δ = arg(det S) / 2`, in (−π/2, π/2].
    pub fn scattering_phase(&self) -> f64 {
        0.5 * linalg::determinant(&self.matrix).arg()
    }
}

/// `‖S†S − I‖_F`.
pub fn unitarity_residual(s: &Mat<Complex64>) -> f64 {
    let n = s.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            let p: Complex64 = (0..n).map(|k| s[(k, i)].conj() * s[(k, j)]).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            acc += (p - target).norm_sqr();
        }
    }
    acc.sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WavefunctionRigidity {
    pub rho: f64,
    pub theta: f64,
}

/// All scattering observables at one energy for one incoming channel.
#[derive(Clone, Debug)]
pub struct ScatteringPoint {
    pub energy: f64,
    pub incoming: usize,
    /// `C×C`; rows and columns of closed channels are zero.
    pub s_res: Mat<Complex64>,
    pub s_full: OpenSMatrix,
    /// `C×C` transmission amplitudes `t[to][from]`; zero on the diagonal and for closed channels.
    pub transmission: Mat<Complex64>,
    /// Expansion of `Ψ̂` in the `φ_λ`, normalized to `Σ|c_λ|² = 1`; empty when the
    /// incoming channel is closed or decoupled.
    pub c_coeffs: Vec<Complex64>,
    pub rigidity: Option<WavefunctionRigidity>,
}

fn check_spectrum(spectrum: &ResonanceSpectrum, energy: f64) -> Result<()> {
    if spectrum.energy != energy {
        return Err(Error::InvalidInput(format!(
            "spectrum was computed at E = {}, requested E = {energy}",
            spectrum.energy
        )));
    }
    if spectrum.defective {
        return Err(Error::EpProximal { energy });
    }
    Ok(())
}

fn couplings(model: &SystemModel, energy: f64) -> Result<Vec<CouplingVector>> {
    (0..model.n_channels()).map(|c| coupling_vector(model, c, energy)).collect()
}

/// `v_C ᵀ φ_λ` for every channel (rows) and state (columns).
fn projections(spectrum: &ResonanceSpectrum, vs: &[CouplingVector]) -> Vec<Vec<Complex64>> {
    vs.iter()
        .map(|v| (0..spectrum.len()).map(|l| v.dot(spectrum.eigenvector(l))).collect())
        .collect()
}

/// Resonance amplitude `S^res_C′C = 2πi Σ_λ (v_C′ᵀφ_λ)(φ_λᵀv_C)/(E − z_λ)`.
pub fn s_matrix_resonant(model: &SystemModel, spectrum: &ResonanceSpectrum, energy: f64) -> Result<Mat<Complex64>> {
    check_spectrum(spectrum, energy)?;
    let vs = couplings(model, energy)?;
    let proj = projections(spectrum, &vs);
    let c = model.n_channels();
    let two_pi_i = Complex64::new(0.0, 2.0 * PI);
    Ok(Mat::from_fn(c, c, |to, from| {
        if !(vs[to].open && vs[from].open) {
            return Complex64::new(0.0, 0.0);
        }
        let sum: Complex64 = (0..spectrum.len())
            .map(|l| proj[to][l] * proj[from][l] / (energy - spectrum.eigenvalues[l]))
            .sum();
        two_pi_i * sum
    }))
}

pub fn s_matrix_full(model: &SystemModel, spectrum: &ResonanceSpectrum, energy: f64) -> Result<OpenSMatrix> {
    let s_res = s_matrix_resonant(model, spectrum, energy)?;
    let open: Vec<usize> = model
        .channels()
        .iter()
        .enumerate()
        .filter_map(|(c, ch)| ch.is_open(energy).then_some(c))
        .collect();
    let k = open.len();
    let matrix = Mat::from_fn(k, k, |i, j| {
        let delta = if i == j { 1.0 } else { 0.0 };
        Complex64::new(delta, 0.0) - s_res[(open[i], open[j])]
    });
    let s = OpenSMatrix { channels: open, matrix };
    let residual = s.unitarity_residual();
    if !(residual <= UNITARITY_LIMIT) {
        return Err(Error::InternalConsistency { check: "S-matrix unitarity", residual });
    }
    Ok(s)
}

/// Expansion coefficients `c_λ = φ_λᵀv_C / (E − z_λ)` of the internal wave function
/// for incoming channel `channel` (not normalized).
pub fn expansion_coefficients(model: &SystemModel, spectrum: &ResonanceSpectrum, energy: f64, channel: usize) -> Result<Vec<Complex64>> {
    check_spectrum(spectrum, energy)?;
    let v = coupling_vector(model, channel, energy)?;
    Ok((0..spectrum.len())
        .map(|l| v.dot(spectrum.eigenvector(l)) / (energy - spectrum.eigenvalues[l]))
        .collect())
}

/// `Ψ̂ = Σ_λ c_λ φ_λ`.
pub fn internal_wavefunction(spectrum: &ResonanceSpectrum, c_coeffs: &[Complex64]) -> Vec<Complex64> {
    let n = spectrum.len();
    (0..n)
        .map(|i| (0..n).map(|l| c_coeffs[l] * spectrum.right_eigenvectors[(i, l)]).sum())
        .collect()
}

/// Phase rigidity `ρ = |Ψ̂ᵀΨ̂| / Ψ̂†Ψ̂` and rotation `θ = −arg(Ψ̂ᵀΨ̂)/2`.
/// Both are invariant under rescaling of `c_coeffs`.
pub fn phase_rigidity_psi(spectrum: &ResonanceSpectrum, c_coeffs: &[Complex64]) -> Result<(f64, f64)> {
    if c_coeffs.len() != spectrum.len() {
        return Err(Error::InvalidInput(format!(
            "{} expansion coefficients for {} states",
            c_coeffs.len(),
            spectrum.len()
        )));
    }
    let psi = internal_wavefunction(spectrum, c_coeffs);
    let norm2 = linalg::norm(&psi).powi(2);
    if !(norm2 > 0.0) {
        return Err(Error::UndefinedRigidity);
    }
    let q = linalg::bilinear(&psi, &psi);
    Ok(((q.norm() / norm2).min(1.0), -0.5 * q.arg()))
}

/// Transmission amplitude computed twice: from the spectral sum over resonances and
/// as `−2πi v_toᵀ Ψ̂` with `Ψ̂` solved directly from `(E − H_eff) Ψ̂ = v_from`.
pub fn transmission_routes(
    model: &SystemModel,
    spectrum: &ResonanceSpectrum,
    energy: f64,
    from: usize,
    to: usize,
) -> Result<(Complex64, Complex64)> {
    check_spectrum(spectrum, energy)?;
    if from == to {
        return Err(Error::InvalidInput("transmission needs two distinct channels".into()));
    }
    let v_from = coupling_vector(model, from, energy)?;
    let v_to = coupling_vector(model, to, energy)?;
    for (c, v) in [(from, &v_from), (to, &v_to)] {
        if !v.open {
            return Err(Error::ClosedChannel { channel: c, energy });
        }
    }
    let minus_two_pi_i = Complex64::new(0.0, -2.0 * PI);
    let spectral: Complex64 = (0..spectrum.len())
        .map(|l| {
            let phi = spectrum.eigenvector(l);
            v_to.dot(phi.iter().copied()) * v_from.dot(phi) / (energy - spectrum.eigenvalues[l])
        })
        .sum::<Complex64>()
        * minus_two_pi_i;

    let h = build_h_eff(model, energy)?;
    let n = h.size();
    let resolvent = Mat::from_fn(n, n, |i, j| {
        let e = if i == j { Complex64::new(energy, 0.0) } else { Complex64::new(0.0, 0.0) };
        e - h.matrix[(i, j)]
    });
    let rhs: Vec<Complex64> = v_from.values.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let psi = linalg::solve(&resolvent, &rhs);
    let via_psi = minus_two_pi_i * v_to.dot(psi);
    Ok((spectral, via_psi))
}

pub fn transmission(model: &SystemModel, spectrum: &ResonanceSpectrum, energy: f64, from: usize, to: usize) -> Result<Complex64> {
    let (a, b) = transmission_routes(model, spectrum, energy, from, to)?;
    let residual = (a - b).norm();
    if residual > TRANSMISSION_ROUTE_TOL * a.norm().max(b.norm()) + 1e-13 {
        return Err(Error::InternalConsistency { check: "transmission route equivalence", residual });
    }
    Ok(a)
}

/// Upper bound on `Γ_λ`: `2π Σ_C |φ_λᵀ v_C|²`.
pub fn width_bound(model: &SystemModel, spectrum: &ResonanceSpectrum, energy: f64, lambda: usize) -> Result<f64> {
    let phi = spectrum.eigenvector(lambda);
    Ok(2.0 * PI
        * couplings(model, energy)?
            .iter()
            .map(|v| v.dot(phi.iter().copied()).norm_sqr())
            .sum::<f64>())
}

pub fn scattering_point(model: &SystemModel, energy: f64, incoming: usize) -> Result<ScatteringPoint> {
    if incoming >= model.n_channels() {
        return Err(Error::InvalidInput(format!("incoming channel {incoming} out of range")));
    }
    let spectrum = diagonalize(&build_h_eff(model, energy)?)?;
    let s_res = s_matrix_resonant(model, &spectrum, energy)?;
    let s_full = s_matrix_full(model, &spectrum, energy)?;
    let c = model.n_channels();
    let mut transmission = Mat::<Complex64>::zeros(c, c);
    for &to in &s_full.channels {
        for &from in &s_full.channels {
            if to != from {
                transmission[(to, from)] = self::transmission(model, &spectrum, energy, from, to)?;
            }
        }
    }
    let mut c_coeffs = expansion_coefficients(model, &spectrum, energy, incoming)?;
    let norm = c_coeffs.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let rigidity = if norm > 0.0 {
        for x in c_coeffs.iter_mut() {
            *x /= norm;
        }
        let (rho, theta) = phase_rigidity_psi(&spectrum, &c_coeffs)?;
        Some(WavefunctionRigidity { rho, theta })
    } else {
        c_coeffs.clear();
        None
    };
    Ok(ScatteringPoint { energy, incoming, s_res, s_full, transmission, c_coeffs, rigidity })
}

/// Scattering observables on an energy grid, evaluated in parallel, returned in grid order.
pub fn scan(model: &SystemModel, energies: &[f64], incoming: usize) -> Result<Vec<ScatteringPoint>> {
    energies.par_iter().map(|&e| scattering_point(model, e, incoming)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Channel;

    fn single(e0: f64, gamma: f64, dos: f64) -> SystemModel {
        SystemModel::from_parts(&[vec![e0]], vec![Channel::Wideband { dos }], &[vec![gamma]]).unwrap()
    }

    fn spec(model: &SystemModel, e: f64) -> ResonanceSpectrum {
        diagonalize(&build_h_eff(model, e).unwrap()).unwrap()
    }

    #[test]
    fn zero_coupling_has_no_resonance_amplitude() {
        let m = single(0.3, 0.0, 1.0);
        let s = spec(&m, 0.1);
        assert_eq!(s_matrix_resonant(&m, &s, 0.1).unwrap()[(0, 0)], Complex64::new(0.0, 0.0));
        let p = scattering_point(&m, 0.1, 0).unwrap();
        assert!(p.rigidity.is_none());
    }

    #[test]
    fn single_level_breit_wigner() {
        let (e0, gamma, dos) = (0.4, 0.3, 0.7);
        let m = single(e0, gamma, dos);
        let width = 2.0 * PI * dos * gamma * gamma;
        for e in [e0 - 2.0, e0 - 0.1, e0, e0 + 0.05, e0 + 3.0] {
            let s = spec(&m, e);
            let res = s_matrix_resonant(&m, &s, e).unwrap()[(0, 0)];
            let expected = Complex64::new(0.0, width) / Complex64::new(e - e0, width / 2.0);
            assert!((res - expected).norm() < 1e-13, "{res} vs {expected}");
            let full = s_matrix_full(&m, &s, e).unwrap();
            // S = (E − e₀ − iΓ/2)/(E − e₀ + iΓ/2) has modulus one
            let analytic = Complex64::new(e - e0, -width / 2.0) / Complex64::new(e - e0, width / 2.0);
            assert!((full.matrix[(0, 0)] - analytic).norm() < 1e-13);
            assert!((full.matrix[(0, 0)].norm() - 1.0).abs() < 1e-14);
        }
        let s = spec(&m, e0);
        assert!((s_matrix_resonant(&m, &s, e0).unwrap()[(0, 0)].norm() - 2.0).abs() < 1e-13);
    }

    #[test]
    fn mismatched_spectrum_energy_is_rejected() {
        let m = single(0.0, 0.1, 1.0);
        let s = spec(&m, 0.0);
        assert!(matches!(s_matrix_resonant(&m, &s, 0.5), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn closed_channels_are_excluded() {
        let m = SystemModel::from_parts(
            &[vec![0.0]],
            vec![Channel::FlatBand { lower: 1.0, upper: 2.0, dos: 1.0 }, Channel::Wideband { dos: 0.2 }],
            &[vec![0.3, 0.2]],
        )
        .unwrap();
        let s = spec(&m, 0.0);
        let full = s_matrix_full(&m, &s, 0.0).unwrap();
        assert_eq!(full.channels, vec![1]);
        let res = s_matrix_resonant(&m, &s, 0.0).unwrap();
        assert_eq!(res[(0, 0)], Complex64::new(0.0, 0.0));
        assert_eq!(res[(0, 1)], Complex64::new(0.0, 0.0));
        assert!(matches!(transmission(&m, &s, 0.0, 1, 0), Err(Error::ClosedChannel { channel: 0, .. })));
    }

    #[test]
    fn all_channels_closed_gives_empty_identity() {
        let m = SystemModel::from_parts(&[vec![0.0]], vec![Channel::FlatBand { lower: 1.0, upper: 2.0, dos: 1.0 }], &[vec![0.3]]).unwrap();
        let s = spec(&m, 0.5);
        let full = s_matrix_full(&m, &s, 0.5).unwrap();
        assert_eq!(full.dim(), 0);
        assert_eq!(full.unitarity_residual(), 0.0);
    }

    #[test]
    fn symmetric_two_lead_resonance_transmits_fully() {
        let m = SystemModel::from_parts(
            &[vec![0.2]],
            vec![Channel::Wideband { dos: 0.5 }, Channel::Wideband { dos: 0.5 }],
            &[vec![0.3, 0.3]],
        )
        .unwrap();
        let s = spec(&m, 0.2);
        let t = transmission(&m, &s, 0.2, 0, 1).unwrap();
        assert!((t.norm() - 1.0).abs() < 1e-13);
        let zero = SystemModel::from_parts(
            &[vec![0.2]],
            vec![Channel::Wideband { dos: 0.5 }, Channel::Wideband { dos: 0.5 }],
            &[vec![0.0, 0.0]],
        )
        .unwrap();
        let s0 = spec(&zero, 0.1);
        assert_eq!(transmission(&zero, &s0, 0.1, 0, 1).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn rigidity_limits() {
        let m = SystemModel::from_parts(&[vec![0.0, 0.0], vec![0.0, 1.0]], vec![Channel::Wideband { dos: 1.0 }], &[vec![0.0], vec![0.0]]).unwrap();
        let s = spec(&m, 0.0);
        // eigenvectors are the unit vectors, so Ψ̂ = c
        let (rho, _) = phase_rigidity_psi(&s, &[Complex64::new(0.6, 0.0), Complex64::new(-0.8, 0.0)]).unwrap();
        assert!((rho - 1.0).abs() < 1e-15);
        let a = Complex64::new(0.5, 0.5);
        let b = Complex64::new(-0.5, -0.5);
        let (rho, _) = phase_rigidity_psi(&s, &[a, b]).unwrap();
        assert!((rho - 1.0).abs() < 1e-15, "Re = Im with a common phase is still rigid");
        let (rho, _) = phase_rigidity_psi(&s, &[Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)]).unwrap();
        assert!(rho < 1e-15, "orthogonal equal-length real and imaginary parts");
        assert!(matches!(phase_rigidity_psi(&s, &[Complex64::new(0.0, 0.0); 2]), Err(Error::UndefinedRigidity)));
    }
}
