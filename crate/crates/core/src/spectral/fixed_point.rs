use num_complex::Complex64;

use super::diagonalize::{diagonalize, ResonanceSpectrum};
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{build_h_eff, SystemModel};

pub const DAMPING: f64 = 0.5;
pub const MAX_ITERATIONS: usize = 200;
/// Relative gap below which the two best eigenvector overlaps count as a tie.
pub const AMBIGUITY_TOL: f64 = 1e-6;

/// A resonance solved self-consistently: `E_λ = Re z_λ(E_λ)`, `Γ_λ = −2 Im z_λ(E_λ)`.
#[derive(Clone, Debug)]
pub struct ResonanceState {
    pub branch_id: usize,
    pub e_lambda: f64,
    pub gamma_lambda: f64,
    /// `z_λ` at `E = e_lambda`.
    pub eigenvalue: Complex64,
    pub eigvec: Vec<Complex64>,
    pub phase_rigidity: f64,
    pub a_lambda: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl ResonanceState {
    /// `τ_λ = 1/Γ_λ` (ħ = 1); infinite for a bound state.
    pub fn lifetime(&self) -> f64 {
        if self.gamma_lambda > 0.0 {
            1.0 / self.gamma_lambda
        } else {
            f64::INFINITY
        }
    }
}

/// Index of the eigenvector with the largest bilinear overlap `|refᵀφ|`.
///
/// With `tie_break = Some(k)`, a tie is resolved by taking the `k`-th of the tied
/// candidates ordered by `(Im z, Re z)`.
pub(crate) fn match_branch(
    spectrum: &ResonanceSpectrum,
    reference: &[Complex64],
    tie_break: Option<usize>,
    location: impl Fn() -> String,
) -> Result<usize> {
    let mut overlaps: Vec<(usize, f64)> = (0..spectrum.len())
        .map(|j| (j, linalg::bilinear(reference, &spectrum.eigenvector(j)).norm()))
        .collect();
    overlaps.sort_by(|a, b| b.1.total_cmp(&a.1));
    let best = overlaps[0].1;
    if let Some(&(_, second)) = overlaps.get(1) {
        if !(best - second > AMBIGUITY_TOL * best) {
            let Some(k) = tie_break else {
                return Err(Error::BranchAmbiguity { location: location(), best, second });
            };
            let mut tied: Vec<usize> = overlaps
                .iter()
                .take_while(|(_, o)| !(best - o > AMBIGUITY_TOL * best))
                .map(|&(j, _)| j)
                .collect();
            let z = &spectrum.eigenvalues;
            tied.sort_by(|&a, &b| z[a].im.total_cmp(&z[b].im).then(z[a].re.total_cmp(&z[b].re)));
            return Ok(tied[k.min(tied.len() - 1)]);
        }
    }
    Ok(overlaps[0].0)
}

/// Damped fixed-point iteration following one branch from `start_energy`,
/// identified at every step by overlap with the previous eigenvector.
pub fn follow_branch(
    model: &SystemModel,
    start_energy: f64,
    reference: &[Complex64],
    tol_fp: f64,
    branch_id: usize,
) -> Result<ResonanceState> {
    follow(model, start_energy, reference, tol_fp, branch_id, None)
}

pub(crate) fn follow(
    model: &SystemModel,
    start_energy: f64,
    reference: &[Complex64],
    tol_fp: f64,
    branch_id: usize,
    tie_break: Option<usize>,
) -> Result<ResonanceState> {
    if !(tol_fp > 0.0) {
        return Err(Error::InvalidInput(format!("fixed-point tolerance {tol_fp} must be > 0")));
    }
    let mut energy = start_energy;
    let mut reference = reference.to_vec();
    let mut last = None;
    for iteration in 1..=MAX_ITERATIONS {
        let spectrum = diagonalize(&build_h_eff(model, energy)?)?;
        let j = match_branch(&spectrum, &reference, tie_break, || format!("branch {branch_id}, E = {energy}"))?;
        let z = spectrum.eigenvalues[j];
        let state = ResonanceState {
            branch_id,
            e_lambda: energy,
            gamma_lambda: -2.0 * z.im + 0.0,
            eigenvalue: z,
            eigvec: spectrum.eigenvector(j),
            phase_rigidity: spectrum.phase_rigidity[j],
            a_lambda: spectrum.a_diag[j],
            converged: false,
            iterations: iteration,
        };
        let residual = z.re - energy;
        if residual.abs() <= tol_fp {
            return Ok(ResonanceState { converged: true, ..state });
        }
        reference = state.eigvec.clone();
        energy += DAMPING * residual;
        last = Some(state);
    }
    Ok(last.expect("at least one iteration"))
}

/// Solves the fixed-point equations for the branch whose eigenvalue at
/// `E = Re(seed)` lies closest to `seed`.
pub fn solve_fixed_point(model: &SystemModel, branch_seed: Complex64, tol_fp: f64) -> Result<ResonanceState> {
    let spectrum = diagonalize(&build_h_eff(model, branch_seed.re)?)?;
    let j = (0..spectrum.len())
        .min_by(|&a, &b| {
            (spectrum.eigenvalues[a] - branch_seed)
                .norm()
                .total_cmp(&(spectrum.eigenvalues[b] - branch_seed).norm())
        })
        .expect("non-empty spectrum");
    follow_branch(model, branch_seed.re, &spectrum.eigenvector(j), tol_fp, j)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Channel;

    fn flat_single(bare: f64, coupling2: f64) -> SystemModel {
        SystemModel::from_parts(
            &[vec![bare]],
            vec![Channel::FlatBand { lower: 1.0, upper: 3.0, dos: 1.0 }],
            &[vec![coupling2.sqrt()]],
        )
        .unwrap()
    }

    /// Plain bisection on `E − e₀ − c·ln|(E − 1)/(E − 3)|`, independent of the
    /// matrix path.
    fn bisect_shift(e0: f64, c: f64, mut lo: f64, mut hi: f64) -> f64 {
        let f = |e: f64| e - e0 - c * ((e - 1.0) / (e - 3.0)).abs().ln();
        assert!(f(lo) * f(hi) < 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(lo) * f(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn wideband_converges_in_one_iteration() {
        let m = SystemModel::from_parts(&[vec![0.3, 0.1], vec![0.1, -0.2]], vec![Channel::Wideband { dos: 0.2 }], &[vec![0.5], vec![0.4]]).unwrap();
        let spectrum = diagonalize(&build_h_eff(&m, 0.0).unwrap()).unwrap();
        for z in &spectrum.eigenvalues {
            let s = solve_fixed_point(&m, *z, 1e-12).unwrap();
            assert!(s.converged);
            assert_eq!(s.iterations, 1);
            assert!((s.e_lambda - z.re).abs() < 1e-14);
            assert!((s.gamma_lambda + 2.0 * z.im).abs() < 1e-14);
        }
    }

    #[test]
    fn flatband_band_center_and_off_center() {
        let s = solve_fixed_point(&flat_single(2.0, 0.05), Complex64::new(2.0, 0.0), 1e-13).unwrap();
        assert!(s.converged);
        assert!((s.e_lambda - bisect_shift(2.0, 0.05, 1.5, 2.5)).abs() < 1e-12);
        assert!((s.gamma_lambda - 2.0 * std::f64::consts::PI * 0.05).abs() < 1e-13);

        let s = solve_fixed_point(&flat_single(1.6, 0.05), Complex64::new(1.6, 0.0), 1e-13).unwrap();
        assert!(s.converged);
        let oracle = bisect_shift(1.6, 0.05, 1.2, 2.0);
        assert!((s.e_lambda - oracle).abs() < 1e-12, "{} vs {oracle}", s.e_lambda);
        assert!(s.e_lambda < 1.6, "repelled downwards by the band above");
    }

    #[test]
    fn level_below_threshold_stays_bound() {
        let s = solve_fixed_point(&flat_single(0.5, 0.05), Complex64::new(0.5, 0.0), 1e-13).unwrap();
        assert!(s.converged);
        assert_eq!(s.gamma_lambda, 0.0);
        assert_eq!(s.lifetime(), f64::INFINITY);
        let oracle = bisect_shift(0.5, 0.05, 0.0, 0.99);
        assert!((s.e_lambda - oracle).abs() < 1e-12);
        assert!(s.e_lambda < 0.5);
    }

    #[test]
    fn tolerance_must_be_positive() {
        assert!(solve_fixed_point(&flat_single(2.0, 0.05), Complex64::new(2.0, 0.0), 0.0).is_err());
    }
}
