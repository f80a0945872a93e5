//! Brute-force reference: the continua are replaced by `M` discrete bins per
//! channel and the resulting Hermitian matrix on levels plus bins is
//! diagonalized directly.
//!
//! ```text
//! H = [ H_B   V ]      V_{λ,(C,k)} = γ_{λC} · w_{C,k},   w_{C,k}² = ρ_C(ω_k) Δω_k
//!     [ Vᵀ    Ω ]      Ω = diag(ω_k)
//! ```
//!
//! Flat bands use bins uniform in `ω`. Chain leads use bins uniform in the
//! lead momentum `k ∈ (0, π)` with `ω(k) = ω₀ + 2t(1 − cos k)`, for which
//! `ρ dω = (2/π) sin²k dk`. A wideband channel has no band and must be given
//! an explicit window, inside which it is treated as a flat band.

use faer::linalg::solvers::Solve;
use faer::Mat;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{Channel, SystemModel};

pub const MIN_BINS: usize = 100;

#[derive(Clone, Debug)]
pub struct DiscretizedFullSpace {
    pub n_levels: usize,
    pub dim: usize,
    pub hamiltonian: Mat<f64>,
    /// Bin centres per channel, strictly increasing.
    pub bin_energies: Vec<Vec<f64>>,
    /// `sqrt(ρ(ω_k) Δω_k)` per channel and bin.
    pub bin_weights: Vec<Vec<f64>>,
    /// `Δω_k` per channel and bin.
    pub bin_widths: Vec<Vec<f64>>,
    pub warnings: Vec<String>,
}

impl DiscretizedFullSpace {
    /// Earliest revival time `2π / max Δω` of the discretized continua.
    pub fn recurrence_time(&self) -> f64 {
        let dmax = self.bin_widths.iter().flatten().copied().fold(0.0, f64::max);
        2.0 * std::f64::consts::PI / dmax
    }

    /// Largest bin width, the resolution limit of anything extracted from this space.
    pub fn max_bin_width(&self) -> f64 {
        self.bin_widths.iter().flatten().copied().fold(0.0, f64::max)
    }

    pub fn diagonalize(&self) -> Result<FullSpectrum> {
        let (energies, vectors) = linalg::symmetric_eigen(&self.hamiltonian).ok_or_else(|| Error::NumericalFailure {
            context: "full-space eigensolver".into(),
            frobenius_norm: self.hamiltonian.norm_l2(),
            max_entry: self.hamiltonian.norm_max(),
        })?;
        Ok(FullSpectrum { n_levels: self.n_levels, energies, vectors })
    }
}

/// Eigenpairs of the discretized full space, energies ascending.
#[derive(Clone, Debug)]
pub struct FullSpectrum {
    pub n_levels: usize,
    pub energies: Vec<f64>,
    pub vectors: Mat<f64>,
}

impl FullSpectrum {
    /// `a_k = ⟨k|init⟩*` for a state living on the discrete levels.
    fn amplitudes(&self, init: &[Complex64]) -> Vec<Complex64> {
        (0..self.energies.len())
            .map(|k| (0..self.n_levels).map(|n| init[n] * self.vectors[(n, k)]).sum())
            .collect()
    }

    /// Weights `|⟨k|init⟩|²` of a level-space state on every eigenvector.
    pub fn level_weights(&self, init: &[Complex64]) -> Vec<f64> {
        self.amplitudes(init).iter().map(|a| a.norm_sqr()).collect()
    }

    /// Energies of eigenvectors lying below every band (true bound states).
    pub fn below(&self, energy: f64) -> Vec<f64> {
        self.energies.iter().copied().filter(|&e| e < energy).collect()
    }
}

/// Builds the discretized full space. `window` is required, and only used,
/// for wideband channels.
pub fn build_full(model: &SystemModel, bins_per_channel: usize, window: Option<(f64, f64)>) -> Result<DiscretizedFullSpace> {
    if bins_per_channel < MIN_BINS {
        return Err(Error::InvalidInput(format!("at least {MIN_BINS} bins per channel required, got {bins_per_channel}")));
    }
    let m = bins_per_channel;
    let mut warnings = Vec::new();
    let mut bin_energies = Vec::new();
    let mut bin_weights = Vec::new();
    let mut bin_widths = Vec::new();
    for (c, ch) in model.channels().iter().enumerate() {
        let (energies, widths, weights) = match *ch {
            Channel::FlatBand { lower, upper, dos } => flat_bins(lower, upper, dos, m),
            Channel::Wideband { dos } => {
                let (lo, hi) = window.ok_or_else(|| {
                    Error::InvalidInput(format!("channel {c} is wideband; the oracle needs an energy window for it"))
                })?;
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return Err(Error::InvalidInput(format!("invalid oracle window [{lo}, {hi}]")));
                }
                warnings.push(format!(
                    "channel {c}: wideband continuum truncated to [{lo}, {hi}]; the window adds a principal-value shift"
                ));
                flat_bins(lo, hi, dos, m)
            }
            Channel::ChainLead { threshold, hopping } => {
                let dk = std::f64::consts::PI / m as f64;
                let mut e = Vec::with_capacity(m);
                let mut d = Vec::with_capacity(m);
                let mut w = Vec::with_capacity(m);
                for j in 0..m {
                    let k = (j as f64 + 0.5) * dk;
                    e.push(threshold + 2.0 * hopping * (1.0 - k.cos()));
                    d.push(2.0 * hopping * k.sin() * dk);
                    w.push((2.0 / std::f64::consts::PI * k.sin().powi(2) * dk).sqrt());
                }
                (e, d, w)
            }
        };
        bin_energies.push(energies);
        bin_widths.push(widths);
        bin_weights.push(weights);
    }

    let n = model.n_levels();
    let dim = n + m * model.n_channels();
    let mut h = Mat::<f64>::zeros(dim, dim);
    for i in 0..n {
        for j in 0..n {
            h[(i, j)] = model.hb()[(i, j)];
        }
    }
    for c in 0..model.n_channels() {
        for k in 0..m {
            let idx = n + c * m + k;
            h[(idx, idx)] = bin_energies[c][k];
            for l in 0..n {
                let v = model.couplings()[(l, c)] * bin_weights[c][k];
                h[(l, idx)] = v;
                h[(idx, l)] = v;
            }
        }
    }
    Ok(DiscretizedFullSpace { n_levels: n, dim, hamiltonian: h, bin_energies, bin_weights, bin_widths, warnings })
}

fn flat_bins(lower: f64, upper: f64, dos: f64, m: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let dw = (upper - lower) / m as f64;
    let energies = (0..m).map(|k| lower + (k as f64 + 0.5) * dw).collect();
    (energies, vec![dw; m], vec![(dos * dw).sqrt(); m])
}

#[derive(Clone, Debug)]
pub struct SurvivalTrace {
    pub times: Vec<f64>,
    /// `⟨init|e^{−iHt}|init⟩`.
    pub amplitude: Vec<Complex64>,
    /// `|amplitude|²`.
    pub probability: Vec<f64>,
    /// Weight of the evolved state on the discrete levels.
    pub level_population: Vec<f64>,
    pub recurrence_time: f64,
    /// True when the grid reaches past the recurrence time.
    pub recurrence_warning: bool,
}

/// Exact evolution of a normalized level-space state in the discretized full space.
pub fn survival_probability(full: &DiscretizedFullSpace, spectrum: &FullSpectrum, init: &[Complex64], times: &[f64]) -> Result<SurvivalTrace> {
    if init.len() != full.n_levels {
        return Err(Error::InvalidInput(format!("initial state has {} entries for {} levels", init.len(), full.n_levels)));
    }
    let norm = linalg::norm(init);
    if !(norm > 0.0) {
        return Err(Error::InvalidInput("initial state is zero".into()));
    }
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::InvalidInput("times must be finite and non-negative".into()));
    }
    let init: Vec<Complex64> = init.iter().map(|x| x / norm).collect();
    let a = spectrum.amplitudes(&init);
    let weights: Vec<f64> = a.iter().map(|x| x.norm_sqr()).collect();
    let n = full.n_levels;
    let mut trace = SurvivalTrace {
        times: times.to_vec(),
        amplitude: Vec::with_capacity(times.len()),
        probability: Vec::with_capacity(times.len()),
        level_population: Vec::with_capacity(times.len()),
        recurrence_time: full.recurrence_time(),
        recurrence_warning: times.iter().any(|&t| t > full.recurrence_time()),
    };
    for &t in times {
        let phases: Vec<Complex64> = spectrum.energies.iter().map(|&e| Complex64::new(0.0, -e * t).exp()).collect();
        let amp: Complex64 = weights.iter().zip(&phases).map(|(w, p)| w * p).sum();
        let level_population = (0..n)
            .map(|l| {
                (0..a.len())
                    .map(|k| a[k] * phases[k] * spectrum.vectors[(l, k)])
                    .sum::<Complex64>()
                    .norm_sqr()
            })
            .sum();
        trace.amplitude.push(amp);
        trace.probability.push(amp.norm_sqr());
        trace.level_population.push(level_population);
    }
    Ok(trace)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LorentzianFit {
    pub position: f64,
    pub width: f64,
    /// Number of eigenvalues inside the fit window.
    pub samples: usize,
}

/// Fits a Lorentzian to the level-projected density of states
/// `Σ_k |⟨k|init⟩|² δ(E − ε_k)` inside `estimate.0 ± 5 estimate.1`.
///
/// Each eigenvalue contributes the density `|⟨k|init⟩|² / Δ_k` with `Δ_k` the local
/// level spacing; the reciprocal density is a quadratic in `E` for a Lorentzian and
/// is fitted by relative least squares.
pub fn extract_resonance(spectrum: &FullSpectrum, init: &[Complex64], estimate: (f64, f64)) -> Result<LorentzianFit> {
    let (e0, gamma0) = estimate;
    if !(gamma0 > 0.0) {
        return Err(Error::InvalidInput("width estimate must be positive".into()));
    }
    let w = spectrum.level_weights(init);
    let eps = &spectrum.energies;
    let k_max = eps.len();
    let mut rows = Vec::new();
    for k in 1..k_max.saturating_sub(1) {
        if (eps[k] - e0).abs() > 5.0 * gamma0 {
            continue;
        }
        let spacing = 0.5 * (eps[k + 1] - eps[k - 1]);
        if spacing > 0.0 && w[k] > 0.0 {
            rows.push((eps[k], w[k] / spacing));
        }
    }
    if rows.len() < 5 {
        return Err(Error::InvalidInput(format!("only {} eigenvalues inside the fit window; refine the bins", rows.len())));
    }
    // minimize Σ (ρ_k q(ε_k) − 1)², q(ε) = a ε² + b ε + c = 1/ρ
    let mut ata = Mat::<f64>::zeros(3, 3);
    let mut atb = Mat::<f64>::zeros(3, 1);
    for &(e, rho) in &rows {
        let x = e - e0;
        let basis = [rho * x * x, rho * x, rho];
        for i in 0..3 {
            atb[(i, 0)] += basis[i];
            for j in 0..3 {
                ata[(i, j)] += basis[i] * basis[j];
            }
        }
    }
    let coef = ata.partial_piv_lu().solve(&atb);
    let (a, b, c) = (coef[(0, 0)], coef[(1, 0)], coef[(2, 0)]);
    let shift = -b / (2.0 * a);
    let half_sq = c / a - shift * shift;
    if !(a > 0.0 && half_sq > 0.0) {
        return Err(Error::NumericalFailure { context: "Lorentzian fit has no peak".into(), frobenius_norm: a, max_entry: half_sq });
    }
    Ok(LorentzianFit { position: e0 + shift, width: 2.0 * half_sq.sqrt(), samples: rows.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::presets;
    use crate::model::{build_h_eff, ChannelTemplate, ModelBuilder, Scalar};
    use crate::spectral::{diagonalize, solve_fixed_point};
    use std::f64::consts::PI;

    fn unit(n: usize, i: usize) -> Vec<Complex64> {
        (0..n).map(|k| Complex64::new(if k == i { 1.0 } else { 0.0 }, 0.0)).collect()
    }

    #[test]
    fn decoupled_space_is_block_diagonal() {
        let m = SystemModel::from_parts(
            &[vec![0.0, 0.2], vec![0.2, 0.5]],
            vec![Channel::FlatBand { lower: -1.0, upper: 1.0, dos: 0.5 }],
            &[vec![0.0], vec![0.0]],
        )
        .unwrap();
        let full = build_full(&m, 100, None).unwrap();
        assert_eq!(full.dim, 102);
        let spec = full.diagonalize().unwrap();
        let mut expected = full.bin_energies[0].clone();
        let disc = (0.0625f64 + 0.04).sqrt();
        expected.extend([0.25 - disc, 0.25 + disc]);
        expected.sort_by(f64::total_cmp);
        for (a, b) in spec.energies.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-13);
        }
        assert!(full.warnings.is_empty());
    }

    #[test]
    fn bin_weights_integrate_the_density() {
        let m = SystemModel::from_parts(
            &[vec![0.0]],
            vec![
                Channel::FlatBand { lower: 1.0, upper: 3.0, dos: 0.7 },
                Channel::ChainLead { threshold: -1.0, hopping: 0.5 },
                Channel::Wideband { dos: 0.2 },
            ],
            &[vec![0.1, 0.1, 0.1]],
        )
        .unwrap();
        assert!(matches!(build_full(&m, 200, None), Err(Error::InvalidInput(_))));
        assert!(matches!(build_full(&m, 99, Some((-5.0, 5.0))), Err(Error::InvalidInput(_))));
        let full = build_full(&m, 200, Some((-5.0, 5.0))).unwrap();
        let totals: Vec<f64> = full.bin_weights.iter().map(|w| w.iter().map(|x| x * x).sum()).collect();
        assert!((totals[0] - 1.4).abs() < 1e-12);
        assert!((totals[1] - 1.0).abs() < 1e-6);
        assert!((totals[2] - 2.0).abs() < 1e-12);
        for e in &full.bin_energies {
            assert!(e.windows(2).all(|w| w[1] > w[0]));
        }
        assert_eq!(full.warnings.len(), 1);
        let h = &full.hamiltonian;
        for i in 0..full.dim {
            for j in 0..full.dim {
                assert_eq!(h[(i, j)], h[(j, i)]);
            }
        }
    }

    #[test]
    fn survival_starts_at_one_and_flags_recurrence() {
        let m = presets::single_level_flatband(0.0, 0.1, -2.0, 2.0, 1.0).unwrap();
        let full = build_full(&m, 200, None).unwrap();
        let spec = full.diagonalize().unwrap();
        let t_rec = full.recurrence_time();
        assert!((t_rec - 2.0 * PI / 0.02).abs() < 1e-9);
        let s = survival_probability(&full, &spec, &[Complex64::new(2.0, 0.0)], &[0.0, 1.0]).unwrap();
        assert!((s.probability[0] - 1.0).abs() < 1e-12);
        assert!((s.level_population[0] - 1.0).abs() < 1e-12);
        assert!(!s.recurrence_warning);
        let late = survival_probability(&full, &spec, &[Complex64::new(1.0, 0.0)], &[0.0, 1.1 * t_rec]).unwrap();
        assert!(late.recurrence_warning);
    }

    #[test]
    fn golden_rule_decay_and_lorentzian_extraction() {
        let gamma = 0.05;
        let g = (gamma / (2.0 * PI)).sqrt();
        let m = presets::single_level_flatband(0.0, g, -10.0, 10.0, 1.0).unwrap();
        let full = build_full(&m, 1000, None).unwrap();
        let spec = full.diagonalize().unwrap();
        let times: Vec<f64> = (0..=50).map(|k| k as f64 * 0.1 / gamma).collect();
        let s = survival_probability(&full, &spec, &unit(1, 0), &times).unwrap();
        for (t, p) in times.iter().zip(&s.probability) {
            let expected = (-gamma * t).exp();
            assert!((p - expected).abs() <= 0.02 * expected, "t = {t}: {p} vs {expected}");
        }
        let fit = extract_resonance(&spec, &unit(1, 0), (0.0, gamma)).unwrap();
        assert!(fit.position.abs() < 3.0 * full.max_bin_width());
        assert!((fit.width - gamma).abs() < (0.02 * gamma).max(3.0 * full.max_bin_width()));
    }

    #[test]
    fn chain_lead_resonance_matches_fixed_point() {
        let m = ModelBuilder::new(1)
            .level(0, 0.8)
            .channel(ChannelTemplate::ChainLead { threshold: 0.0.into(), hopping: 0.5.into() }, vec![Scalar::Value(0.15)])
            .build()
            .unwrap();
        let state = solve_fixed_point(&m, Complex64::new(0.8, 0.0), 1e-12).unwrap();
        assert!(state.converged);
        let full = build_full(&m, 2000, None).unwrap();
        let spec = full.diagonalize().unwrap();
        let fit = extract_resonance(&spec, &unit(1, 0), (state.e_lambda, state.gamma_lambda)).unwrap();
        let dw = full.max_bin_width();
        assert!((fit.position - state.e_lambda).abs() < (0.02 * state.gamma_lambda).max(3.0 * dw));
        assert!((fit.width - state.gamma_lambda).abs() < (0.02 * state.gamma_lambda).max(3.0 * dw));
    }

    #[test]
    fn threshold_bound_state_matches_principal_value_shift() {
        let m = presets::single_level_flatband(0.5, 0.05f64.sqrt(), 1.0, 3.0, 1.0).unwrap();
        let state = solve_fixed_point(&m, Complex64::new(0.5, 0.0), 1e-13).unwrap();
        assert_eq!(state.gamma_lambda, 0.0);
        let full = build_full(&m, 1000, None).unwrap();
        let spec = full.diagonalize().unwrap();
        let bound = spec.below(1.0);
        assert_eq!(bound.len(), 1);
        assert!((bound[0] - state.e_lambda).abs() < 3.0 * full.max_bin_width());
        let h = build_h_eff(&m, state.e_lambda).unwrap();
        assert!(diagonalize(&h).unwrap().eigenvalues[0].im == 0.0);
    }
}
