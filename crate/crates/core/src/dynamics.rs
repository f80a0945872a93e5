//! Time evolution under `H_eff`: population probability, the decay rate
//! `k_gr(t)` and the saturation of the average decay rate of trapped states.
//!
//! The initial internal state is `Ψ̂(0) = Σ_λ c_λ φ_λ`. With the scattering
//! pairing `d_λ = c_λ*` the population is
//!
//! ```text
//! P(t) = Σ_λ c_λ d_λ e^{−Γ_λ t} = Σ_λ |c_λ|² e^{−Γ_λ t}
//! ```
//!
//! and `k_gr(t) = −d ln P / dt` is a positively weighted mean of the widths.
//! The squared norm `‖e^{−iH_eff t} Ψ̂(0)‖²`, which keeps the cross terms
//! between non-orthogonal eigenvectors, is carried along as a diagnostic.

use faer::Mat;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{build_h_eff, Channel, SystemModel};
use crate::scattering;
use crate::spectral::{diagonalize, ResonanceSpectrum};

/// Populations below this magnitude end the trace.
pub const UNDERFLOW: f64 = 1e-300;
/// Relative agreement required between the analytic and finite-difference rates.
pub const RATE_AGREEMENT_TOL: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct DecayTrace {
    pub times: Vec<f64>,
    /// `Γ_λ = −2 Im z_λ`.
    pub widths: Vec<f64>,
    /// `c_{λ0}`.
    pub c0: Vec<Complex64>,
    /// `d_λ = c_{λ0}*`.
    pub d: Vec<Complex64>,
    /// `Σ_λ c_λ d_λ e^{−Γ_λ t}` at each retained time.
    pub population: Vec<Complex64>,
    /// `‖e^{−iH_eff t} Ψ̂(0)‖²`, including the cross terms.
    pub full_norm: Vec<f64>,
    /// True when the population fell below [`UNDERFLOW`] and later times were dropped.
    pub truncated: bool,
}

impl DecayTrace {
    /// Population at an arbitrary time from the stored spectral data.
    pub fn population_at(&self, t: f64) -> Complex64 {
        (0..self.widths.len())
            .map(|l| self.c0[l] * self.d[l] * (-self.widths[l] * t).exp())
            .sum()
    }

    /// `Σ w_λ Γ_λ / Σ w_λ` with `w_λ = c_λ d_λ e^{−Γ_λ t}`, evaluated relative to the
    /// smallest width so that it stays finite when the population itself underflows.
    pub fn rate_at(&self, t: f64) -> f64 {
        let gmin = self.widths.iter().copied().fold(f64::INFINITY, f64::min);
        let (mut num, mut den) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        for l in 0..self.widths.len() {
            let w = self.c0[l] * self.d[l] * (-(self.widths[l] - gmin) * t).exp();
            num += w * self.widths[l];
            den += w;
        }
        (num / den).re
    }
}

#[derive(Clone, Debug)]
pub struct DecayRates {
    pub analytic: Vec<f64>,
    pub numeric: Vec<f64>,
    /// Largest `|analytic − numeric| / |analytic|` over the trace.
    pub max_deviation: f64,
}

/// Evolves `Ψ̂(0) = Σ c0_λ φ_λ` under the spectrum of `H_eff(energy)`.
pub fn evolve(spectrum: &ResonanceSpectrum, energy: f64, c0: &[Complex64], times: &[f64]) -> Result<DecayTrace> {
    if spectrum.energy != energy {
        return Err(Error::InvalidInput(format!(
            "spectrum was computed at E = {}, requested E = {energy}",
            spectrum.energy
        )));
    }
    if spectrum.defective {
        return Err(Error::EpProximal { energy });
    }
    if c0.len() != spectrum.len() {
        return Err(Error::InvalidInput(format!("{} initial coefficients for {} states", c0.len(), spectrum.len())));
    }
    if c0.iter().all(|c| c.norm() == 0.0) {
        return Err(Error::InvalidInput("initial state is zero".into()));
    }
    if times.first() != Some(&0.0) {
        return Err(Error::InvalidInput("time grid must start at t = 0".into()));
    }
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("times must be finite, non-negative and strictly increasing".into()));
    }

    let widths = spectrum.widths();
    let d: Vec<Complex64> = c0.iter().map(|c| c.conj()).collect();
    let mut trace = DecayTrace {
        times: Vec::with_capacity(times.len()),
        widths,
        c0: c0.to_vec(),
        d,
        population: Vec::with_capacity(times.len()),
        full_norm: Vec::with_capacity(times.len()),
        truncated: false,
    };
    for &t in times {
        let p = trace.population_at(t);
        if p.norm() < UNDERFLOW {
            trace.truncated = true;
            break;
        }
        trace.times.push(t);
        trace.population.push(p);
        trace.full_norm.push(full_norm(spectrum, c0, t));
    }
    Ok(trace)
}

fn full_norm(spectrum: &ResonanceSpectrum, c0: &[Complex64], t: f64) -> f64 {
    let n = spectrum.len();
    let amp: Vec<Complex64> = (0..n)
        .map(|l| c0[l] * (Complex64::new(0.0, -t) * spectrum.eigenvalues[l]).exp())
        .collect();
    let b: &Mat<Complex64> = &spectrum.b_matrix;
    let mut acc = Complex64::new(0.0, 0.0);
    for l in 0..n {
        for m in 0..n {
            acc += amp[l].conj() * amp[m] * b[(l, m)];
        }
    }
    acc.re
}

/// `k_gr(t)` on the trace grid, from the analytic weighted mean and from a
/// five-point central difference of `ln|P|` with step `10⁻³/Γ_max`.
/// The stencil is evaluated through the closed-form sum, so it may straddle `t = 0`.
pub fn decay_rate(trace: &DecayTrace) -> Result<DecayRates> {
    if trace.population.is_empty() {
        return Err(Error::InvalidInput("empty trace".into()));
    }
    let gmax = trace.widths.iter().copied().fold(0.0, f64::max);
    let h = if gmax > 0.0 { 1e-3 / gmax } else { 1e-3 };
    let ln_p = |t: f64| trace.population_at(t).norm().ln();
    let analytic: Vec<f64> = trace.times.iter().map(|&t| trace.rate_at(t)).collect();
    let numeric: Vec<f64> = trace
        .times
        .iter()
        .map(|&t| -(ln_p(t - 2.0 * h) - 8.0 * ln_p(t - h) + 8.0 * ln_p(t + h) - ln_p(t + 2.0 * h)) / (12.0 * h))
        .collect();
    let mut max_deviation = 0.0f64;
    for (a, n) in analytic.iter().zip(&numeric) {
        let scale = a.abs().max(1e-12 * gmax);
        if scale > 0.0 {
            max_deviation = max_deviation.max((a - n).abs() / scale);
        }
    }
    if !(max_deviation <= RATE_AGREEMENT_TOL) {
        return Err(Error::InternalConsistency { check: "decay rate analytic vs finite difference", residual: max_deviation });
    }
    Ok(DecayRates { analytic, numeric, max_deviation })
}

/// Normalized expansion coefficients of the internal state excited from `channel`.
pub fn scattering_excitation(model: &SystemModel, spectrum: &ResonanceSpectrum, energy: f64, channel: usize) -> Result<Vec<Complex64>> {
    let mut c = scattering::expansion_coefficients(model, spectrum, energy, channel)?;
    let norm = c.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return Err(Error::InvalidInput(format!("channel {channel} does not excite the internal states at E = {energy}")));
    }
    for x in c.iter_mut() {
        *x /= norm;
    }
    Ok(c)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SaturationRow {
    pub g: f64,
    /// Mean width of the `N − 1` narrowest states.
    pub gamma_av: f64,
    /// `k_av = Γ_av` (ħ = 1).
    pub k_av: f64,
    /// `τ_av = 1/Γ_av`.
    pub tau_av: f64,
    /// Width of the broadest state.
    pub gamma_max: f64,
}

/// Average decay rate of the trapped states as the coupling is scaled by `g`.
pub fn average_rate_saturation(model: &SystemModel, g_grid: &[f64]) -> Result<Vec<SaturationRow>> {
    let n = model.n_levels();
    if n < 3 {
        return Err(Error::InvalidInput(format!("saturation needs at least 3 levels, model has {n}")));
    }
    if model.n_channels() != 1 || !matches!(model.channels()[0], Channel::Wideband { .. }) {
        return Err(Error::InvalidInput("saturation needs exactly one wideband channel".into()));
    }
    if g_grid.iter().any(|g| !g.is_finite()) {
        return Err(Error::InvalidInput("coupling grid contains non-finite values".into()));
    }
    g_grid
        .par_iter()
        .map(|&g| {
            let scaled = model.with_coupling_scale(g)?;
            // wideband: H_eff does not depend on E, so every state is its own fixed point
            let spectrum = diagonalize(&build_h_eff(&scaled, 0.0)?)?;
            let mut widths = spectrum.widths();
            widths.sort_by(f64::total_cmp);
            let gamma_av = widths[..n - 1].iter().sum::<f64>() / (n - 1) as f64;
            Ok(SaturationRow { g, gamma_av, k_av: gamma_av, tau_av: 1.0 / gamma_av, gamma_max: widths[n - 1] })
        })
        .collect()
}
