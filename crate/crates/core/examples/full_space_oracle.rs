//! A level in a discretized flat band: exact survival probability against the
//! H_eff decay law, and the resonance read off the local density of states.

use num_complex::Complex64;
use resonance_lab::model::presets;
use resonance_lab::oracle::{build_full, extract_resonance, survival_probability};
use resonance_lab::spectral::resonance_states;

fn main() -> resonance_lab::Result<()> {
    let model = presets::single_level_flatband(0.0, 0.0892, -10.0, 10.0, 1.0)?;
    let state = resonance_states(&model, 1e-13)?.remove(0);
    let full = build_full(&model, 2000, None)?;
    let spectrum = full.diagonalize()?;
    let init = [Complex64::new(1.0, 0.0)];
    let times: Vec<f64> = (0..=10).map(|k| 10.0 * k as f64).collect();
    let surv = survival_probability(&full, &spectrum, &init, &times)?;
    for (t, p) in times.iter().zip(&surv.probability) {
        println!("t = {t:5.1}  oracle {p:.6}  H_eff {:.6}", (-state.gamma_lambda * t).exp());
    }
    let fit = extract_resonance(&spectrum, &init, (state.e_lambda, state.gamma_lambda))?;
    println!("H_eff:      E = {:+.6}  Γ = {:.6}", state.e_lambda, state.gamma_lambda);
    println!("Lorentzian: E = {:+.6}  Γ = {:.6}  ({} samples)", fit.position, fit.width, fit.samples);
    println!("recurrence time {:.1}", surv.recurrence_time);
    Ok(())
}
