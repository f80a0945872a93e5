//! Time evolution of a state excited from channel 0; the decay rate drifts from a
//! weighted mean of the widths to the smallest width.

use resonance_lab::dynamics::{decay_rate, evolve, scattering_excitation};
use resonance_lab::model::presets;
use resonance_lab::{build_h_eff, diagonalize};

fn main() -> resonance_lab::Result<()> {
    let model = presets::six_level_saturation(1.0)?;
    let s = diagonalize(&build_h_eff(&model, 0.0)?)?;
    let c0 = scattering_excitation(&model, &s, 0.0, 0)?;
    let times: Vec<f64> = (0..=20).map(|k| 2.0 * k as f64).collect();
    let trace = evolve(&s, 0.0, &c0, &times)?;
    let rates = decay_rate(&trace)?;
    println!("widths {:?}", s.widths().iter().map(|g| format!("{g:.4}")).collect::<Vec<_>>());
    for i in 0..trace.times.len() {
        println!("t = {:5.1}  P = {:.6e}  k_gr = {:.6}", trace.times[i], trace.population[i].re, rates.analytic[i]);
    }
    Ok(())
}
