//! Average decay rate of the trapped states as the coupling strength grows.

use resonance_lab::dynamics::average_rate_saturation;
use resonance_lab::model::presets;

fn main() -> resonance_lab::Result<()> {
    let model = presets::six_level_saturation(1.0)?;
    let grid: Vec<f64> = (0..=16).map(|k| 10f64.powf(-2.0 + 0.25 * k as f64)).collect();
    for row in average_rate_saturation(&model, &grid)? {
        println!("g = {:9.4}  k_av = {:.5}  τ_av = {:9.3}  Γ_max = {:.3e}", row.g, row.k_av, row.tau_av, row.gamma_max);
    }
    Ok(())
}
