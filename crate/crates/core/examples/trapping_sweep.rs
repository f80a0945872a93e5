//! Two levels and one channel: widths bifurcate past the exceptional point at g = √d.

use resonance_lab::model::presets;
use resonance_lab::spectral::{find_exceptional_points, sweep};

fn main() -> resonance_lab::Result<()> {
    let model = presets::two_level_trapping(0.25, 0.01)?;
    let grid: Vec<f64> = (0..41).map(|k| 0.0113 + 0.025 * k as f64).collect();
    let result = sweep(&model, "g", &grid, 1e-12)?;
    for p in result.points.iter().step_by(4) {
        let [a, b] = [&p.states[0], &p.states[1]];
        println!(
            "g = {:.4}  E = ({:+.5}, {:+.5})  Γ = ({:.5}, {:.5})  r = ({:.3}, {:.3})",
            p.param_value, a.e_lambda, b.e_lambda, a.gamma_lambda, b.gamma_lambda, a.phase_rigidity, b.phase_rigidity
        );
    }
    for ep in find_exceptional_points(&result, 0.5, 0.5) {
        println!("exceptional point at g = {:.8}, z = {:.6}, min r = {:.1e}", ep.param_value, ep.energy_value, ep.min_rigidity);
    }
    Ok(())
}
