//! Transmission through four levels between two leads, next to the rigidity of the
//! scattering wave function.

use resonance_lab::model::presets;
use resonance_lab::scattering::scan;

fn main() -> resonance_lab::Result<()> {
    let model = presets::four_level_crossover(0.5)?;
    let energies: Vec<f64> = (0..=50).map(|k| -2.5 + 0.1 * k as f64).collect();
    for p in scan(&model, &energies, 0)? {
        let t = p.transmission[(1, 0)].norm();
        let rho = p.rigidity.map_or(f64::NAN, |r| r.rho);
        println!("E = {:+.2}  |t| = {t:.4}  ρ = {rho:.4}  ‖S†S − I‖ = {:.1e}", p.energy, p.s_full.unitarity_residual());
    }
    Ok(())
}
