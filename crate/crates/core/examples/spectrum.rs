//! Eigenvalues, bilinear norms and phase rigidities of H_eff at one energy.

use resonance_lab::model::presets;
use resonance_lab::{build_h_eff, diagonalize};

fn main() -> resonance_lab::Result<()> {
    let model = presets::four_level_crossover(0.5)?;
    let h = build_h_eff(&model, 0.3)?;
    let s = diagonalize(&h)?;
    println!("{:>3} {:>12} {:>12} {:>10} {:>10}", "λ", "Re z", "Γ", "A_λ", "r_λ");
    for l in 0..s.len() {
        let z = s.eigenvalues[l];
        println!("{l:>3} {:>12.6} {:>12.6} {:>10.6} {:>10.6}", z.re, -2.0 * z.im, s.a_diag[l], s.phase_rigidity[l]);
    }
    println!("biorthogonality residual {:.1e}", s.biorthogonality_residual());
    Ok(())
}
