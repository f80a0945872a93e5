//! A bound state in the continuum: two degenerate levels seeing both channels through
//! the same coupling combination.

use resonance_lab::bic::{find_bics, verify_bic, DEFAULT_WIDTH_TOL};
use resonance_lab::model::presets;
use resonance_lab::spectral::sweep;

fn main() -> resonance_lab::Result<()> {
    for asymmetry in [1.0, 0.9] {
        let model = presets::two_level_bic(0.0, -0.5, 0.2, asymmetry)?;
        let grid: Vec<f64> = (0..41).map(|k| -0.5013 + 0.025 * k as f64).collect();
        let result = sweep(&model, "e2", &grid, 1e-13)?;
        println!("asymmetry {asymmetry}");
        for c in find_bics(&result, DEFAULT_WIDTH_TOL)? {
            print!("  e2 = {:+.3e}  Γ_min = {:.3e}  partner Γ = {:.4}  true BIC: {}", c.param_value, c.width_at_min, c.partner_width, c.is_true_bic);
            if c.is_true_bic {
                let report = verify_bic(&c, &model)?;
                print!("  phase jump {:.6}  verified: {}", report.phase_change, report.passed);
            }
            println!();
        }
    }
    Ok(())
}
