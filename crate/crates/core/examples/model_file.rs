//! Parameterized model text, parsed and re-evaluated at another parameter value.

use resonance_lab::model::parse_model;
use resonance_lab::{build_h_eff, diagonalize};

const MODEL: &str = r#"
size = 2

[params]
d = 0.25
g = 0.3

[hamiltonian]
diagonal = ["-$d", "$d"]

[[channels]]
kind = "wideband"
dos = 0.3183098861837907

[couplings]
matrix = [["$g"], ["$g"]]
"#;

fn main() -> resonance_lab::Result<()> {
    let model = parse_model(MODEL, "inline")?;
    for g in [0.3, 0.5, 0.7] {
        let m = model.with_param("g", g)?;
        let s = diagonalize(&build_h_eff(&m, 0.0)?)?;
        println!("g = {g}: z = {:.6}, {:.6}  defective: {}", s.eigenvalues[0], s.eigenvalues[1], s.defective);
    }
    let typo = MODEL.replace("\"-$d\"", "\"-$dd\"");
    match parse_model(&typo, "typo") {
        Err(e) => println!("rejected: {e}"),
        Ok(_) => println!("unexpectedly accepted"),
    }
    Ok(())
}
