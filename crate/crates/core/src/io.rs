//! Plot-ready artifacts: long-format CSV tables with 17 significant digits and
//! JSON documents for exceptional points, BIC reports and run manifests.

use std::io::{self, Write};

use serde_json::{json, Value};

use crate::bic::{BicCandidate, BicReport, Check};
use crate::dynamics::{DecayRates, DecayTrace, SaturationRow};
use crate::scattering::ScatteringPoint;
use crate::spectral::{ExceptionalPoint, ResonanceSpectrum, ResonanceState, SweepResult};

/// Scientific notation with 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn row(w: &mut impl Write, cells: &[String]) -> io::Result<()> {
    writeln!(w, "{}", cells.join(","))
}

pub fn write_sweep_csv(w: &mut impl Write, sweep: &SweepResult) -> io::Result<()> {
    writeln!(w, "param,branch_id,E_lambda,Gamma_lambda,r_lambda,A_lambda,converged")?;
    for p in &sweep.points {
        for s in &p.states {
            row(
                w,
                &[
                    num(p.param_value),
                    s.branch_id.to_string(),
                    num(s.e_lambda),
                    num(s.gamma_lambda),
                    num(s.phase_rigidity),
                    num(s.a_lambda),
                    s.converged.to_string(),
                ],
            )?;
        }
    }
    Ok(())
}

pub fn write_spectrum_csv(w: &mut impl Write, spectrum: &ResonanceSpectrum) -> io::Result<()> {
    writeln!(w, "lambda,re_z,im_z,Gamma,r_lambda,A_lambda")?;
    for l in 0..spectrum.len() {
        let z = spectrum.eigenvalues[l];
        row(
            w,
            &[l.to_string(), num(z.re), num(z.im), num(-2.0 * z.im), num(spectrum.phase_rigidity[l]), num(spectrum.a_diag[l])],
        )?;
    }
    Ok(())
}

pub fn write_states_csv(w: &mut impl Write, states: &[ResonanceState]) -> io::Result<()> {
    writeln!(w, "branch_id,E_lambda,Gamma_lambda,r_lambda,A_lambda,converged,iterations")?;
    for s in states {
        row(
            w,
            &[
                s.branch_id.to_string(),
                num(s.e_lambda),
                num(s.gamma_lambda),
                num(s.phase_rigidity),
                num(s.a_lambda),
                s.converged.to_string(),
                s.iterations.to_string(),
            ],
        )?;
    }
    Ok(())
}

/// One row per energy: `|S|²` and `arg S` for every ordered channel pair (`nan` when a
/// channel is closed), `|t|²` for every ordered pair of distinct channels, then `ρ` and `θ`.
pub fn write_scan_csv(w: &mut impl Write, points: &[ScatteringPoint], n_channels: usize) -> io::Result<()> {
    let mut header = vec!["energy".to_string()];
    for to in 0..n_channels {
        for from in 0..n_channels {
            header.push(format!("S_{to}_{from}_abs2"));
            header.push(format!("S_{to}_{from}_arg"));
        }
    }
    for to in 0..n_channels {
        for from in 0..n_channels {
            if to != from {
                header.push(format!("t_{to}_{from}_abs2"));
            }
        }
    }
    header.push("rho".into());
    header.push("theta".into());
    row(w, &header)?;
    for p in points {
        let mut cells = vec![num(p.energy)];
        for to in 0..n_channels {
            for from in 0..n_channels {
                match p.s_full.get(to, from) {
                    Some(s) => {
                        cells.push(num(s.norm_sqr()));
                        cells.push(num(s.arg()));
                    }
                    None => {
                        cells.push("nan".into());
                        cells.push("nan".into());
                    }
                }
            }
        }
        for to in 0..n_channels {
            for from in 0..n_channels {
                if to != from {
                    cells.push(num(p.transmission[(to, from)].norm_sqr()));
                }
            }
        }
        match p.rigidity {
            Some(r) => {
                cells.push(num(r.rho));
                cells.push(num(r.theta));
            }
            None => {
                cells.push("nan".into());
                cells.push("nan".into());
            }
        }
        row(w, &cells)?;
    }
    Ok(())
}

pub fn write_trace_csv(w: &mut impl Write, trace: &DecayTrace, rates: &DecayRates) -> io::Result<()> {
    writeln!(w, "t,re_population,im_population,abs2_population,k_analytic,k_numeric,full_norm")?;
    for i in 0..trace.times.len() {
        let p = trace.population[i];
        row(
            w,
            &[
                num(trace.times[i]),
                num(p.re),
                num(p.im),
                num(p.norm_sqr()),
                num(rates.analytic[i]),
                num(rates.numeric[i]),
                num(trace.full_norm[i]),
            ],
        )?;
    }
    Ok(())
}

pub fn write_saturation_csv(w: &mut impl Write, rows: &[SaturationRow]) -> io::Result<()> {
    writeln!(w, "g,Gamma_av,k_av,tau_av,Gamma_max")?;
    for r in rows {
        row(w, &[num(r.g), num(r.gamma_av), num(r.k_av), num(r.tau_av), num(r.gamma_max)])?;
    }
    Ok(())
}

/// Oracle survival probability next to the effective-Hamiltonian population.
pub fn write_oracle_csv(w: &mut impl Write, times: &[f64], survival: &[f64], level_population: &[f64], population: &[f64]) -> io::Result<()> {
    writeln!(w, "t,survival,level_population,heff_population")?;
    for i in 0..times.len() {
        row(w, &[num(times[i]), num(survival[i]), num(level_population[i]), num(population[i])])?;
    }
    Ok(())
}

/// JSON numbers cannot hold non-finite values; those become strings.
fn jnum(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!(x.to_string())
    }
}

pub fn exceptional_points_json(points: &[ExceptionalPoint]) -> Value {
    Value::Array(
        points
            .iter()
            .map(|ep| {
                json!({
                    "param_value": jnum(ep.param_value),
                    "bracket": [jnum(ep.bracket.0), jnum(ep.bracket.1)],
                    "energy_value": { "re": jnum(ep.energy_value.re), "im": jnum(ep.energy_value.im) },
                    "branch_pair": [ep.branch_pair.0, ep.branch_pair.1],
                    "min_separation": jnum(ep.min_separation),
                    "min_rigidity": jnum(ep.min_rigidity),
                    "coalescence_deviation": jnum(ep.coalescence_deviation),
                })
            })
            .collect(),
    )
}

fn check_json(c: &Check) -> Value {
    json!({ "passed": c.passed, "residual": jnum(c.residual) })
}

pub fn bic_json(candidates: &[(BicCandidate, Option<BicReport>)]) -> Value {
    Value::Array(
        candidates
            .iter()
            .map(|(c, report)| {
                json!({
                    "param": c.param,
                    "param_value": jnum(c.param_value),
                    "energy": jnum(c.energy),
                    "width_at_min": jnum(c.width_at_min),
                    "branch_id": c.branch_id,
                    "partner_branch": c.partner_branch,
                    "partner_width": jnum(c.partner_width),
                    "decoupling_residuals": c.decoupling_residuals.iter().map(|r| jnum(*r)).collect::<Vec<_>>(),
                    "true_bic": c.is_true_bic,
                    "symmetric_couplings": c.symmetric_couplings,
                    "width_inequality_holds": c.width_inequality_holds,
                    "verification": report.as_ref().map(|r| json!({
                        "passed": r.passed,
                        "decoupling": check_json(&r.decoupling),
                        "form_factor_sum": check_json(&r.form_factor_sum),
                        "s_matrix_regular": check_json(&r.s_matrix_regular),
                        "phase_jump": check_json(&r.phase_jump),
                        "phase_change": jnum(r.phase_change),
                        "population": check_json(&r.population),
                    })),
                })
            })
            .collect(),
    )
}

/// Pretty-printed JSON followed by a newline.
pub fn write_json(w: &mut impl Write, value: &Value) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut *w, value)?;
    writeln!(w)
}
