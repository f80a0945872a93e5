//! Exceptional-point detection along a sweep.
//!
//! A candidate is a local minimum of `|z_λ − z_λ′|` over the grid that is both
//! small (`sep_tol`) and accompanied by a phase-rigidity collapse (`rig_tol`).
//! Its location is then refined by golden-section search on the separation.

use num_complex::Complex64;

use super::diagonalize::{diagonalize, ResonanceSpectrum};
use super::sweep::SweepResult;
use crate::linalg;
use crate::model::build_h_eff;

#[derive(Clone, Debug, PartialEq)]
pub struct ExceptionalPoint {
    pub param_value: f64,
    /// Grid interval that bracketed the minimum.
    pub bracket: (f64, f64),
    /// Coalesced eigenvalue, the mean of the pair at `param_value`.
    pub energy_value: Complex64,
    pub branch_pair: (usize, usize),
    pub min_separation: f64,
    pub min_rigidity: f64,
    /// `min_± ‖φ_λ ∓ iφ_λ′‖ / ‖φ_λ‖` at the refined point; tends to zero at coalescence.
    pub coalescence_deviation: f64,
}

const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Golden-section minimization of `f` on `[lo, hi]`.
pub(crate) fn golden_section(mut f: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let mut x1 = hi - GOLDEN * (hi - lo);
    let mut x2 = lo + GOLDEN * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..300 {
        if (hi - lo).abs() <= tol {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - GOLDEN * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + GOLDEN * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

struct PairProbe {
    separation: f64,
    rigidity: f64,
    center: Complex64,
    deviation: f64,
}

/// Diagonalizes at parameter `x` and picks the two eigenvalues nearest to `target`.
fn probe(sweep: &SweepResult, x: f64, energy: f64, target: Complex64) -> Option<PairProbe> {
    let model = sweep.model_at(x).ok()?;
    let spectrum = diagonalize(&build_h_eff(&model, energy).ok()?).ok()?;
    if spectrum.len() < 2 {
        return None;
    }
    let mut idx: Vec<usize> = (0..spectrum.len()).collect();
    idx.sort_by(|&a, &b| {
        (spectrum.eigenvalues[a] - target)
            .norm()
            .total_cmp(&(spectrum.eigenvalues[b] - target).norm())
    });
    let (a, b) = (idx[0], idx[1]);
    Some(PairProbe {
        separation: (spectrum.eigenvalues[a] - spectrum.eigenvalues[b]).norm(),
        rigidity: spectrum.phase_rigidity[a].min(spectrum.phase_rigidity[b]),
        center: 0.5 * (spectrum.eigenvalues[a] + spectrum.eigenvalues[b]),
        deviation: coalescence_deviation(&spectrum, a, b),
    })
}

fn coalescence_deviation(spectrum: &ResonanceSpectrum, a: usize, b: usize) -> f64 {
    let pa = spectrum.eigenvector(a);
    let pb = spectrum.eigenvector(b);
    if spectrum.defective {
        // unnormalized unit vectors: report the departure from parallelism
        return 1.0 - linalg::hermitian(&pa, &pb).norm();
    }
    let i = Complex64::i();
    [i, -i]
        .iter()
        .map(|s| {
            let d: Vec<Complex64> = pa.iter().zip(&pb).map(|(x, y)| x - s * y).collect();
            linalg::norm(&d) / linalg::norm(&pa)
        })
        .fold(f64::INFINITY, f64::min)
}

pub fn find_exceptional_points(sweep: &SweepResult, sep_tol: f64, rig_tol: f64) -> Vec<ExceptionalPoint> {
    let pts = &sweep.points;
    if pts.len() < 3 {
        return Vec::new();
    }
    let n = sweep.n_branches();
    let mut found = Vec::new();
    for la in 0..n {
        for lb in la + 1..n {
            let sep: Vec<f64> = pts
                .iter()
                .map(|p| (p.states[la].eigenvalue - p.states[lb].eigenvalue).norm())
                .collect();
            for i in 1..pts.len() - 1 {
                if !(sep[i] <= sep[i - 1] && sep[i] <= sep[i + 1]) || sep[i] == sep[i - 1] && sep[i] == sep[i + 1] {
                    continue;
                }
                let (sa, sb) = (&pts[i].states[la], &pts[i].states[lb]);
                let grid_rigidity = sa.phase_rigidity.min(sb.phase_rigidity);
                if !(sep[i] < sep_tol && grid_rigidity < rig_tol) {
                    continue;
                }
                let (lo, hi) = (pts[i - 1].param_value, pts[i + 1].param_value);
                let interp = |x: f64| -> (f64, Complex64) {
                    let k = if (x - pts[i].param_value) * (hi - lo) <= 0.0 { i - 1 } else { i };
                    let (x0, x1) = (pts[k].param_value, pts[k + 1].param_value);
                    let t = ((x - x0) / (x1 - x0)).clamp(0.0, 1.0);
                    let mid = |p: &super::sweep::SweepPoint| {
                        (
                            0.5 * (p.states[la].e_lambda + p.states[lb].e_lambda),
                            0.5 * (p.states[la].eigenvalue + p.states[lb].eigenvalue),
                        )
                    };
                    let (e0, z0) = mid(&pts[k]);
                    let (e1, z1) = mid(&pts[k + 1]);
                    (e0 + t * (e1 - e0), z0 + (z1 - z0) * t)
                };
                let objective = |x: f64| {
                    let (e, z) = interp(x);
                    probe(sweep, x, e, z).map_or(f64::INFINITY, |p| p.separation)
                };
                let tol = 1e-14 * lo.abs().max(hi.abs()).max(1e-300) + 1e-15 * (hi - lo).abs();
                let (a, b) = if lo < hi { (lo, hi) } else { (hi, lo) };
                let (x_ep, _) = golden_section(objective, a, b, tol);
                let (e, z) = interp(x_ep);
                let Some(p) = probe(sweep, x_ep, e, z) else { continue };
                found.push(ExceptionalPoint {
                    param_value: x_ep,
                    bracket: (a, b),
                    energy_value: p.center,
                    branch_pair: (la, lb),
                    min_separation: p.separation.min(sep[i]),
                    min_rigidity: p.rigidity.min(grid_rigidity),
                    coalescence_deviation: p.deviation,
                });
            }
        }
    }
    found.sort_by(|a, b| a.param_value.total_cmp(&b.param_value));
    found
}
