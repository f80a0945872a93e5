use faer::Mat;
use num_complex::Complex64;
use rayon::prelude::*;

use super::fixed_point::{follow, follow_branch, ResonanceState};
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::SystemModel;

/// Maximum number of step bisections when branch matching is ambiguous.
pub const MAX_REFINEMENT_LEVELS: usize = 8;

#[derive(Clone, Debug)]
pub struct SweepPoint {
    pub param_value: f64,
    /// One state per branch, indexed by `branch_id`.
    pub states: Vec<ResonanceState>,
    /// Number of intermediate points inserted to resolve branch identity on the way here.
    pub refinements: usize,
    /// Branches whose identity was still tied after the last refinement and was
    /// assigned by the deterministic tie-break (a symmetric branch point was crossed).
    pub tie_breaks: usize,
}

/// Eigenvalue trajectories `z_λ(X)` of the fixed-point resonances along one parameter.
#[derive(Clone, Debug)]
pub struct SweepResult {
    pub model: SystemModel,
    pub param: String,
    pub tol_fp: f64,
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn n_branches(&self) -> usize {
        self.points.first().map_or(0, |p| p.states.len())
    }

    pub fn grid(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.param_value).collect()
    }

    pub fn trajectory(&self, branch: usize) -> impl Iterator<Item = &ResonanceState> + '_ {
        self.points.iter().map(move |p| &p.states[branch])
    }

    /// The model evaluated at a parameter value (not necessarily on the grid).
    pub fn model_at(&self, value: f64) -> Result<SystemModel> {
        self.model.with_param(&self.param, value)
    }
}

pub fn sweep(model: &SystemModel, param: &str, grid: &[f64], tol_fp: f64) -> Result<SweepResult> {
    if model.param(param).is_none() {
        return Err(Error::UnknownParameter(param.to_string()));
    }
    if grid.len() < 2 {
        return Err(Error::InvalidInput("sweep grid needs at least two points".into()));
    }
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("sweep grid contains non-finite values".into()));
    }
    let increasing = grid.windows(2).all(|w| w[1] > w[0]);
    let decreasing = grid.windows(2).all(|w| w[1] < w[0]);
    if !(increasing || decreasing) {
        return Err(Error::InvalidInput("sweep grid must be strictly monotone".into()));
    }

    let first = model.with_param(param, grid[0])?;
    let mut points = vec![SweepPoint {
        param_value: grid[0],
        states: resonance_states(&first, tol_fp)?,
        refinements: 0,
        tie_breaks: 0,
    }];
    for &x in &grid[1..] {
        let prev = points.last().expect("non-empty");
        let mut counts = (0, 0);
        let states = step(model, param, prev.param_value, &prev.states, x, tol_fp, 0, &mut counts)?;
        points.push(SweepPoint { param_value: x, states, refinements: counts.0, tie_breaks: counts.1 });
    }
    Ok(SweepResult {
        model: model.clone(),
        param: param.to_string(),
        tol_fp,
        points,
    })
}

/// Fixed-point resonances of every branch, seeded from the eigenvectors of the
/// closed system `H_B` in ascending energy; `branch_id` is the seed index.
pub fn resonance_states(model: &SystemModel, tol_fp: f64) -> Result<Vec<ResonanceState>> {
    let n = model.n_levels();
    let hb = Mat::<f64>::from_fn(n, n, |i, j| model.hb()[(i, j)]);
    let (energies, vectors) = linalg::symmetric_eigen(&hb).ok_or_else(|| Error::NumericalFailure {
        context: "closed-system eigenvectors".into(),
        frobenius_norm: hb.norm_l2(),
        max_entry: hb.norm_max(),
    })?;
    let states = (0..n)
        .into_par_iter()
        .map(|b| {
            let seed: Vec<Complex64> = (0..n).map(|i| Complex64::new(vectors[(i, b)], 0.0)).collect();
            follow_branch(model, energies[b], &seed, tol_fp, b)
        })
        .collect::<Result<Vec<_>>>()?;
    check_distinct(&states, "initial point")?;
    Ok(states)
}

#[allow(clippy::too_many_arguments)]
fn step(
    model: &SystemModel,
    param: &str,
    from: f64,
    prev: &[ResonanceState],
    to: f64,
    tol_fp: f64,
    depth: usize,
    counts: &mut (usize, usize),
) -> Result<Vec<ResonanceState>> {
    let target = model.with_param(param, to)?;
    match advance(&target, prev, tol_fp, to) {
        Err(Error::BranchAmbiguity { .. }) if depth < MAX_REFINEMENT_LEVELS => {
            let mid = 0.5 * (from + to);
            counts.0 += 1;
            let half = step(model, param, from, prev, mid, tol_fp, depth + 1, counts)?;
            step(model, param, mid, &half, to, tol_fp, depth + 1, counts)
        }
        Err(err @ Error::BranchAmbiguity { .. }) => {
            let (states, broken) = advance_tie_broken(&target, prev, tol_fp).ok_or(err)?;
            counts.1 += broken;
            Ok(states)
        }
        other => other,
    }
}

/// At an exactly symmetric branch point the overlaps of the tied branches are equal
/// however small the step. The tied branches are then ranked by `(E_λ, Γ_λ)` at the
/// previous point and take the tied candidates in `(Im z, Re z)` order.
fn advance_tie_broken(model: &SystemModel, prev: &[ResonanceState], tol_fp: f64) -> Option<(Vec<ResonanceState>, usize)> {
    let first: Vec<Result<ResonanceState>> = prev
        .par_iter()
        .map(|s| follow(model, s.e_lambda, &s.eigvec, tol_fp, s.branch_id, None))
        .collect();
    let mut tied: Vec<usize> = (0..prev.len())
        .filter(|&b| matches!(first[b], Err(Error::BranchAmbiguity { .. })))
        .collect();
    if first.iter().any(|r| matches!(r, Err(e) if !matches!(e, Error::BranchAmbiguity { .. }))) {
        return None;
    }
    tied.sort_by(|&a, &b| {
        prev[a]
            .e_lambda
            .total_cmp(&prev[b].e_lambda)
            .then(prev[a].gamma_lambda.total_cmp(&prev[b].gamma_lambda))
    });
    let mut states: Vec<Option<ResonanceState>> = first.into_iter().map(|r| r.ok()).collect();
    for (rank, &b) in tied.iter().enumerate() {
        let s = &prev[b];
        states[b] = Some(follow(model, s.e_lambda, &s.eigvec, tol_fp, s.branch_id, Some(rank)).ok()?);
    }
    let states: Vec<ResonanceState> = states.into_iter().collect::<Option<_>>()?;
    check_distinct(&states, "tie-broken step").ok()?;
    Some((states, tied.len()))
}

fn advance(model: &SystemModel, prev: &[ResonanceState], tol_fp: f64, x: f64) -> Result<Vec<ResonanceState>> {
    let states = prev
        .par_iter()
        .map(|s| follow_branch(model, s.e_lambda, &s.eigvec, tol_fp, s.branch_id))
        .collect::<Result<Vec<_>>>()?;
    check_distinct(&states, &format!("parameter {x}"))?;
    Ok(states)
}

/// Two branches that converged onto the same eigenpair mean the step lost track of one of them.
fn check_distinct(states: &[ResonanceState], location: &str) -> Result<()> {
    for (i, a) in states.iter().enumerate() {
        for b in &states[i + 1..] {
            let same_value = (a.eigenvalue - b.eigenvalue).norm() <= 1e-12 * (1.0 + a.eigenvalue.norm());
            let same_energy = (a.e_lambda - b.e_lambda).abs() <= 1e-12 * (1.0 + a.e_lambda.abs());
            if same_value && same_energy {
                let overlap = linalg::bilinear(&a.eigvec, &b.eigvec).norm();
                let norm = linalg::norm(&a.eigvec) * linalg::norm(&b.eigvec);
                if overlap > 0.5 * norm {
                    return Err(Error::BranchAmbiguity {
                        location: format!("{location}: branches {} and {} coincide", a.branch_id, b.branch_id),
                        best: overlap,
                        second: overlap,
                    });
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::presets;
    use crate::model::{ChannelTemplate, ModelBuilder, Scalar};
    use std::f64::consts::PI;

    fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
    }

    fn closed_form(d: f64, g: f64) -> [Complex64; 2] {
        let a = g * g;
        let root = Complex64::new(d * d - a * a, 0.0).sqrt();
        let c = Complex64::new(0.0, -a);
        [c - root, c + root]
    }

    /// Largest deviation under the better of the two pairings.
    fn pair_error(got: [Complex64; 2], want: [Complex64; 2]) -> f64 {
        let direct = (got[0] - want[0]).norm().max((got[1] - want[1]).norm());
        let swapped = (got[0] - want[1]).norm().max((got[1] - want[0]).norm());
        direct.min(swapped)
    }

    #[test]
    fn two_level_trajectories_follow_closed_form() {
        let d = 0.25;
        let model = presets::two_level_trapping(d, 0.01).unwrap();
        let grid = linspace(0.0103, 2.0, 120);
        let result = sweep(&model, "g", &grid, 1e-12).unwrap();
        assert_eq!(result.n_branches(), 2);
        for p in &result.points {
            let got = [p.states[0].eigenvalue, p.states[1].eigenvalue];
            let err = pair_error(got, closed_form(d, p.param_value));
            assert!(err < 1e-10, "g = {}: {got:?} off by {err}", p.param_value);
            assert!(p.states.iter().all(|s| s.converged));
        }
    }

    #[test]
    fn decoupled_trajectories_stay_at_closed_levels() {
        let model = ModelBuilder::new(2)
            .entry(0, 0, 0.0)
            .entry(0, 1, 0.3)
            .entry(1, 1, 1.0)
            .channel(ChannelTemplate::Wideband { dos: 1.0.into() }, vec![Scalar::scaled(0.0, "g"); 2])
            .param("g", 0.0)
            .build()
            .unwrap();
        let result = sweep(&model, "g", &linspace(0.0, 1.0, 5), 1e-12).unwrap();
        let disc = (0.25f64 + 0.09).sqrt();
        let expected = [0.5 - disc, 0.5 + disc];
        for p in &result.points {
            for (s, e) in p.states.iter().zip(expected) {
                assert!((s.e_lambda - e).abs() < 1e-14);
                assert_eq!(s.gamma_lambda, 0.0);
            }
        }
    }

    #[test]
    fn width_sum_rule_holds_along_sweep() {
        let model = ModelBuilder::new(3)
            .levels(&[-0.4, 0.1, 0.7])
            .entry(0, 1, 0.2)
            .entry(1, 2, -0.15)
            .channel(ChannelTemplate::Wideband { dos: 0.4.into() }, vec![Scalar::scaled(1.0, "g"), Scalar::scaled(0.5, "g"), Scalar::scaled(-0.7, "g")])
            .channel(ChannelTemplate::Wideband { dos: 0.2.into() }, vec![Scalar::scaled(0.3, "g"), Scalar::scaled(1.2, "g"), Scalar::scaled(0.4, "g")])
            .param("g", 0.01)
            .build()
            .unwrap();
        let result = sweep(&model, "g", &linspace(0.0137, 3.0, 80), 1e-12).unwrap();
        for p in &result.points {
            let total: f64 = p.states.iter().map(|s| s.gamma_lambda).sum();
            let rule = 2.0 * PI * result.model_at(p.param_value).unwrap().wideband_width_sum();
            assert!((total - rule).abs() <= 1e-9 * rule, "g = {}: {total} vs {rule}", p.param_value);
        }
    }

    #[test]
    fn strong_coupling_traps_all_but_one_state() {
        let model = ModelBuilder::new(3)
            .levels(&[-1.0, 0.2, 1.0])
            .channel(ChannelTemplate::Wideband { dos: 0.5.into() }, vec![Scalar::scaled(1.0, "g"), Scalar::scaled(0.7, "g"), Scalar::scaled(0.4, "g")])
            .param("g", 1e3)
            .build()
            .unwrap();
        let result = sweep(&model, "g", &[999.0, 1e3], 1e-12).unwrap();
        let mut widths: Vec<f64> = result.points[1].states.iter().map(|s| s.gamma_lambda).collect();
        widths.sort_by(f64::total_cmp);
        let limit = 2.0 * PI * 0.5 * 1e6 * (1.0 + 0.49 + 0.16);
        assert!((widths[2] - limit).abs() < 1e-9 * limit);
        assert!(widths[0] < 1e-5 && widths[1] < 1e-5, "{widths:?}");
        assert!(widths[0] >= 0.0);
    }

    #[test]
    fn level_repulsion_versus_width_bifurcation() {
        let d = 0.25;
        let model = presets::two_level_trapping(d, 0.1).unwrap();
        let s = sweep(&model, "g", &linspace(0.2013, 0.8013, 61), 1e-12).unwrap();
        let gap = |g: f64| {
            let z = closed_form(d, g);
            let p = s.points.iter().min_by(|a, b| (a.param_value - g).abs().total_cmp(&(b.param_value - g).abs())).unwrap();
            let z = if (p.param_value - g).abs() < 1e-12 { z } else { closed_form(d, p.param_value) };
            let st = &p.states;
            assert!(((st[0].eigenvalue - st[1].eigenvalue).norm() - (z[0] - z[1]).norm()).abs() < 1e-10);
            ((st[0].e_lambda - st[1].e_lambda).abs(), (st[0].gamma_lambda - st[1].gamma_lambda).abs())
        };
        // below the EP only the positions split and the split shrinks with g
        let (de1, dg1) = gap(0.3013);
        let (de2, dg2) = gap(0.4013);
        assert!(dg1 < 1e-10 && dg2 < 1e-10, "{dg1} {dg2}");
        assert!(de2 < de1);
        // above it only the widths split and the split grows with g
        let (de3, dg3) = gap(0.6013);
        let (de4, dg4) = gap(0.8013);
        assert!(de3 < 1e-10 && de4 < 1e-10, "{de3} {de4}");
        assert!(dg4 > dg3);

        // a real internal coupling repels the positions instead
        let repel = ModelBuilder::new(2)
            .levels(&[-d, d])
            .entry(0, 1, Scalar::param("u"))
            .channel(ChannelTemplate::Wideband { dos: (1.0 / PI).into() }, vec![0.1.into(), 0.1.into()])
            .param("u", 0.0)
            .build()
            .unwrap();
        let s = sweep(&repel, "u", &linspace(0.0, 0.5, 6), 1e-12).unwrap();
        let splits: Vec<f64> = s.points.iter().map(|p| (p.states[0].e_lambda - p.states[1].e_lambda).abs()).collect();
        assert!(splits.windows(2).all(|w| w[1] > w[0]), "{splits:?}");
    }

    #[test]
    fn consecutive_eigenvectors_overlap() {
        let model = presets::six_level_saturation(0.05).unwrap();
        let result = sweep(&model, "g", &linspace(0.05, 1.5, 60), 1e-12).unwrap();
        for w in result.points.windows(2) {
            for (a, b) in w[0].states.iter().zip(&w[1].states) {
                assert!(linalg::bilinear(&a.eigvec, &b.eigvec).norm() >= 0.5);
            }
        }
    }

    #[test]
    fn rejects_bad_grids_and_parameters() {
        let model = presets::two_level_trapping(0.25, 0.1).unwrap();
        assert!(matches!(sweep(&model, "h", &[0.1, 0.2], 1e-12), Err(Error::UnknownParameter(_))));
        assert!(matches!(sweep(&model, "g", &[0.1], 1e-12), Err(Error::InvalidInput(_))));
        assert!(matches!(sweep(&model, "g", &[0.1, 0.3, 0.2], 1e-12), Err(Error::InvalidInput(_))));
        assert!(matches!(sweep(&model, "g", &[0.1, f64::NAN], 1e-12), Err(Error::InvalidInput(_))));
        let down = sweep(&model, "g", &[0.3, 0.2, 0.1], 1e-12).unwrap();
        assert_eq!(down.grid(), vec![0.3, 0.2, 0.1]);
    }
}
