//! The `resonance-lab` command pipeline: argument handling, per-command module
//! orchestration, CSV/JSON artifacts and the run manifest.
//!
//! Exit status: `0` success, `1` input error, `2` invariant or internal failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, ValueEnum};
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::bic::{self, DEFAULT_WIDTH_TOL};
use crate::dynamics;
use crate::error::{Error, Result};
use crate::io;
use crate::model::{build_h_eff, read_model, Channel, SystemModel};
use crate::oracle;
use crate::scattering;
use crate::spectral::{self, diagonalize};

pub const DEFAULT_TOL_FP: f64 = 1e-12;
pub const DEFAULT_SEP_TOL: f64 = 0.5;
pub const DEFAULT_RIG_TOL: f64 = 0.5;
pub const THREADS_ENV: &str = "RESONANCE_LAB_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Eigenvalues of H_eff at one energy and the fixed-point resonances
    Spectrum,
    /// Resonance trajectories along a control parameter, with exceptional points
    Sweep,
    /// S-matrix, transmission and wave-function rigidity over an energy grid
    Scan,
    /// Population and decay rate of a scattering-excited state
    Trace,
    /// Bound states in the continuum along a control parameter
    Bic,
    /// Discretized full-space reference evolution
    Oracle,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Sweep => "sweep",
            Command::Scan => "scan",
            Command::Trace => "trace",
            Command::Bic => "bic",
            Command::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "resonance-lab", version, about = "Resonances, exceptional points and bound states in the continuum of open quantum systems")]
pub struct Args {
    #[arg(value_enum)]
    pub command: Command,
    /// Model definition file (TOML)
    #[arg(long)]
    pub model: PathBuf,
    /// Output directory for artifacts
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Control parameter to sweep
    #[arg(long)]
    pub param: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub from: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub to: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub energy_from: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub energy_to: Option<f64>,
    #[arg(long)]
    pub energy_steps: Option<usize>,
    /// Evaluation energy for `spectrum` and `trace`
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub energy: f64,
    /// Incoming channel for `scan` and `trace`
    #[arg(long, default_value_t = 0)]
    pub channel: usize,
    /// Initially populated level for `oracle`
    #[arg(long, default_value_t = 0)]
    pub level: usize,
    #[arg(long, default_value_t = DEFAULT_TOL_FP)]
    pub tol_fp: f64,
    #[arg(long, default_value_t = DEFAULT_WIDTH_TOL)]
    pub tol_width: f64,
    #[arg(long, default_value_t = DEFAULT_SEP_TOL)]
    pub tol_sep: f64,
    #[arg(long, default_value_t = DEFAULT_RIG_TOL)]
    pub tol_rig: f64,
    /// Worker threads
    #[arg(long, env = THREADS_ENV, default_value_t = 1)]
    pub threads: usize,
    /// Energy window `LO HI` that truncates wideband channels in `oracle`
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
    pub window: Option<Vec<f64>>,
    /// Bins per channel for `oracle`
    #[arg(long, default_value_t = 2000)]
    pub bins: usize,
    /// Final time for `trace` and `oracle` (default: five lifetimes)
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long, default_value_t = 201)]
    pub t_steps: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub from: f64,
    pub to: f64,
    pub steps: usize,
}

impl Grid {
    /// `steps` evenly spaced values; the last one is exactly `to`.
    pub fn values(&self) -> Vec<f64> {
        let n = self.steps;
        (0..n)
            .map(|k| if k + 1 == n { self.to } else { self.from + (self.to - self.from) * k as f64 / (n - 1) as f64 })
            .collect()
    }

    fn new(what: &str, from: Option<f64>, to: Option<f64>, steps: Option<usize>) -> Result<Option<Grid>> {
        match (from, to, steps) {
            (None, None, None) => Ok(None),
            (Some(from), Some(to), Some(steps)) => {
                if steps < 2 {
                    return Err(Error::InvalidInput(format!("{what} grid needs at least 2 steps")));
                }
                if !(from.is_finite() && to.is_finite()) || from == to {
                    return Err(Error::InvalidInput(format!("{what} grid bounds must be finite and distinct")));
                }
                Ok(Some(Grid { from, to, steps }))
            }
            _ => Err(Error::InvalidInput(format!("{what} grid needs all of from, to and steps"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub tol_fp: f64,
    pub width_tol: f64,
    pub sep_tol: f64,
    pub rig_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { tol_fp: DEFAULT_TOL_FP, width_tol: DEFAULT_WIDTH_TOL, sep_tol: DEFAULT_SEP_TOL, rig_tol: DEFAULT_RIG_TOL }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub model_path: PathBuf,
    pub output_dir: PathBuf,
    pub param: Option<String>,
    pub param_grid: Option<Grid>,
    pub energy_grid: Option<Grid>,
    pub energy: f64,
    pub channel: usize,
    pub level: usize,
    pub tolerances: Tolerances,
    pub threads: usize,
    pub window: Option<(f64, f64)>,
    pub bins: usize,
    pub t_max: Option<f64>,
    pub t_steps: usize,
}

impl RunConfig {
    /// Minimal configuration; grids and options default to unset.
    pub fn new(command: Command, model_path: impl Into<PathBuf>, output_dir: impl Into<PathBuf>) -> Self {
        RunConfig {
            command,
            model_path: model_path.into(),
            output_dir: output_dir.into(),
            param: None,
            param_grid: None,
            energy_grid: None,
            energy: 0.0,
            channel: 0,
            level: 0,
            tolerances: Tolerances::default(),
            threads: 1,
            window: None,
            bins: 2000,
            t_max: None,
            t_steps: 201,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let t = &self.tolerances;
        for (name, v) in [("tol-fp", t.tol_fp), ("tol-width", t.width_tol), ("tol-sep", t.sep_tol), ("tol-rig", t.rig_tol)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("--{name} must be a positive number, got {v}")));
            }
        }
        if self.threads == 0 {
            return Err(Error::InvalidInput("--threads must be at least 1".into()));
        }
        if !self.energy.is_finite() {
            return Err(Error::InvalidInput("--energy must be finite".into()));
        }
        if self.t_steps < 2 {
            return Err(Error::InvalidInput("--t-steps must be at least 2".into()));
        }
        if let Some(t) = self.t_max {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::InvalidInput("--t-max must be positive".into()));
            }
        }
        let needs_param = matches!(self.command, Command::Sweep | Command::Bic);
        if needs_param && (self.param.is_none() || self.param_grid.is_none()) {
            return Err(Error::InvalidInput(format!("`{}` needs --param, --from, --to and --steps", self.command.name())));
        }
        if self.command == Command::Scan && self.energy_grid.is_none() {
            return Err(Error::InvalidInput("`scan` needs --energy-from, --energy-to and --energy-steps".into()));
        }
        Ok(())
    }
}

impl TryFrom<Args> for RunConfig {
    type Error = Error;

    fn try_from(a: Args) -> Result<Self> {
        let window = match a.window.as_deref() {
            None => None,
            Some(&[lo, hi]) => Some((lo, hi)),
            Some(_) => return Err(Error::InvalidInput("--window takes two values".into())),
        };
        let config = RunConfig {
            command: a.command,
            model_path: a.model,
            output_dir: a.out,
            param: a.param,
            param_grid: Grid::new("parameter", a.from, a.to, a.steps)?,
            energy_grid: Grid::new("energy", a.energy_from, a.energy_to, a.energy_steps)?,
            energy: a.energy,
            channel: a.channel,
            level: a.level,
            tolerances: Tolerances { tol_fp: a.tol_fp, width_tol: a.tol_width, sep_tol: a.tol_sep, rig_tol: a.tol_rig },
            threads: a.threads,
            window,
            bins: a.bins,
            t_max: a.t_max,
            t_steps: a.t_steps,
        };
        config.validate()?;
        Ok(config)
    }
}

/// One entry of the invariant summary. Only `enforced` entries decide the exit status.
#[derive(Clone, Debug, PartialEq)]
pub struct Invariant {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub passed: bool,
    pub enforced: bool,
}

impl Invariant {
    fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Invariant { name: name.into(), value, limit, passed: value <= limit, enforced: true }
    }

    fn informational(self) -> Self {
        Invariant { enforced: false, ..self }
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub invariants: Vec<Invariant>,
    pub artifacts: Vec<PathBuf>,
    pub warnings: Vec<String>,
    pub manifest: Value,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        self.invariants.iter().all(|i| i.passed || !i.enforced)
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            2
        }
    }
}

#[derive(Default)]
struct Artifacts {
    files: Vec<(String, Vec<u8>)>,
    invariants: Vec<Invariant>,
    warnings: Vec<String>,
}

impl Artifacts {
    fn csv(&mut self, name: &str, write: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        write(&mut buf)?;
        self.files.push((name.to_string(), buf));
        Ok(())
    }

    fn json(&mut self, name: &str, value: &Value) -> Result<()> {
        self.csv(name, |w| io::write_json(w, value))
    }

    fn check(&mut self, inv: Invariant) {
        self.invariants.push(inv);
    }
}

/// Runs one command and writes its artifacts plus `manifest.json` into the output directory.
pub fn run(config: &RunConfig) -> Result<RunOutcome> {
    config.validate()?;
    let started = Instant::now();
    let model = read_model(&config.model_path)?;
    fs::create_dir_all(&config.output_dir)?;
    // faer's own threading could change reduction order; all parallelism goes through rayon
    faer::set_global_parallelism(faer::Par::Seq);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| Error::InvalidInput(format!("cannot start {} worker threads: {e}", config.threads)))?;
    let art = pool.install(|| execute(config, &model))?;

    let mut artifacts = Vec::new();
    for (name, bytes) in &art.files {
        let path = config.output_dir.join(name);
        fs::write(&path, bytes)?;
        artifacts.push(path);
    }
    let manifest = manifest(config, &art, started.elapsed().as_secs_f64());
    let manifest_path = config.output_dir.join("manifest.json");
    let mut buf = Vec::new();
    io::write_json(&mut buf, &manifest)?;
    fs::write(&manifest_path, buf)?;
    artifacts.push(manifest_path);
    Ok(RunOutcome { invariants: art.invariants, artifacts, warnings: art.warnings, manifest })
}

fn manifest(config: &RunConfig, art: &Artifacts, wall_time: f64) -> Value {
    let grid = |g: &Option<Grid>| g.as_ref().map(|g| json!({ "from": g.from, "to": g.to, "steps": g.steps }));
    json!({
        "tool": "resonance-lab",
        "version": env!("CARGO_PKG_VERSION"),
        "command": config.command.name(),
        "config": {
            "model": config.model_path.display().to_string(),
            "output_dir": config.output_dir.display().to_string(),
            "param": config.param,
            "param_grid": grid(&config.param_grid),
            "energy_grid": grid(&config.energy_grid),
            "energy": config.energy,
            "channel": config.channel,
            "level": config.level,
            "tol_fp": config.tolerances.tol_fp,
            "width_tol": config.tolerances.width_tol,
            "sep_tol": config.tolerances.sep_tol,
            "rig_tol": config.tolerances.rig_tol,
            "threads": config.threads,
            "window": config.window.map(|(a, b)| [a, b]),
            "bins": config.bins,
            "t_max": config.t_max,
            "t_steps": config.t_steps,
        },
        "wall_time_seconds": wall_time,
        "artifacts": art.files.iter().map(|(n, _)| n.clone()).collect::<Vec<_>>(),
        "warnings": art.warnings,
        "invariants": art.invariants.iter().map(|i| json!({
            "name": i.name,
            "value": if i.value.is_finite() { json!(i.value) } else { json!(i.value.to_string()) },
            "limit": i.limit,
            "passed": i.passed,
            "enforced": i.enforced,
        })).collect::<Vec<_>>(),
        "all_passed": art.invariants.iter().all(|i| i.passed || !i.enforced),
    })
}

fn execute(config: &RunConfig, model: &SystemModel) -> Result<Artifacts> {
    let mut art = Artifacts::default();
    match config.command {
        Command::Spectrum => run_spectrum(config, model, &mut art)?,
        Command::Sweep => run_sweep(config, model, &mut art)?,
        Command::Scan => run_scan(config, model, &mut art)?,
        Command::Trace => run_trace(config, model, &mut art)?,
        Command::Bic => run_bic(config, model, &mut art)?,
        Command::Oracle => run_oracle(config, model, &mut art)?,
    }
    Ok(art)
}

fn spectrum_checks(art: &mut Artifacts, h: &crate::model::EffectiveHamiltonian, s: &spectral::ResonanceSpectrum) {
    let min_a = s.a_diag.iter().copied().fold(f64::INFINITY, f64::min);
    let max_r = s.phase_rigidity.iter().copied().fold(0.0, f64::max);
    let min_width = s.widths().iter().copied().fold(f64::INFINITY, f64::min);
    art.check(Invariant::at_most("eigen residual / ‖H_eff‖", s.eigen_residual(h) / h.frobenius_norm().max(1e-300), 1e-10));
    art.check(Invariant::at_most("1 − min A_λ", 1.0 - min_a, 1e-12));
    art.check(Invariant::at_most("max r_λ − 1", max_r - 1.0, 1e-12));
    art.check(Invariant::at_most("−min Γ_λ", -min_width, 1e-12));
    if s.defective {
        art.warnings.push(format!("spectrum at E = {} is defective; biorthogonality checks skipped", s.energy));
    } else {
        art.check(Invariant::at_most("biorthogonality residual", s.biorthogonality_residual(), 1e-10));
        art.check(Invariant::at_most("bilinear closure residual", s.closure_residual(), 1e-8));
        art.check(Invariant::at_most("B antisymmetry residual", s.antisymmetry_residual(), 1e-10).informational());
    }
}

fn run_spectrum(config: &RunConfig, model: &SystemModel, art: &mut Artifacts) -> Result<()> {
    let h = build_h_eff(model, config.energy)?;
    let s = diagonalize(&h)?;
    spectrum_checks(art, &h, &s);
    let states = spectral::resonance_states(model, config.tolerances.tol_fp)?;
    art.check(Invariant::at_most(
        "unconverged fixed points",
        states.iter().filter(|s| !s.converged).count() as f64,
        0.0,
    ));
    art.csv("spectrum.csv", |w| io::write_spectrum_csv(w, &s))?;
    art.csv("states.csv", |w| io::write_states_csv(w, &states))
}

fn all_wideband(model: &SystemModel) -> bool {
    model.channels().iter().all(|c| matches!(c, Channel::Wideband { .. }))
}

fn sweep_checks(art: &mut Artifacts, result: &spectral::SweepResult) -> Result<()> {
    let states = result.points.iter().flat_map(|p| p.states.iter());
    let unconverged = states.clone().filter(|s| !s.converged).count();
    let min_width = states.clone().map(|s| s.gamma_lambda).fold(f64::INFINITY, f64::min);
    let max_r = states.map(|s| s.phase_rigidity).fold(0.0, f64::max);
    art.check(Invariant::at_most("unconverged fixed points", unconverged as f64, 0.0));
    art.check(Invariant::at_most("−min Γ_λ", -min_width, 1e-12));
    art.check(Invariant::at_most("max r_λ − 1", max_r - 1.0, 1e-12));
    if all_wideband(&result.model) {
        let mut worst = 0.0f64;
        for p in &result.points {
            let rule = 2.0 * std::f64::consts::PI * result.model_at(p.param_value)?.wideband_width_sum();
            let total: f64 = p.states.iter().map(|s| s.gamma_lambda).sum();
            if rule > 0.0 {
                worst = worst.max((total - rule).abs() / rule);
            } else {
                worst = worst.max(total.abs());
            }
        }
        art.check(Invariant::at_most("width sum rule (relative)", worst, 1e-9));
    }
    let tie_breaks: usize = result.points.iter().map(|p| p.tie_breaks).sum();
    if tie_breaks > 0 {
        art.warnings.push(format!("{tie_breaks} branch assignments at symmetric branch points were made by the deterministic tie-break"));
    }
    Ok(())
}

fn param_sweep(config: &RunConfig, model: &SystemModel) -> Result<spectral::SweepResult> {
    let param = config.param.as_deref().expect("validated");
    let grid = config.param_grid.as_ref().expect("validated").values();
    spectral::sweep(model, param, &grid, config.tolerances.tol_fp)
}

fn run_sweep(config: &RunConfig, model: &SystemModel, art: &mut Artifacts) -> Result<()> {
    let result = param_sweep(config, model)?;
    sweep_checks(art, &result)?;
    let eps = spectral::find_exceptional_points(&result, config.tolerances.sep_tol, config.tolerances.rig_tol);
    art.csv("sweep.csv", |w| io::write_sweep_csv(w, &result))?;
    art.json("exceptional_points.json", &io::exceptional_points_json(&eps))
}

fn run_scan(config: &RunConfig, model: &SystemModel, art: &mut Artifacts) -> Result<()> {
    let energies = config.energy_grid.as_ref().expect("validated").values();
    let points = scattering::scan(model, &energies, config.channel)?;
    let unitarity = points.iter().map(|p| p.s_full.unitarity_residual()).fold(0.0, f64::max);
    art.check(Invariant::at_most("max unitarity residual ‖S†S − I‖", unitarity, 1e-8));
    let max_rho = points.iter().filter_map(|p| p.rigidity.map(|r| r.rho)).fold(0.0, f64::max);
    art.check(Invariant::at_most("max ρ − 1", max_rho - 1.0, 1e-12));
    let norm_dev = points
        .iter()
        .filter(|p| !p.c_coeffs.is_empty())
        .map(|p| (p.c_coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max);
    art.check(Invariant::at_most("|Σ|c_λ|² − 1|", norm_dev, 1e-10));
    art.csv("scan.csv", |w| io::write_scan_csv(w, &points, model.n_channels()))
}

fn time_grid(t_max: f64, steps: usize) -> Vec<f64> {
    (0..steps).map(|k| t_max * k as f64 / (steps - 1) as f64).collect()
}

fn default_t_max(config: &RunConfig, gamma: f64) -> f64 {
    config.t_max.unwrap_or(if gamma > 0.0 { 5.0 / gamma } else { 100.0 })
}

fn run_trace(config: &RunConfig, model: &SystemModel, art: &mut Artifacts) -> Result<()> {
    let e = config.energy;
    let s = diagonalize(&build_h_eff(model, e)?)?;
    let c0 = dynamics::scattering_excitation(model, &s, e, config.channel)?;
    let widths = s.widths();
    let gamma_min = widths.iter().copied().filter(|g| *g > 0.0).fold(f64::INFINITY, f64::min);
    let t_max = default_t_max(config, if gamma_min.is_finite() { gamma_min } else { 0.0 });
    let trace = dynamics::evolve(&s, e, &c0, &time_grid(t_max, config.t_steps))?;
    if trace.truncated {
        art.warnings.push(format!("population underflowed; trace ends at t = {}", trace.times.last().copied().unwrap_or(0.0)));
    }
    let rates = dynamics::decay_rate(&trace)?;
    art.check(Invariant::at_most("decay rate analytic vs finite difference", rates.max_deviation, dynamics::RATE_AGREEMENT_TOL));
    let rise = trace.population.windows(2).map(|w| w[1].norm() - w[0].norm()).fold(0.0, f64::max);
    art.check(Invariant::at_most("population increase between samples", rise, 1e-10));
    let (lo, hi) = widths.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &w| (a.min(w), b.max(w)));
    let outside = rates.analytic.iter().map(|k| (lo - k).max(k - hi)).fold(f64::NEG_INFINITY, f64::max);
    art.check(Invariant::at_most("k_gr outside [min Γ, max Γ]", outside, 1e-8));
    art.csv("trace.csv", |w| io::write_trace_csv(w, &trace, &rates))
}

fn run_bic(config: &RunConfig, model: &SystemModel, art: &mut Artifacts) -> Result<()> {
    let result = param_sweep(config, model)?;
    sweep_checks(art, &result)?;
    let candidates = bic::find_bics(&result, config.tolerances.width_tol)?;
    let mut reports = Vec::with_capacity(candidates.len());
    for c in candidates {
        let report = if c.is_true_bic { Some(bic::verify_bic(&c, model)?) } else { None };
        reports.push((c, report));
    }
    let failed = reports.iter().filter(|(_, r)| r.as_ref().is_some_and(|r| !r.passed)).count();
    art.check(Invariant::at_most("failed BIC verifications", failed as f64, 0.0));
    let inequality = reports.iter().filter(|(c, _)| !c.width_inequality_holds).count();
    art.check(Invariant::at_most("width inequality violations", inequality as f64, 0.0));
    let mismatch = reports
        .iter()
        .filter(|(c, _)| (c.width_at_min < config.tolerances.width_tol) != c.decoupling_residuals.iter().all(|r| *r <= bic::DECOUPLING_TOL))
        .count();
    art.check(Invariant::at_most("width flag vs decoupling disagreements", mismatch as f64, 0.0).informational());
    art.csv("sweep.csv", |w| io::write_sweep_csv(w, &result))?;
    art.json("bics.json", &io::bic_json(&reports))
}

fn run_oracle(config: &RunConfig, model: &SystemModel, art: &mut Artifacts) -> Result<()> {
    let n = model.n_levels();
    if config.level >= n {
        return Err(Error::InvalidInput(format!("--level {} out of range for {n} levels", config.level)));
    }
    let full = oracle::build_full(model, config.bins, config.window)?;
    art.warnings.extend(full.warnings.iter().cloned());
    let fs = full.diagonalize()?;

    // the resonance that carries most of the initial level
    let states = spectral::resonance_states(model, config.tolerances.tol_fp)?;
    let state = states
        .iter()
        .max_by(|a, b| a.eigvec[config.level].norm().total_cmp(&b.eigvec[config.level].norm()))
        .expect("at least one level");
    let e = state.e_lambda;
    let s = diagonalize(&build_h_eff(model, e)?)?;
    let c0: Vec<Complex64> = (0..n).map(|l| s.right_eigenvectors[(config.level, l)]).collect();
    let t_max = default_t_max(config, state.gamma_lambda);
    let times = time_grid(t_max, config.t_steps);
    let trace = dynamics::evolve(&s, e, &c0, &times)?;
    let mut init = vec![Complex64::new(0.0, 0.0); n];
    init[config.level] = Complex64::new(1.0, 0.0);
    let surv = oracle::survival_probability(&full, &fs, &init, &times)?;

    let heff: Vec<f64> = (0..times.len())
        .map(|i| trace.population.get(i).map_or(0.0, |p| p.norm()))
        .collect();
    art.check(Invariant::at_most("t_max / recurrence time", t_max / surv.recurrence_time, 1.0));
    let deviation = surv
        .probability
        .iter()
        .zip(&heff)
        .map(|(a, b)| (a - b).abs() / b.max(1e-300))
        .fold(0.0, f64::max);
    art.check(Invariant::at_most("survival vs H_eff population (relative)", deviation, 0.02).informational());
    art.csv("oracle.csv", |w| io::write_oracle_csv(w, &times, &surv.probability, &surv.level_population, &heff))
}

/// Entry point shared by the binary: parses `args`, runs, prints diagnostics and
/// returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let config = match RunConfig::try_from(args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            return 1;
        }
    };
    match run(&config) {
        Ok(outcome) => {
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            for inv in outcome.invariants.iter().filter(|i| !i.passed) {
                let kind = if inv.enforced { "FAILED" } else { "note" };
                eprintln!("{kind}: {} = {:.3e} (limit {:.1e})", inv.name, inv.value, inv.limit);
            }
            outcome.exit_code()
        }
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            if e.is_input_error() {
                1
            } else {
                2
            }
        }
    }
}

/// Paths of the bundled model files shipped with the crate.
pub fn bundled_model(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("models").join(format!("{name}.toml"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_ends_exactly() {
        let g = Grid { from: 0.01, to: 2.0, steps: 7 };
        let v = g.values();
        assert_eq!(v.len(), 7);
        assert_eq!(v[0], 0.01);
        assert_eq!(v[6], 2.0);
    }

    #[test]
    fn argument_validation() {
        let parse = |s: &str| Args::try_parse_from(s.split_whitespace()).map_err(|e| e.to_string()).and_then(|a| RunConfig::try_from(a).map_err(|e| e.to_string()));
        assert!(parse("rl sweep --model m.toml --param g --from 0.1 --to 1 --steps 10").is_ok());
        assert!(parse("rl sweep --model m.toml --param g --from 0.1 --to 1").is_err());
        assert!(parse("rl sweep --model m.toml --param g --from 0.1 --to 1 --steps 1").is_err());
        assert!(parse("rl scan --model m.toml").is_err());
        assert!(parse("rl scan --model m.toml --energy-from -1 --energy-to 1 --energy-steps 5 --tol-fp 0").is_err());
        let c = parse("rl oracle --model m.toml --window -10 10 --threads 3").unwrap();
        assert_eq!(c.window, Some((-10.0, 10.0)));
        assert_eq!(c.threads, 3);
        assert!(parse("rl oracle --model m.toml --threads 0").is_err());
    }

    #[test]
    fn bundled_models_match_presets() {
        use crate::model::presets;
        use std::f64::consts::PI;
        let same = |name: &str, preset: SystemModel| {
            let m = read_model(bundled_model(name)).unwrap();
            assert_eq!(m.hb(), preset.hb(), "{name}");
            assert_eq!(m.couplings(), preset.couplings(), "{name}");
            assert_eq!(m.channels(), preset.channels(), "{name}");
            assert_eq!(m.params(), preset.params(), "{name}");
        };
        same("two_level_trapping", presets::two_level_trapping(0.25, 0.01).unwrap());
        same("one_level", presets::single_level(0.0, 0.3, 1.0 / PI).unwrap());
        same("symmetric_bic", presets::two_level_bic(0.0, -0.5, 0.2, 1.0).unwrap());
        same("four_level_crossover", presets::four_level_crossover(0.5).unwrap());
        same("six_level_saturation", presets::six_level_saturation(1.0).unwrap());
        same("flatband_level", presets::single_level_flatband(0.0, (0.05 / (2.0 * PI)).sqrt(), -10.0, 10.0, 1.0).unwrap());
    }
}
