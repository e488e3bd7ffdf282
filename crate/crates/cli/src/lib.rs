//! Command implementations behind the `caustiq` binary. Every command computes
//! all of its outputs in memory first; files are written only on success.

pub mod config;

pub use config::{parse_state, ArcOptions, Command, OracleOptions, Overrides, RunConfig, SpectrumOptions, SurfaceOptions, TraceOptions};

use caustiq::arc1d::{build_arc_problem_with, correlation, quantum_action, solve_arc};
use caustiq::caustic::build_caustic;
use caustiq::classical::{drift_bound, trace_family};
use caustiq::eigensolver::{find_state, scan_spectrum, separable_seed, SeedFailure, SpectrumEntry};
use caustiq::io::{self, Csv};
use caustiq::oracle::{self, ActionSurface};
use caustiq::Error;
use serde::Serialize;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("convergence failure: {0}")]
    Convergence(String),
    #[error("pipeline error: {0}")]
    Pipeline(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Convergence(_) => 3,
            CliError::Pipeline(_) => 4,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidModel(_) | Error::InvalidArgument(_) | Error::NotSeparable(_) => CliError::Config(e.to_string()),
            Error::NoConvergence { .. } | Error::StraddlingStates | Error::InconsistentFamily { .. } => CliError::Convergence(e.to_string()),
            _ => CliError::Pipeline(e.to_string()),
        }
    }
}

/// Named file contents produced by a command. `status` carries a failure that
/// still comes with a report (too few converged seeds).
#[derive(Debug, Clone, PartialEq)]
pub struct Outputs {
    pub files: Vec<(String, String)>,
    pub status: Result<(), CliError>,
}

impl Outputs {
    fn ok(files: Vec<(String, String)>) -> Self {
        Self { files, status: Ok(()) }
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_str())
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Pipeline(format!("cannot create {}: {e}", dir.display())))?;
        for (name, content) in &self.files {
            let path = dir.join(name);
            std::fs::write(&path, content).map_err(|e| CliError::Pipeline(format!("cannot write {}: {e}", path.display())))?;
        }
        Ok(())
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value).map(|s| s + "\n").map_err(|e| CliError::Pipeline(e.to_string()))
}

pub fn run(command: Command, config: &RunConfig) -> Result<Outputs, CliError> {
    match command {
        Command::Trace => cmd_trace(config),
        Command::Spectrum => cmd_spectrum(config),
        Command::Arc => cmd_arc(config),
        Command::ActionSurface => cmd_action_surface(config),
        Command::Oracle => cmd_oracle(config),
    }
}

#[derive(Serialize)]
struct TraceReport<'a> {
    config: &'a RunConfig,
    energy: f64,
    angle: f64,
    samples: usize,
    max_energy_drift: f64,
    drift_bound: f64,
    caustic_points: usize,
    caustic: &'a caustiq::caustic::Caustic,
}

pub fn cmd_trace(config: &RunConfig) -> Result<Outputs, CliError> {
    let (model, t) = (&config.model, &config.trace);
    let (trajectory, cloud) = trace_family(model, t.energy, t.angle, config.search.t_max, config.search.step)?;
    let caustic = build_caustic(&cloud, model, t.energy, &config.search.caustic)?;
    let mut thinned = trajectory.clone();
    thinned.samples = trajectory.samples.iter().step_by(t.stride).copied().collect();
    let report = TraceReport {
        config,
        energy: t.energy,
        angle: t.angle,
        samples: trajectory.samples.len(),
        max_energy_drift: trajectory.max_energy_drift(model),
        drift_bound: drift_bound(t.energy),
        caustic_points: cloud.points.len(),
        caustic: &caustic,
    };
    Ok(Outputs::ok(vec![
        ("trajectory.csv".into(), io::trajectory_csv(&thinned)),
        ("caustic_points.csv".into(), io::cloud_csv(&cloud)),
        ("arcs.csv".into(), io::arcs_csv(&caustic, t.arc_samples)),
        ("vertices.csv".into(), io::vertices_csv(&caustic)),
        ("trace.json".into(), to_json(&report)?),
    ]))
}

#[derive(Serialize)]
struct ComparedEntry<'a> {
    #[serde(flatten)]
    entry: &'a SpectrumEntry,
    oracle_energy: Option<f64>,
    abs_delta: Option<f64>,
}

#[derive(Serialize)]
struct SpectrumReport<'a> {
    config: &'a RunConfig,
    seeds: usize,
    converged: usize,
    entries: Vec<ComparedEntry<'a>>,
    failures: &'a [SeedFailure],
    oracle_n_max: usize,
}

pub fn cmd_spectrum(config: &RunConfig) -> Result<Outputs, CliError> {
    let model = &config.model;
    let scan = scan_spectrum(model, config.spectrum.e_max, &config.search)?;
    let reference = oracle::solve(model, config.oracle.n_max)?;
    let mut csv = Csv::new(&["E", "m", "n", "E_oracle", "abs_dE"]);
    let mut entries = Vec::with_capacity(scan.entries.len());
    for entry in &scan.entries {
        let oracle_energy = reference.find_label(entry.quantum_numbers).map(|k| reference.eigenvalues[k]);
        let abs_delta = oracle_energy.map(|e| (entry.energy - e).abs());
        let (m, n) = entry.quantum_numbers;
        csv.row(&[
            io::format_value(entry.energy),
            m.to_string(),
            n.to_string(),
            oracle_energy.map(io::format_value).unwrap_or_default(),
            abs_delta.map(io::format_value).unwrap_or_default(),
        ])?;
        entries.push(ComparedEntry { entry, oracle_energy, abs_delta });
    }
    let converged = scan.entries.len();
    let report = SpectrumReport {
        config,
        seeds: scan.seeds,
        converged,
        entries,
        failures: &scan.failures,
        oracle_n_max: config.oracle.n_max,
    };
    let status = if converged * 10 >= scan.seeds * 9 {
        Ok(())
    } else {
        Err(CliError::Convergence(format!("only {converged} of {} seeds converged", scan.seeds)))
    };
    Ok(Outputs { files: vec![("spectrum.json".into(), to_json(&report)?), ("spectrum.csv".into(), csv.finish())], status })
}

#[derive(Serialize)]
struct ArcReport<'a> {
    config: &'a RunConfig,
    state: &'a SpectrumEntry,
    arc: usize,
    turning_points: (f64, f64),
    nodes: usize,
    defect: f64,
    phase_index: f64,
    delta_x_over_hbar_pi: f64,
    n_grid: usize,
    oracle_correlation: Option<f64>,
}

/// Converged state for the `arc` command.
pub fn arc_state(config: &RunConfig) -> Result<SpectrumEntry, CliError> {
    let (m, n) = config.arc.state;
    let (e_seed, s_seed) = separable_seed(&config.model, m, n);
    let e_init = config.arc.energy.unwrap_or(e_seed);
    Ok(find_state(&config.model, e_init, s_seed, Some((m, n)), &config.search)?)
}

pub fn cmd_arc(config: &RunConfig) -> Result<Outputs, CliError> {
    let model = &config.model;
    let state = arc_state(config)?;
    let arc = &state.caustic.arcs[config.arc.arc - 1];
    let problem = build_arc_problem_with(model, arc, state.energy, config.search.n_grid, config.search.decay)?;
    let mut solution = solve_arc(&problem)?;
    let action = quantum_action(&solution, &problem)?;
    let peak = solution.psi.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    if peak > 0.0 {
        solution.psi.iter_mut().for_each(|v| *v /= peak);
    }
    let reference = oracle::solve(model, config.oracle.n_max)?;
    let (profile, oracle_correlation) = match reference.find_label(state.quantum_numbers) {
        Some(k) => {
            let mut profile = oracle::restrict_to_arc(&reference, k, arc, &problem.grid)?;
            if correlation(&solution.psi, &profile) < 0.0 {
                profile.iter_mut().for_each(|v| *v = -*v);
            }
            let range = problem.allowed_range();
            (Some(profile.clone()), Some(correlation(&solution.psi[range.clone()], &profile[range])))
        }
        None => (None, None),
    };
    let report = ArcReport {
        config,
        state: &state,
        arc: config.arc.arc,
        turning_points: problem.turning_points,
        nodes: solution.nodes,
        defect: solution.defect,
        phase_index: solution.phase_index,
        delta_x_over_hbar_pi: solution.delta_x / (model.hbar * std::f64::consts::PI),
        n_grid: problem.grid.len(),
        oracle_correlation,
    };
    Ok(Outputs::ok(vec![
        ("arc.csv".into(), io::arc_csv(&problem, &solution, &action, profile.as_deref())?),
        ("arc.json".into(), to_json(&report)?),
    ]))
}

#[derive(Serialize)]
struct SurfaceReport<'a> {
    config: &'a RunConfig,
    state: (usize, usize),
    extent: (f64, f64),
    nx: usize,
    ny: usize,
    max_abs_difference: f64,
}

/// Largest `|X − W_C|` over the cells inside `Ω_F`.
pub fn max_action_difference(surface: &ActionSurface) -> f64 {
    surface
        .quantum
        .iter()
        .zip(&surface.classical)
        .filter_map(|(q, c)| Some((q.as_ref()? - c.as_ref()?).abs()))
        .fold(0.0, f64::max)
}

pub fn cmd_action_surface(config: &RunConfig) -> Result<Outputs, CliError> {
    let s = &config.surface;
    let surface = oracle::separable_action_surface(&config.model, s.state, s.resolution, s.resolution, s.margin)?;
    let report = SurfaceReport {
        config,
        state: s.state,
        extent: surface.extent,
        nx: surface.xs.len(),
        ny: surface.ys.len(),
        max_abs_difference: max_action_difference(&surface),
    };
    Ok(Outputs::ok(vec![
        ("action_quantum.csv".into(), io::surface_csv(&surface, &surface.quantum)?),
        ("action_classical.csv".into(), io::surface_csv(&surface, &surface.classical)?),
        ("action_surface.json".into(), to_json(&report)?),
    ]))
}

#[derive(Serialize)]
struct OracleState {
    index: usize,
    energy: f64,
    label: (usize, usize),
    converged: bool,
}

#[derive(Serialize)]
struct OracleReport<'a> {
    config: &'a RunConfig,
    n_max: usize,
    basis_size: usize,
    states: Vec<OracleState>,
}

pub fn cmd_oracle(config: &RunConfig) -> Result<Outputs, CliError> {
    let o = &config.oracle;
    let result = oracle::solve_checked(&config.model, o.n_max, o.count)?;
    let mut csv = Csv::new(&["index", "E", "m", "n", "converged"]);
    let mut states = Vec::new();
    for index in 0..o.count.min(result.size()) {
        let (m, n) = result.labels[index];
        let converged = result.converged.get(index).copied().unwrap_or(false);
        csv.row(&[index.to_string(), io::format_value(result.eigenvalues[index]), m.to_string(), n.to_string(), converged.to_string()])?;
        states.push(OracleState { index, energy: result.eigenvalues[index], label: (m, n), converged });
    }
    let report = OracleReport { config, n_max: o.n_max, basis_size: result.size(), states };
    Ok(Outputs::ok(vec![("oracle.json".into(), to_json(&report)?), ("oracle.csv".into(), csv.finish())]))
}

