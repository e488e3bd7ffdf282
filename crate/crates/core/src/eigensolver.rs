//! Outer search over trial energy `E` and start-vertex angle `s` for families
//! whose caustic arcs all carry regular one-dimensional wavefunctions.

use crate::arc1d::{build_arc_problem_with, solve_arc, DEFAULT_DECAY, DEFAULT_GRID};
use crate::caustic::{build_caustic, ebk_integral, Caustic, CausticSettings};
use crate::classical::{trace_family, DEFAULT_STEP, DEFAULT_T_MAX};
use crate::error::{Error, Result};
use crate::model::HamiltonianModel;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Which arc conditions drive the `(E, s)` search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RootEquations {
    /// Left arc and top arc regular.
    #[default]
    AdjacentArcs,
    /// Left arc regular; top and bottom phase indices average to `m`.
    OppositeMean,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSettings {
    pub equations: RootEquations,
    pub t_max: f64,
    pub step: f64,
    pub caustic: CausticSettings,
    pub n_grid: usize,
    pub decay: f64,
    /// Convergence bound on the two root equations (phase-index units).
    pub tolerance: f64,
    pub max_iterations: usize,
    pub fd_energy: f64,
    pub fd_angle: f64,
    pub max_step_energy: f64,
    pub max_step_angle: f64,
    /// Scans refuse energies above this bound (escape over the saddle).
    pub energy_cap: f64,
    /// Scans also seed separable levels up to this far above `E_max`, since
    /// the coupling can pull a state below `E_max`.
    pub seed_margin: f64,
}

impl Default for SearchSettings {
    fn default() -> Self {
        Self {
            equations: RootEquations::default(),
            t_max: DEFAULT_T_MAX,
            step: DEFAULT_STEP,
            caustic: CausticSettings::default(),
            n_grid: DEFAULT_GRID,
            decay: DEFAULT_DECAY,
            tolerance: 1e-6,
            max_iterations: 60,
            fd_energy: 1e-4,
            fd_angle: 1e-4,
            max_step_energy: 0.2,
            max_step_angle: 0.1,
            energy_cap: 8.6,
            seed_margin: 0.15,
        }
    }
}

/// Per-arc results of one trial family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArcReport {
    pub defect: f64,
    pub phase_index: f64,
    pub nodes: usize,
    /// `ΔX / ħπ`
    pub delta_x: f64,
    /// `∫ p·dq / ħπ` between the turning points.
    pub ebk: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyTrial {
    pub energy: f64,
    pub s: f64,
    pub caustic: Option<Caustic>,
    pub arcs: Option<[ArcReport; 4]>,
    pub failure: Option<String>,
}

impl FamilyTrial {
    pub fn is_valid(&self) -> bool {
        self.arcs.is_some()
    }

    pub fn arc_defects(&self) -> Option<[f64; 4]> {
        self.arcs.map(|a| a.map(|r| r.defect))
    }

    pub fn arc_nodes(&self) -> Option<[usize; 4]> {
        self.arcs.map(|a| a.map(|r| r.nodes))
    }

    pub fn phase_indices(&self) -> Option<[f64; 4]> {
        self.arcs.map(|a| a.map(|r| r.phase_index))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEntry {
    pub energy: f64,
    /// `(m, n)`: `m` nodes on the top/bottom arcs, `n` on the left/right arcs.
    pub quantum_numbers: (usize, usize),
    pub defects: [f64; 4],
    pub phase_indices: [f64; 4],
    /// `∫p·dq/(ħπ) − (nodes + ½)` per arc.
    pub ebk_residuals: [f64; 4],
    /// `ΔX/(ħπ) − (nodes + ½)` per arc.
    pub quantization_residuals: [f64; 4],
    pub vertex_s: f64,
    /// Final values of the two root equations.
    pub equations: [f64; 2],
    pub iterations: usize,
    pub caustic: Caustic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedFailure {
    pub seed: (usize, usize),
    pub energy: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumScan {
    pub entries: Vec<SpectrumEntry>,
    pub failures: Vec<SeedFailure>,
    pub seeds: usize,
}

fn run_trial(model: &HamiltonianModel, energy: f64, s: f64, settings: &SearchSettings) -> Result<(Caustic, [ArcReport; 4])> {
    let (_, cloud) = trace_family(model, energy, s, settings.t_max, settings.step)?;
    let caustic = build_caustic(&cloud, model, energy, &settings.caustic)?;
    let reports: Vec<ArcReport> = caustic
        .arcs
        .par_iter()
        .map(|arc| {
            let problem = build_arc_problem_with(model, arc, energy, settings.n_grid, settings.decay)?;
            let sol = solve_arc(&problem)?;
            let ebk = ebk_integral(model, arc, energy)? / (model.hbar * PI);
            Ok(ArcReport {
                defect: sol.defect,
                phase_index: sol.phase_index,
                nodes: sol.nodes,
                delta_x: sol.delta_x / (model.hbar * PI),
                ebk,
            })
        })
        .collect::<Result<_>>()?;
    Ok((caustic, reports.try_into().expect("four arcs")))
}

/// Builds the family started at rest on `U = E` in direction `s` and solves the
/// four arc problems. Failures are recorded on the trial, never raised.
pub fn evaluate_trial(model: &HamiltonianModel, energy: f64, s: f64, settings: &SearchSettings) -> FamilyTrial {
    if !(energy > 0.0) {
        return FamilyTrial { energy, s, caustic: None, arcs: None, failure: Some(format!("energy must be positive, got {energy}")) };
    }
    match run_trial(model, energy, s, settings) {
        Ok((caustic, arcs)) => FamilyTrial { energy, s, caustic: Some(caustic), arcs: Some(arcs), failure: None },
        Err(e) => FamilyTrial { energy, s, caustic: None, arcs: None, failure: Some(e.to_string()) },
    }
}

/// `(m, n)` from the node counts, requiring opposite arcs to agree.
pub fn classify_nodes(trial: &FamilyTrial) -> Result<(usize, usize)> {
    let nodes = trial.arc_nodes().ok_or_else(|| Error::DegenerateFamily(trial.failure.clone().unwrap_or_default()))?;
    if nodes[0] != nodes[2] {
        return Err(Error::InconsistentFamily { a: nodes[0], b: nodes[2] });
    }
    if nodes[1] != nodes[3] {
        return Err(Error::InconsistentFamily { a: nodes[1], b: nodes[3] });
    }
    Ok((nodes[1], nodes[0]))
}

/// Root equations in phase-index units: the left arc regular with `n` nodes,
/// and `m` for the top arc or for the mean over top and bottom arcs.
fn equations(trial: &FamilyTrial, target: (usize, usize), equations: RootEquations) -> Option<[f64; 2]> {
    let nu = trial.phase_indices()?;
    let (m, n) = target;
    let second = match equations {
        RootEquations::AdjacentArcs => nu[1],
        RootEquations::OppositeMean => 0.5 * (nu[1] + nu[3]),
    };
    Some([nu[0] - n as f64, second - m as f64])
}

/// Seed for state `(m, n)`: separable energy and the direction of the
/// lower-left corner of the separable rectangle.
pub fn separable_seed(model: &HamiltonianModel, m: usize, n: usize) -> (f64, f64) {
    let e = model.hbar * (model.omega_x * (m as f64 + 0.5) + model.omega_y * (n as f64 + 0.5));
    let (a, b) = model.separable_amplitudes(m, n);
    (e, (-b).atan2(-a))
}

/// Two-dimensional damped Newton iteration on `(E, s)` with a finite-difference
/// Jacobian. Without a target the quantum numbers are read from the initial trial.
pub fn find_state(model: &HamiltonianModel, e_init: f64, s_init: f64, target: Option<(usize, usize)>, settings: &SearchSettings) -> Result<SpectrumEntry> {
    if !(e_init > 0.0) {
        return Err(Error::InvalidArgument(format!("initial energy must be positive, got {e_init}")));
    }
    let (mut e, mut s) = (e_init, s_init);
    let mut trial = evaluate_trial(model, e, s, settings);
    let target = match target {
        Some(t) => t,
        None => {
            let nu = trial.phase_indices().ok_or_else(|| Error::DegenerateFamily(trial.failure.clone().unwrap_or_default()))?;
            let r = |x: f64| x.round().max(0.0) as usize;
            (r(0.5 * (nu[1] + nu[3])), r(nu[0]))
        }
    };
    let mut f = equations(&trial, target, settings.equations).ok_or_else(|| Error::DegenerateFamily(trial.failure.clone().unwrap_or_default()))?;
    let norm = |f: &[f64; 2]| f[0].abs().max(f[1].abs());
    for it in 0..settings.max_iterations {
        if norm(&f) <= settings.tolerance {
            return finish(trial, target, f, it);
        }
        let fe = equations(&evaluate_trial(model, e + settings.fd_energy, s, settings), target, settings.equations);
        let fs = equations(&evaluate_trial(model, e, s + settings.fd_angle, settings), target, settings.equations);
        let (Some(fe), Some(fs)) = (fe, fs) else {
            return Err(Error::DegenerateFamily(format!("Jacobian probe failed near E = {e}, s = {s}")));
        };
        let j = [
            [(fe[0] - f[0]) / settings.fd_energy, (fs[0] - f[0]) / settings.fd_angle],
            [(fe[1] - f[1]) / settings.fd_energy, (fs[1] - f[1]) / settings.fd_angle],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if !(det.abs() > 1e-300) {
            return Err(Error::Numerical("singular Jacobian in (E, s) search".into()));
        }
        let de = -(j[1][1] * f[0] - j[0][1] * f[1]) / det;
        let ds = -(-j[1][0] * f[0] + j[0][0] * f[1]) / det;
        let mut scale = 1.0f64.min(settings.max_step_energy / de.abs()).min(settings.max_step_angle / ds.abs());
        // backtrack while the trial is invalid or the residual grows
        let mut accepted = None;
        for _ in 0..12 {
            let t = evaluate_trial(model, e + scale * de, s + scale * ds, settings);
            if let Some(ft) = equations(&t, target, settings.equations) {
                if norm(&ft) < norm(&f) || scale < 1e-3 {
                    accepted = Some((t, ft));
                    break;
                }
            }
            scale *= 0.5;
        }
        let Some((t, ft)) = accepted else {
            return Err(Error::NoConvergence { iterations: it + 1, defects: f });
        };
        e = t.energy;
        s = t.s;
        trial = t;
        f = ft;
    }
    if norm(&f) <= settings.tolerance {
        return finish(trial, target, f, settings.max_iterations);
    }
    Err(Error::NoConvergence { iterations: settings.max_iterations, defects: f })
}

fn finish(trial: FamilyTrial, target: (usize, usize), f: [f64; 2], iterations: usize) -> Result<SpectrumEntry> {
    let arcs = trial.arcs.expect("valid trial");
    let (m, n) = classify_nodes(&trial)?;
    if (m, n) != target {
        return Err(Error::StraddlingStates);
    }
    let expected = |k: usize| if k % 2 == 0 { n } else { m } as f64 + 0.5;
    Ok(SpectrumEntry {
        energy: trial.energy,
        quantum_numbers: (m, n),
        defects: arcs.map(|a| a.defect),
        phase_indices: arcs.map(|a| a.phase_index),
        ebk_residuals: std::array::from_fn(|k| arcs[k].ebk - expected(k)),
        quantization_residuals: std::array::from_fn(|k| arcs[k].delta_x - (arcs[k].nodes as f64 + 0.5)),
        vertex_s: trial.s,
        equations: f,
        iterations,
        caustic: trial.caustic.expect("valid trial"),
    })
}

/// Searches from every separable seed within about one quantum of `e_init`
/// and returns the converged state closest in energy to `e_init`.
pub fn find_nearest_state(model: &HamiltonianModel, e_init: f64, settings: &SearchSettings) -> Result<SpectrumEntry> {
    if !(e_init > 0.0) {
        return Err(Error::InvalidArgument(format!("initial energy must be positive, got {e_init}")));
    }
    let window = model.hbar * model.omega_x.max(model.omega_y) * 0.6;
    let mut seeds = Vec::new();
    for m in 0.. {
        if separable_seed(model, m, 0).0 > e_init + window {
            break;
        }
        for n in 0.. {
            let (e, s) = separable_seed(model, m, n);
            if e > e_init + window {
                break;
            }
            if e >= e_init - window {
                seeds.push(((m, n), e, s));
            }
        }
    }
    let results: Vec<Result<SpectrumEntry>> = seeds
        .par_iter()
        .map(|&(mn, e, s)| find_state(model, e, s, Some(mn), settings))
        .collect();
    let mut last_err = Error::DegenerateFamily(format!("no separable seed within {window} of E = {e_init}"));
    let mut best: Option<SpectrumEntry> = None;
    for r in results {
        match r {
            Ok(entry) => {
                if best.as_ref().is_none_or(|b| (entry.energy - e_init).abs() < (b.energy - e_init).abs()) {
                    best = Some(entry);
                }
            }
            Err(e) => last_err = e,
        }
    }
    best.ok_or(last_err)
}

/// Seeds one search per separable level `ħω_x(m+½) + ħω_y(n+½) ≤ E_max + seed_margin`
/// and keeps the converged states with `E ≤ E_max`.
pub fn scan_spectrum(model: &HamiltonianModel, e_max: f64, settings: &SearchSettings) -> Result<SpectrumScan> {
    if !(e_max > 0.0) {
        return Err(Error::InvalidArgument(format!("E_max must be positive, got {e_max}")));
    }
    if e_max > settings.energy_cap {
        return Err(Error::InvalidArgument(format!("E_max = {e_max} exceeds the bound-motion cap {}", settings.energy_cap)));
    }
    let ceiling = e_max + settings.seed_margin.max(0.0);
    let mut seeds = Vec::new();
    for m in 0.. {
        if separable_seed(model, m, 0).0 > ceiling {
            break;
        }
        for n in 0.. {
            let (e, s) = separable_seed(model, m, n);
            if e > ceiling {
                break;
            }
            seeds.push(((m, n), e, s));
        }
    }
    let results: Vec<_> = seeds
        .par_iter()
        .map(|&(mn, e, s)| (mn, e, find_state(model, e, s, Some(mn), settings)))
        .collect();
    let mut entries: Vec<SpectrumEntry> = Vec::new();
    let mut failures = Vec::new();
    for (seed, energy, r) in results {
        match r {
            Ok(entry) if entry.energy > e_max => {}
            Ok(entry) => {
                let dup = entries
                    .iter()
                    .any(|x| x.quantum_numbers == entry.quantum_numbers || (x.energy - entry.energy).abs() < 1e-4);
                if !dup {
                    entries.push(entry);
                }
            }
            Err(e) => failures.push(SeedFailure { seed, energy, reason: e.to_string() }),
        }
    }
    entries.sort_by(|a, b| a.energy.total_cmp(&b.energy).then(a.quantum_numbers.cmp(&b.quantum_numbers)));
    Ok(SpectrumScan { entries, failures, seeds: seeds.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn tight() -> SearchSettings {
        SearchSettings { tolerance: 1e-10, ..Default::default() }
    }

    #[test]
    fn separable_ground_state_is_exact() {
        let m = HamiltonianModel::uncoupled();
        let (_, s) = separable_seed(&m, 0, 0);
        let r = find_state(&m, 1.05 + 0.02, s, None, &tight()).unwrap();
        assert_eq!(r.quantum_numbers, (0, 0));
        assert!((r.energy - 1.05).abs() < 1e-8, "{}", r.energy);
        for k in 0..4 {
            assert!(r.defects[k].abs() < 1e-8);
            assert!(r.quantization_residuals[k].abs() < 1e-4);
            assert!(r.ebk_residuals[k].abs() < 1e-6);
        }
    }

    #[test]
    fn separable_product_state_nodes() {
        let m = HamiltonianModel::uncoupled();
        let (e, s) = separable_seed(&m, 2, 2);
        assert_relative_eq!(e, 5.25, epsilon = 1e-12);
        let t = evaluate_trial(&m, e, s, &SearchSettings::default());
        assert_eq!(t.arc_nodes().unwrap(), [2, 2, 2, 2]);
        assert_eq!(classify_nodes(&t).unwrap(), (2, 2));
        assert!(t.arc_defects().unwrap().iter().all(|d| d.abs() < 1e-6));
        // any vertex on the same rectangle gives the same family
        let (a, b) = m.separable_amplitudes(2, 2);
        let other = evaluate_trial(&m, e, b.atan2(-a), &SearchSettings::default());
        assert_eq!(other.arc_nodes().unwrap(), [2, 2, 2, 2]);
        assert!(other.arc_defects().unwrap().iter().all(|d| d.abs() < 1e-6));
    }

    #[test]
    fn split_off_the_grid_is_not_an_eigenstate() {
        let m = HamiltonianModel::uncoupled();
        let (a, _) = m.separable_amplitudes(1, 0);
        let b = (2.0 * 1.0f64).sqrt();
        let e = m.potential(crate::Point::new(a, b));
        let t = evaluate_trial(&m, e, (-b).atan2(-a), &SearchSettings::default());
        let d = t.arc_defects().unwrap();
        assert!(d[0].abs() > 0.1 && d[2].abs() > 0.1, "{d:?}");
        assert!(d[1].abs() < 1e-6);
    }

    #[test]
    fn invalid_inputs() {
        let m = HamiltonianModel::barbanis();
        let t = evaluate_trial(&m, -1.0, 0.0, &SearchSettings::default());
        assert!(!t.is_valid() && t.failure.is_some());
        assert!(find_state(&m, 0.0, 0.0, None, &SearchSettings::default()).is_err());
        assert!(scan_spectrum(&m, 9.0, &SearchSettings::default()).is_err());
        assert!(scan_spectrum(&m, -1.0, &SearchSettings::default()).is_err());
        assert!(classify_nodes(&t).is_err());
    }

    #[test]
    fn coupled_ground_state() {
        let m = HamiltonianModel::barbanis();
        let (_, s) = separable_seed(&m, 0, 0);
        let r = find_state(&m, 1.05, s, None, &SearchSettings::default()).unwrap();
        assert_eq!(r.quantum_numbers, (0, 0));
        assert!((r.energy - 1.04795).abs() <= 1e-2, "{}", r.energy);
        assert!(r.equations.iter().all(|f| f.abs() <= 1e-6));
    }
}
