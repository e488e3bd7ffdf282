use crate::CliError;
use caustiq::eigensolver::SearchSettings;
use caustiq::HamiltonianModel;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TraceOptions {
    pub energy: f64,
    /// Polar angle of the starting point on `U = E`.
    pub angle: f64,
    /// Points per fitted arc in the arc CSV.
    pub arc_samples: usize,
    /// Keep every `stride`-th trajectory sample.
    pub stride: usize,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self { energy: 5.18266, angle: -0.75 * std::f64::consts::PI, arc_samples: 400, stride: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumOptions {
    pub e_max: f64,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self { e_max: 5.4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArcOptions {
    pub state: (usize, usize),
    /// 1 left, 2 top, 3 right, 4 bottom.
    pub arc: usize,
    /// Initial energy of the search; the separable level when absent.
    pub energy: Option<f64>,
}

impl Default for ArcOptions {
    fn default() -> Self {
        Self { state: (2, 2), arc: 3, energy: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurfaceOptions {
    pub state: (usize, usize),
    pub resolution: usize,
    /// Relative padding of the grid around `Ω_F`.
    pub margin: f64,
}

impl Default for SurfaceOptions {
    fn default() -> Self {
        Self { state: (2, 2), resolution: 101, margin: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleOptions {
    pub n_max: usize,
    /// Number of lowest states reported by the oracle command.
    pub count: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self { n_max: caustiq::oracle::DEFAULT_N_MAX, count: 36 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: HamiltonianModel,
    pub search: SearchSettings,
    pub trace: TraceOptions,
    pub spectrum: SpectrumOptions,
    pub arc: ArcOptions,
    pub surface: SurfaceOptions,
    pub oracle: OracleOptions,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: HamiltonianModel::barbanis(),
            search: SearchSettings::default(),
            trace: TraceOptions::default(),
            spectrum: SpectrumOptions::default(),
            arc: ArcOptions::default(),
            surface: SurfaceOptions::default(),
            oracle: OracleOptions::default(),
            out: PathBuf::from("out"),
        }
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub energy: Option<f64>,
    pub e_max: Option<f64>,
    pub state: Option<(usize, usize)>,
    pub arc: Option<usize>,
    pub out: Option<PathBuf>,
    pub grid: Option<usize>,
    pub hbar: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Trace,
    Spectrum,
    Arc,
    ActionSurface,
    Oracle,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Reads `path` (built-in defaults when `None`) and applies `overrides`
    /// for `command`. Nothing is written.
    pub fn load(path: Option<&Path>, command: Command, overrides: &Overrides) -> Result<Self, CliError> {
        let mut config = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
                Self::from_toml(&text)?
            }
            None => Self::default(),
        };
        config.apply(command, overrides);
        config.validate(command)?;
        Ok(config)
    }

    pub fn apply(&mut self, command: Command, o: &Overrides) {
        if let Some(h) = o.hbar {
            self.model.hbar = h;
        }
        if let Some(out) = &o.out {
            self.out = out.clone();
        }
        if let Some(e) = o.e_max {
            self.spectrum.e_max = e;
        }
        if let Some(k) = o.arc {
            self.arc.arc = k;
        }
        match command {
            Command::Trace => {
                if let Some(e) = o.energy {
                    self.trace.energy = e;
                }
            }
            Command::Arc => {
                if o.energy.is_some() {
                    self.arc.energy = o.energy;
                }
                if let Some(s) = o.state {
                    self.arc.state = s;
                }
                if let Some(n) = o.grid {
                    self.search.n_grid = n;
                }
            }
            Command::ActionSurface => {
                if let Some(s) = o.state {
                    self.surface.state = s;
                }
                if let Some(n) = o.grid {
                    self.surface.resolution = n;
                }
            }
            Command::Spectrum | Command::Oracle => {
                if let Some(n) = o.grid {
                    self.search.n_grid = n;
                }
            }
        }
    }

    pub fn validate(&self, command: Command) -> Result<(), CliError> {
        self.model.validate().map_err(|e| CliError::Config(e.to_string()))?;
        let s = &self.search;
        let c = &s.caustic;
        let positive = [
            ("search.t_max", s.t_max),
            ("search.step", s.step),
            ("search.decay", s.decay),
            ("search.tolerance", s.tolerance),
            ("search.fd_energy", s.fd_energy),
            ("search.fd_angle", s.fd_angle),
            ("search.max_step_energy", s.max_step_energy),
            ("search.max_step_angle", s.max_step_angle),
            ("search.energy_cap", s.energy_cap),
            ("search.caustic.penalty", c.penalty),
            ("search.caustic.fit_tolerance", c.fit_tolerance),
            ("search.caustic.vertex_kinetic_fraction", c.vertex_kinetic_fraction),
            ("search.caustic.extension_fraction", c.extension_fraction),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(CliError::Config(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !(s.seed_margin >= 0.0 && s.seed_margin.is_finite()) {
            return Err(CliError::Config(format!("search.seed_margin must be non-negative, got {}", s.seed_margin)));
        }
        if s.step >= s.t_max {
            return Err(CliError::Config(format!("search.step {} must be below search.t_max {}", s.step, s.t_max)));
        }
        if s.n_grid < 64 {
            return Err(CliError::Config(format!("n_grid must be at least 64, got {}", s.n_grid)));
        }
        if s.max_iterations == 0 || c.intervals < 4 {
            return Err(CliError::Config("search.max_iterations must be positive and search.caustic.intervals at least 4".into()));
        }
        match command {
            Command::Trace => {
                let t = &self.trace;
                if !(t.energy.is_finite() && t.energy > 0.0) || !t.angle.is_finite() {
                    return Err(CliError::Config(format!("trace needs a positive energy and finite angle, got {} and {}", t.energy, t.angle)));
                }
                if t.arc_samples < 2 || t.stride == 0 {
                    return Err(CliError::Config("trace.arc_samples must be at least 2 and trace.stride positive".into()));
                }
            }
            Command::Spectrum => {
                let e = self.spectrum.e_max;
                if !(e.is_finite() && e > 0.0) {
                    return Err(CliError::Config(format!("e_max must be positive, got {e}")));
                }
                if e > s.energy_cap {
                    return Err(CliError::Config(format!("e_max {e} exceeds the bound-motion cap {}", s.energy_cap)));
                }
            }
            Command::Arc => {
                if !(1..=4).contains(&self.arc.arc) {
                    return Err(CliError::Config(format!("arc index must be 1..4, got {}", self.arc.arc)));
                }
                if let Some(e) = self.arc.energy {
                    if !(e.is_finite() && e > 0.0 && e <= s.energy_cap) {
                        return Err(CliError::Config(format!("arc energy must lie in (0, {}], got {e}", s.energy_cap)));
                    }
                }
            }
            Command::ActionSurface => {
                if !self.model.is_separable() {
                    return Err(CliError::Config(format!(
                        "action surfaces are defined only for the separable model (lambda = 0), got lambda = {}; \
                         the interior action of coupled models is out of scope",
                        self.model.lambda
                    )));
                }
                let sf = &self.surface;
                if sf.resolution < 2 || !(sf.margin >= 0.0 && sf.margin.is_finite()) {
                    return Err(CliError::Config("surface.resolution must be at least 2 and surface.margin non-negative".into()));
                }
            }
            Command::Oracle => {}
        }
        if matches!(command, Command::Spectrum | Command::Arc | Command::Oracle) {
            let o = &self.oracle;
            if o.n_max < 6 || o.count == 0 {
                return Err(CliError::Config("oracle.n_max must be at least 6 and oracle.count positive".into()));
            }
        }
        check_output_dir(&self.out)
    }
}

fn check_output_dir(out: &Path) -> Result<(), CliError> {
    let existing = out.ancestors().find(|p| p.as_os_str().is_empty() || p.exists());
    match existing {
        Some(p) if p.as_os_str().is_empty() => Ok(()),
        Some(p) => {
            let meta = std::fs::metadata(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            if !meta.is_dir() {
                return Err(CliError::Config(format!("output path {} is not a directory", p.display())));
            }
            if meta.permissions().readonly() {
                return Err(CliError::Config(format!("output directory {} is not writable", p.display())));
            }
            Ok(())
        }
        None => Err(CliError::Config(format!("no usable parent for output directory {}", out.display()))),
    }
}

/// Parses `M,N`.
pub fn parse_state(text: &str) -> Result<(usize, usize), String> {
    let (m, n) = text.split_once(',').ok_or_else(|| format!("expected M,N, got {text:?}"))?;
    let m = m.trim().parse().map_err(|_| format!("bad M in {text:?}"))?;
    let n = n.trim().parse().map_err(|_| format!("bad N in {text:?}"))?;
    Ok((m, n))
}
