//! Scenario files: TOML documents, optionally layered on a named preset.
//!
//! A scenario may name a preset with `preset = "<name>"`; its own tables are
//! then merged key by key over the preset. Every key missing after the merge
//! takes its default value, and the fully resolved scenario is echoed beside
//! the outputs of every command.

use crate::diagnostics::MonitorConfig;
use crate::error::{Error, Result};
use crate::fields::{InitialFamily, StabilityThresholds, State};
use crate::grid::{Cutoff, Grid2D};
use crate::outer::{OuterFlow, TraceFamily};
use crate::solver::{RunOptions, SolverConfig};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// File name of the resolved-scenario echo in every output directory.
pub const ECHO_FILE: &str = "scenario.toml";

const PRESETS: [(&str, &str); 7] = [
    ("stability-demo", include_str!("../presets/stability-demo.toml")),
    ("no-magnetic", include_str!("../presets/no-magnetic.toml")),
    ("epsilon-family", include_str!("../presets/epsilon-family.toml")),
    ("manufactured", include_str!("../presets/manufactured.toml")),
    ("crocco-validate", include_str!("../presets/crocco-validate.toml")),
    ("uniqueness", include_str!("../presets/uniqueness.toml")),
    ("zero", include_str!("../presets/zero.toml")),
];

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridParams {
    pub nx: usize,
    pub ny: usize,
    pub y_max: f64,
}

impl Default for GridParams {
    fn default() -> Self {
        Self {
            nx: 64,
            ny: 769,
            y_max: 12.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CutoffParams {
    pub r0: f64,
}

impl Default for CutoffParams {
    fn default() -> Self {
        Self { r0: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonitorParams {
    /// Order of the monitored norms.
    pub m: usize,
    pub majorant: bool,
    /// Sample every this many steps.
    pub every: usize,
    /// Snapshot every this many steps; 0 keeps only the first and last states.
    pub snapshot_every: usize,
}

impl Default for MonitorParams {
    fn default() -> Self {
        Self {
            m: 2,
            majorant: true,
            every: 1,
            snapshot_every: 25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpsilonParams {
    pub values: Vec<f64>,
}

impl Default for EpsilonParams {
    fn default() -> Self {
        Self {
            values: vec![1e-2, 1e-3, 1e-4],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CroccoParams {
    /// Comparison times; the comparison integrates to the last one.
    pub times: Vec<f64>,
    /// Number of `eta` nodes; 0 uses the primal `ny`.
    pub n_eta: usize,
}

impl Default for CroccoParams {
    fn default() -> Self {
        Self {
            times: vec![0.1, 0.25, 0.5],
            n_eta: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UniquenessParams {
    /// Perturbation size; the experiment also runs `0` and `d / 2`.
    pub d: f64,
    pub sample_every: usize,
}

impl Default for UniquenessParams {
    fn default() -> Self {
        Self {
            d: 1e-2,
            sample_every: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    /// Preset this scenario is layered on; cleared once resolved.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    pub name: String,
    /// Seed of the randomized corpora and of the uniqueness perturbation.
    pub seed: u64,
    pub grid: GridParams,
    pub cutoff: CutoffParams,
    pub trace: TraceFamily,
    pub initial: InitialFamily,
    pub solver: SolverConfig,
    pub monitor: MonitorParams,
    /// Present only for tangential-regularization families.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<EpsilonParams>,
    pub crocco: CroccoParams,
    pub uniqueness: UniquenessParams,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            preset: None,
            name: "custom".into(),
            seed: 0,
            grid: GridParams::default(),
            cutoff: CutoffParams::default(),
            trace: TraceFamily::default(),
            initial: InitialFamily::default(),
            solver: SolverConfig::default(),
            monitor: MonitorParams::default(),
            epsilon: None,
            crocco: CroccoParams::default(),
            uniqueness: UniquenessParams::default(),
        }
    }
}

/// Recursively overlays `top` on `base`; tables merge, everything else is
/// replaced.
fn merge(base: &mut toml::Value, top: toml::Value) {
    match (base, top) {
        (toml::Value::Table(b), toml::Value::Table(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    // A different family replaces the whole table so that
                    // parameters of the old family do not leak into it.
                    Some(old) if family_changes(old, &v) => *old = v,
                    Some(old) => merge(old, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, t) => *b = t,
    }
}

fn family_changes(old: &toml::Value, new: &toml::Value) -> bool {
    match (old.get("family"), new.get("family")) {
        (Some(a), Some(b)) => a != b,
        _ => false,
    }
}

fn preset_source(name: &str) -> Result<&'static str> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, src)| *src)
        .ok_or_else(|| {
            let known: Vec<_> = preset_names().collect();
            Error::Scenario(format!("unknown preset '{name}' (known: {})", known.join(", ")))
        })
}

fn parse_value(text: &str, origin: &str) -> Result<toml::Value> {
    text.parse::<toml::Table>()
        .map(toml::Value::Table)
        .map_err(|e| Error::Scenario(format!("{origin}: {e}")))
}

/// Resolves `preset` chains (at most a few levels deep).
fn resolve_value(mut v: toml::Value, depth: usize) -> Result<toml::Value> {
    let preset = v.get("preset").and_then(|p| p.as_str()).map(str::to_owned);
    let Some(name) = preset else {
        return Ok(v);
    };
    if depth > 4 {
        return Err(Error::Scenario(format!("preset chain too deep at '{name}'")));
    }
    let mut base = resolve_value(parse_value(preset_source(&name)?, &name)?, depth + 1)?;
    if let toml::Value::Table(t) = &mut v {
        t.remove("preset");
    }
    merge(&mut base, v);
    Ok(base)
}

impl Scenario {
    /// Parses and resolves a scenario document; `origin` labels errors.
    pub fn from_toml(text: &str, origin: &str) -> Result<Self> {
        let v = resolve_value(parse_value(text, origin)?, 0)?;
        let mut s: Scenario = v
            .try_into()
            .map_err(|e: toml::de::Error| Error::Scenario(format!("{origin}: {e}")))?;
        s.preset = None;
        s.validate()?;
        Ok(s)
    }

    /// A shipped preset, resolved.
    pub fn preset(name: &str) -> Result<Self> {
        Self::from_toml(preset_source(name)?, name)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Scenario(e.to_string()))
    }

    /// Every invariant violation, joined into one error.
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if let Err(e) = Cutoff::new(self.cutoff.r0) {
            bad.push(e.to_string());
        }
        if let Err(e) = self.build_grid() {
            bad.push(e.to_string());
        }
        if let Err(e) = self.solver.validate() {
            bad.push(e.to_string());
        }
        if self.monitor.m > 3 {
            bad.push(format!("monitor.m = {} exceeds 3", self.monitor.m));
        }
        if let Some(eps) = &self.epsilon {
            if eps.values.len() < 2 {
                bad.push("epsilon.values needs at least two entries".into());
            }
            if eps.values.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
                bad.push(format!("epsilon.values {:?} must be positive", eps.values));
            }
        }
        let times = &self.crocco.times;
        if times.is_empty() || times.iter().any(|&t| !(t > 0.0 && t.is_finite())) || times.windows(2).any(|w| w[1] <= w[0]) {
            bad.push(format!("crocco.times {times:?} must be positive and increasing"));
        }
        if !(self.uniqueness.d >= 0.0 && self.uniqueness.d.is_finite()) {
            bad.push(format!("uniqueness.d = {} must be non-negative", self.uniqueness.d));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Scenario(bad.join("; ")))
        }
    }

    /// Multiplies the resolution in both directions by `scale`.
    pub fn scaled(&self, scale: usize) -> Self {
        let s = scale.max(1);
        let mut out = self.clone();
        out.grid.nx *= s;
        out.grid.ny = (self.grid.ny - 1) * s + 1;
        if self.crocco.n_eta > 0 {
            out.crocco.n_eta = (self.crocco.n_eta - 1) * s + 1;
        }
        out
    }

    pub fn build_grid(&self) -> Result<Grid2D> {
        let g = Grid2D::new(self.grid.nx, self.grid.ny, self.grid.y_max)?;
        let limit = 4.0 * self.cutoff.r0;
        if g.y_max < limit {
            return Err(Error::IncompatibleCutoff { y_max: g.y_max, limit });
        }
        Ok(g)
    }

    pub fn cutoff(&self) -> Result<Cutoff> {
        Cutoff::new(self.cutoff.r0)
    }

    pub fn outer_flow(&self) -> OuterFlow {
        OuterFlow::from_family(&self.trace)
    }

    pub fn thresholds(&self) -> StabilityThresholds {
        self.solver.thresholds
    }

    pub fn initial_state(&self, grid: &Grid2D) -> Result<State> {
        Ok(self.initial.build(grid, &self.outer_flow(), &self.cutoff()?))
    }

    pub fn run_options(&self) -> RunOptions {
        RunOptions {
            monitor: MonitorConfig {
                m: self.monitor.m,
                majorant: self.monitor.majorant,
            },
            monitor_every: self.monitor.every.max(1),
            snapshot_every: (self.monitor.snapshot_every > 0).then_some(self.monitor.snapshot_every),
        }
    }

    pub fn n_eta(&self) -> usize {
        if self.crocco.n_eta > 0 {
            self.crocco.n_eta
        } else {
            self.grid.ny
        }
    }

    /// Writes the resolved scenario to `dir/ECHO_FILE`.
    pub fn write_echo(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(ECHO_FILE), self.to_toml()?)?;
        Ok(())
    }
}

/// Reads, resolves and validates a scenario file.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)?;
    Scenario::from_toml(&text, &path.display().to_string())
}

/// Either a path to a scenario file or the name of a preset.
pub fn load_scenario_or_preset(spec: &str) -> Result<Scenario> {
    let p = Path::new(spec);
    if p.exists() {
        load_scenario(p)
    } else if preset_source(spec).is_ok() {
        Scenario::preset(spec)
    } else {
        Err(Error::Scenario(format!(
            "'{spec}' is neither a file nor a preset ({})",
            preset_names().collect::<Vec<_>>().join(", ")
        )))
    }
}
