//! Run configuration: a TOML file layered over a named preset, with
//! `section.key=value` overrides applied last.
//!
//! Every section is optional in the file; missing keys come from the preset.
//! Unknown keys are rejected.

use std::path::{Path, PathBuf};

use ropeclimb_core::mpc::MpcConfig;
use ropeclimb_core::planner::{PlannerConfig, PlannerWeights};
use ropeclimb_core::sim::{DisturbanceSampler, DisturbanceSpec, LandingParams, NoiseSpec, SimConfig};
use ropeclimb_core::{Ellipsoid, Scenario, Vec3};
use ropeclimb_wrench::GridSpec;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse {origin}: {message}")]
    Parse { origin: String, message: String },
    #[error("unknown preset '{0}' (available: default, landing, obstacle)")]
    UnknownPreset(String),
    #[error("bad override '{0}': expected section.key=value")]
    Override(String),
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
}

pub const PRESETS: [&str; 3] = ["default", "landing", "obstacle"];

/// Endpoints of the jump to plan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct JumpSpec {
    pub p0: Vec3,
    pub p_tg: Vec3,
}

impl Default for JumpSpec {
    fn default() -> Self {
        JumpSpec { p0: Vec3::new(0.2, 2.5, -6.0), p_tg: Vec3::new(0.2, 4.0, -4.0) }
    }
}

/// Fully resolved configuration shared by every command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub seed: u64,
    pub scenario: Scenario,
    pub jump: JumpSpec,
    pub planner: PlannerWeights,
    pub integrator: PlannerConfig,
    pub mpc: MpcConfig,
    pub sim: SimConfig,
    pub disturbance: DisturbanceSpec,
    pub noise: NoiseSpec,
    pub sampler: DisturbanceSampler,
    pub landing: LandingParams,
    pub grid: GridSpec,
}

impl Default for ScenarioFile {
    fn default() -> Self {
        ScenarioFile {
            seed: 0,
            scenario: Scenario::default(),
            jump: JumpSpec::default(),
            planner: PlannerWeights::default(),
            integrator: PlannerConfig::default(),
            mpc: MpcConfig::default(),
            sim: SimConfig::default(),
            disturbance: DisturbanceSpec::None,
            noise: NoiseSpec::default(),
            sampler: DisturbanceSampler::default(),
            landing: LandingParams::default(),
            grid: GridSpec { x: 1.5, y_min: 0.0, y_max: 5.0, ny: 20, z_min: -2.0, z_max: -10.0, nz: 20 },
        }
    }
}

/// (key, unit, meaning) for every configurable field. Unit "-" marks
/// dimensionless quantities, flags and counts.
pub const UNITS: &[(&str, &str, &str)] = &[
    ("seed", "-", "seed for sensor noise and batch sampling"),
    ("scenario.anchor_left", "m", "left rope anchor, must be the origin"),
    ("scenario.anchor_right", "m", "right rope anchor on +Y"),
    ("scenario.mass", "kg", "robot mass"),
    ("scenario.gravity", "m/s^2", "gravity vector"),
    ("scenario.wall_normal", "-", "outward unit normal of the wall face"),
    ("scenario.wall_offset", "m", "wall plane offset along its normal"),
    ("scenario.contact_normal", "-", "unit normal of the surface under the leg and wheels"),
    ("scenario.mu", "-", "friction coefficient"),
    ("scenario.f_leg_max", "N", "leg impulse force bound"),
    ("scenario.f_r_max", "N", "rope tension bound"),
    ("scenario.f_p_max", "N", "propeller thrust bound"),
    ("scenario.t_th", "s", "thrust duration"),
    ("scenario.d_b", "m", "landing wheel spacing"),
    ("scenario.d_w", "m", "wheel clearance from the CoM along the contact normal"),
    ("scenario.d_h", "m", "hoist attachment spacing"),
    ("scenario.wheel_z_offset", "m", "wheel offset along the wall up axis"),
    ("scenario.singularity_eps", "-", "smallest admissible |sin psi|"),
    ("scenario.obstacle", "-", "optional ellipsoid on the wall face"),
    ("scenario.obstacle.center", "m", "ellipsoid centre"),
    ("scenario.obstacle.semi_axes", "m", "ellipsoid semi-axes"),
    ("jump.p0", "m", "lift-off position"),
    ("jump.p_tg", "m", "landing target"),
    ("planner.n_knots", "-", "number of control intervals"),
    ("planner.w_hw", "1/J", "hoist work weight"),
    ("planner.w_s", "s^2/N^2", "input smoothing weight"),
    ("planner.w_terminal", "1/m^2", "terminal error weight"),
    ("planner.slack", "m", "radius of the terminal ball"),
    ("planner.clearance", "m", "obstacle clearance"),
    ("planner.wall_eps", "m", "margin kept from the wall plane"),
    ("planner.t_f_min", "s", "shortest flight time"),
    ("planner.t_f_max", "s", "longest flight time"),
    ("integrator.method", "-", "rk4 or euler"),
    ("integrator.n_sub", "-", "integration substeps per knot"),
    ("integrator.max_iters", "-", "SQP iteration cap"),
    ("mpc.n_mpc", "-", "horizon knots, default 0.4 N"),
    ("mpc.dt_mpc", "s", "control period, default the plan knot interval"),
    ("mpc.w_p", "1/m^2", "position tracking weight"),
    ("mpc.w_u", "1/N^2", "input smoothing weight"),
    ("mpc.w_pf", "1/m^2", "horizon-end position weight"),
    ("mpc.max_iters", "-", "Gauss-Newton iteration cap"),
    ("sim.dt_sim", "s", "simulation step"),
    ("disturbance.kind", "-", "none, constant or impulsive"),
    ("disturbance.force", "N", "disturbance force"),
    ("disturbance.start", "s", "impulse start after lift-off"),
    ("disturbance.duration", "s", "impulse duration"),
    ("noise.sigma", "rad/s, m/s, m/s", "rate noise standard deviations"),
    ("noise.seed", "-", "noise stream seed"),
    ("sampler.amplitude_min", "N", "smallest sampled impulse"),
    ("sampler.amplitude_max", "N", "largest sampled impulse"),
    ("sampler.duration", "s", "sampled impulse duration"),
    ("sampler.intervals", "-", "flight subdivisions for the batch"),
    ("landing.stiffness", "N/m", "wall contact stiffness"),
    ("landing.damping", "N s/m", "wall contact damping"),
    ("landing.lateral_damping", "N s/m", "wheel damping along the wall"),
    ("landing.standoff", "m", "CoM wall distance at first contact"),
    ("landing.propeller_push", "-", "push against the wall after contact"),
    ("landing.settle", "s", "simulated time after touch-down"),
    ("landing.max_hold", "s", "longest wait for a late touch-down"),
    ("grid.x", "m", "heatmap X coordinate"),
    ("grid.y_min", "m", "first Y sample"),
    ("grid.y_max", "m", "last Y sample"),
    ("grid.ny", "-", "Y samples"),
    ("grid.z_min", "m", "first Z sample"),
    ("grid.z_max", "m", "last Z sample"),
    ("grid.nz", "-", "Z samples"),
];

pub fn unit_of(key: &str) -> Option<&'static str> {
    UNITS.iter().find(|(k, _, _)| *k == key).map(|(_, u, _)| *u)
}

pub fn preset(name: &str) -> Result<ScenarioFile, ConfigError> {
    let mut cfg = ScenarioFile::default();
    match name {
        "default" => {}
        "landing" => cfg.scenario = Scenario::landing(),
        "obstacle" => {
            cfg.scenario.obstacle =
                Some(Ellipsoid { center: Vec3::new(-0.5, 2.5, -6.0), semi_axes: Vec3::new(1.5, 1.5, 0.87) });
            cfg.jump = JumpSpec { p0: Vec3::new(0.5, 0.5, -6.0), p_tg: Vec3::new(0.5, 4.5, -6.0) };
        }
        other => return Err(ConfigError::UnknownPreset(other.to_string())),
    }
    Ok(cfg)
}

fn to_table(cfg: &ScenarioFile) -> toml::Table {
    toml::Table::try_from(cfg).expect("configuration serializes to a table")
}

/// Deep merge; a table carrying `kind` replaces its target whole so that
/// switching enum variants does not leave stale fields behind.
fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) if !o.contains_key("kind") => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn parse_value(raw: &str) -> toml::Value {
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Apply `section.key=value`; the value is read as a TOML literal, falling
/// back to a bare string.
pub fn apply_override(table: &mut toml::Table, spec: &str) -> Result<(), ConfigError> {
    let (path, raw) = spec.split_once('=').ok_or_else(|| ConfigError::Override(spec.to_string()))?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(ConfigError::Override(spec.to_string()));
    }
    let (last, parents) = keys.split_last().expect("non-empty");
    let mut node = table;
    for k in parents {
        let entry = node.entry(k.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = entry.as_table_mut().ok_or_else(|| ConfigError::Override(spec.to_string()))?;
    }
    node.insert(last.to_string(), parse_value(raw.trim()));
    Ok(())
}

fn finite(v: &Vec3) -> bool {
    v.iter().all(|x| x.is_finite())
}

impl ScenarioFile {
    /// Every offending key, with its expected unit.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut push = |key: String, message: String| {
            let unit = unit_of(&key).filter(|u| *u != "-").map(|u| format!(" [{u}]")).unwrap_or_default();
            out.push(format!("{key}: {message}{unit}"));
        };
        for v in self.scenario.violations() {
            push(format!("scenario.{}", v.key), v.message);
        }
        let section = |what: &str, r: ropeclimb_core::Result<()>| r.err().map(|e| (what.to_string(), e.to_string()));
        for (key, msg) in [
            section("planner", self.planner.check()),
            section("mpc", self.mpc.check()),
            section("disturbance", self.disturbance.check(f64::INFINITY)),
        ]
        .into_iter()
        .flatten()
        {
            push(key, msg);
        }
        if self.integrator.max_iters == 0 {
            push("integrator.max_iters".into(), "must be >= 1".into());
        }
        if !(self.sim.dt_sim > 0.0 && self.sim.dt_sim.is_finite()) {
            push("sim.dt_sim".into(), "must be > 0".into());
        }
        if self.noise.sigma.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            push("noise.sigma".into(), "must be >= 0".into());
        }
        if !finite(&self.jump.p0) {
            push("jump.p0".into(), "components must be finite".into());
        }
        if !finite(&self.jump.p_tg) {
            push("jump.p_tg".into(), "components must be finite".into());
        }
        let s = &self.sampler;
        if s.intervals == 0 {
            push("sampler.intervals".into(), "must be >= 1".into());
        }
        if !(s.amplitude_min >= 0.0 && s.amplitude_max >= s.amplitude_min) {
            push("sampler.amplitude_max".into(), "need 0 <= amplitude_min <= amplitude_max".into());
        }
        if !(s.duration >= 0.0) {
            push("sampler.duration".into(), "must be >= 0".into());
        }
        let l = &self.landing;
        for (key, v) in [
            ("landing.stiffness", l.stiffness),
            ("landing.damping", l.damping),
            ("landing.lateral_damping", l.lateral_damping),
            ("landing.settle", l.settle),
            ("landing.max_hold", l.max_hold),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                push(key.into(), "must be >= 0".into());
            }
        }
        let g = &self.grid;
        if g.ny == 0 {
            push("grid.ny".into(), "must be >= 1".into());
        }
        if g.nz == 0 {
            push("grid.nz".into(), "must be >= 1".into());
        }
        if ![g.x, g.y_min, g.y_max, g.z_min, g.z_max].iter().all(|v| v.is_finite()) {
            push("grid.x".into(), "grid bounds must be finite".into());
        }
        out
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(v))
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// Resolve a configuration from an optional file and preset plus overrides.
    pub fn resolve(text: Option<(&str, &str)>, preset_name: Option<&str>, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut file_table = match text {
            Some((origin, body)) => body
                .parse::<toml::Table>()
                .map_err(|e| ConfigError::Parse { origin: origin.to_string(), message: e.to_string() })?,
            None => toml::Table::new(),
        };
        let from_file = match file_table.remove("preset") {
            Some(toml::Value::String(s)) => Some(s),
            Some(_) => {
                return Err(ConfigError::Parse {
                    origin: text.map_or("overrides", |t| t.0).to_string(),
                    message: "preset must be a string".into(),
                })
            }
            None => None,
        };
        let name = preset_name.map(str::to_string).or(from_file).unwrap_or_else(|| "default".into());
        Self::layered(to_table(&preset(&name)?), file_table, overrides, text.map_or("overrides", |t| t.0))
    }

    /// Overlay a partial table and overrides on top of a resolved config.
    pub fn with_overrides(&self, overrides: &[String]) -> Result<Self, ConfigError> {
        Self::layered(to_table(self), toml::Table::new(), overrides, "overrides")
    }

    fn layered(mut base: toml::Table, over: toml::Table, overrides: &[String], origin: &str) -> Result<Self, ConfigError> {
        merge(&mut base, over);
        for o in overrides {
            let mut single = toml::Table::new();
            apply_override(&mut single, o)?;
            merge(&mut base, single);
        }
        let cfg: ScenarioFile = toml::Value::Table(base)
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::Parse { origin: origin.to_string(), message: e.to_string() })?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Read, merge over its preset, and validate a configuration file.
pub fn load_scenario(path: &Path) -> Result<ScenarioFile, ConfigError> {
    let body = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    ScenarioFile::resolve(Some((&path.display().to_string(), &body)), None, &[])
}
