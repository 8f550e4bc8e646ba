//! Scenario configuration: defaults, file loading and `key=value` overrides.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::safety::BarrierSpec;

pub const MARCO_MASS: f64 = 13.5;
pub const MARCO_INERTIA: [[f64; 3]; 3] =
    [[0.0465, -0.0007, 0.0004], [-0.0007, 0.0486, -0.0021], [0.0004, -0.0021, 0.0482]];
pub const CSM_MASS: f64 = 30322.9;
pub const CSM_INERTIA: [[f64; 3]; 3] =
    [[49248.7, 2862.1, -370.1], [2862.1, 108514.2, -3075.0], [-370.1, -3075.0, 110771.7]];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    MarcoTrack,
    MarcoIss,
    ApolloTransposition,
    ApolloDocking,
    ApolloFuel,
    CorridorDock,
    AltitudeAvoid,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 7] = [
        ScenarioKind::MarcoTrack,
        ScenarioKind::MarcoIss,
        ScenarioKind::ApolloTransposition,
        ScenarioKind::ApolloDocking,
        ScenarioKind::ApolloFuel,
        ScenarioKind::CorridorDock,
        ScenarioKind::AltitudeAvoid,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ScenarioKind::MarcoTrack => "marco_track",
            ScenarioKind::MarcoIss => "marco_iss",
            ScenarioKind::ApolloTransposition => "apollo_transposition",
            ScenarioKind::ApolloDocking => "apollo_docking",
            ScenarioKind::ApolloFuel => "apollo_fuel",
            ScenarioKind::CorridorDock => "corridor_dock",
            ScenarioKind::AltitudeAvoid => "altitude_avoid",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| Error::Config(format!("unknown scenario '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Law {
    /// Normalized proportional term; semi-globally exponentially stable.
    Proposed,
    /// Unnormalized proportional term.
    Baseline,
}

/// A pose given as rotation (axis, angle) and position. Positions are in the
/// parent frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseConfig {
    #[serde(default = "z_axis")]
    pub axis: [f64; 3],
    #[serde(default)]
    pub angle_deg: f64,
    #[serde(default)]
    pub position: [f64; 3],
}

fn z_axis() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

impl PoseConfig {
    pub fn identity() -> Self {
        Self { axis: z_axis(), angle_deg: 0.0, position: [0.0; 3] }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReferenceConfig {
    /// Constant desired pose.
    Fixed { pose: PoseConfig },
    /// Screw motion about a fixed axis; see `ScrewReference`.
    Screw { start: PoseConfig, axis: [f64; 3], spin: f64, lead: f64, rate: f64, amplitude: f64, freq: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialConfig {
    /// Tracking errors sampled uniformly from the ball of radius `radius`.
    Ball,
    /// One body state: inertial pose plus body-frame twist.
    Body {
        pose: PoseConfig,
        #[serde(default)]
        omega: [f64; 3],
        #[serde(default)]
        velocity: [f64; 3],
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    pub seed: u64,
    /// Number of trajectories.
    pub n: usize,
    pub dt: f64,
    pub t_final: f64,
    /// Renormalize the pose every this many steps; 0 disables it.
    pub renormalize_every: usize,
    /// Write one CSV row every this many steps.
    pub record_every: usize,

    pub mass: f64,
    pub inertia: [[f64; 3]; 3],
    pub kp: f64,
    pub kd: f64,
    pub law: Law,

    /// Ball radius R for initial conditions and the stability envelope.
    pub radius: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,

    /// Per-component bound of the uniform disturbances; 0 disables them.
    pub d_max: f64,
    pub settle_fraction: f64,

    pub reference: ReferenceConfig,
    pub initial: InitialConfig,

    /// Permitted terminal axial position error, m.
    pub axial_tolerance: f64,
    /// Required terminal `‖q̂ − 1‖`.
    pub convergence_tol: f64,

    pub fuel_c1: f64,
    pub fuel_m0: f64,
    #[serde(default)]
    pub fuel_report_times: Vec<f64>,

    #[serde(default)]
    pub barriers: Vec<BarrierSpec>,
    pub a1: f64,
    pub a2: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_max: Option<f64>,
}

impl ScenarioConfig {
    pub fn defaults(kind: ScenarioKind) -> Self {
        let marco = Self {
            scenario: kind,
            seed: 1,
            n: 100,
            dt: 1e-2,
            t_final: 120.0,
            renormalize_every: 1,
            record_every: 20,
            mass: MARCO_MASS,
            inertia: MARCO_INERTIA,
            kp: 0.2,
            kd: 0.3,
            law: Law::Proposed,
            radius: 2.5,
            c: None,
            beta: None,
            d_max: 0.0,
            settle_fraction: 0.2,
            reference: ReferenceConfig::Fixed { pose: PoseConfig::identity() },
            initial: InitialConfig::Ball,
            axial_tolerance: 0.3,
            convergence_tol: 1e-3,
            fuel_c1: crate::sim::fuel::DEFAULT_C1,
            fuel_m0: 0.0,
            fuel_report_times: Vec::new(),
            barriers: Vec::new(),
            a1: 2.0,
            a2: 1.0,
            f_max: None,
        };
        let apollo = Self { mass: CSM_MASS, inertia: CSM_INERTIA, kp: 100.0, kd: 100.0, dt: 0.1, ..marco.clone() };
        let flip =
            ReferenceConfig::Fixed { pose: PoseConfig { axis: [0.0, 1.0, 0.0], angle_deg: 180.0, position: [0.0; 3] } };
        let at_rest = InitialConfig::Body { pose: PoseConfig::identity(), omega: [0.0; 3], velocity: [0.0; 3] };
        match kind {
            ScenarioKind::MarcoTrack => marco,
            // Far-out samples drift tens of metres before the log potential brings
            // them back, so the horizon is long and the step coarse.
            ScenarioKind::MarcoIss => {
                Self { radius: 3.5, d_max: 1e-2, dt: 0.1, t_final: 10_000.0, record_every: 50, ..marco }
            }
            ScenarioKind::ApolloTransposition => Self {
                n: 1,
                radius: 1.5,
                t_final: 25_000.0,
                record_every: 100,
                reference: flip,
                initial: at_rest,
                ..apollo
            },
            ScenarioKind::ApolloDocking => Self { n: 50, radius: 0.1, t_final: 2000.0, record_every: 50, ..apollo },
            ScenarioKind::ApolloFuel => Self {
                n: 1,
                radius: 1.5,
                t_final: 400.0,
                record_every: 10,
                reference: flip,
                initial: at_rest,
                fuel_report_times: vec![100.0, 200.0, 300.0, 400.0],
                ..apollo
            },
            ScenarioKind::CorridorDock => Self {
                n: 1,
                kp: 2.0,
                kd: 3.0,
                t_final: 60.0,
                record_every: 10,
                reference: ReferenceConfig::Fixed {
                    pose: PoseConfig { position: [0.5, 0.0, 0.0], ..PoseConfig::identity() },
                },
                initial: InitialConfig::Body {
                    pose: PoseConfig { position: [1.8, 0.2, -0.1], ..PoseConfig::identity() },
                    omega: [0.0; 3],
                    velocity: [-0.05, 0.12, 0.0],
                },
                barriers: vec![BarrierSpec::Corridor { r1: 2.0, r2: 4.0, r3: 5.0, theta_deg: 20.0 }],
                f_max: Some(2.0),
                ..marco
            },
            ScenarioKind::AltitudeAvoid => Self {
                n: 1,
                kp: 2.0,
                kd: 3.0,
                t_final: 60.0,
                record_every: 10,
                reference: ReferenceConfig::Fixed {
                    pose: PoseConfig { position: [2.0, 0.0, -0.5], ..PoseConfig::identity() },
                },
                initial: InitialConfig::Body {
                    pose: PoseConfig { position: [0.0, 0.0, 1.0], ..PoseConfig::identity() },
                    omega: [0.0; 3],
                    velocity: [0.2, 0.0, 0.15],
                },
                barriers: vec![
                    BarrierSpec::HalfSpace { normal: [0.0, 0.0, 1.0], offset: 0.0 },
                    BarrierSpec::Ceiling { height: 1.5 },
                ],
                f_max: Some(5.0),
                ..marco
            },
        }
    }

    pub fn steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("n must be at least 1".into()));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_final >= self.dt) || !self.t_final.is_finite() {
            return Err(Error::Config(format!("t_final must be at least dt, got {}", self.t_final)));
        }
        if self.record_every == 0 {
            return Err(Error::Config("record_every must be at least 1".into()));
        }
        if !(self.kp > 0.0) || !(self.kd > 0.0) {
            return Err(Error::Domain(format!("gains must be positive, got kp={}, kd={}", self.kp, self.kd)));
        }
        if !(self.radius > 0.0) {
            return Err(Error::Domain(format!("radius must be positive, got {}", self.radius)));
        }
        if !(self.d_max >= 0.0) {
            return Err(Error::Domain(format!("d_max must be nonnegative, got {}", self.d_max)));
        }
        if !(self.settle_fraction > 0.0 && self.settle_fraction <= 1.0) {
            return Err(Error::Config(format!("settle_fraction must lie in (0, 1], got {}", self.settle_fraction)));
        }
        for b in &self.barriers {
            b.validate()?;
        }
        Ok(())
    }

    /// Parses TOML, falling back to JSON.
    pub fn parse(text: &str) -> Result<Self> {
        match toml::from_str::<Self>(text) {
            Ok(c) => Ok(c),
            Err(te) => {
                serde_json::from_str(text).map_err(|je| Error::Config(format!("not valid TOML ({te}) or JSON ({je})")))
            }
        }
    }

    /// Reads a config file. Keys missing from the file take the defaults of
    /// the scenario it names (or `fallback`).
    pub fn load(path: &Path, fallback: Option<ScenarioKind>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let value: serde_json::Value = match toml::from_str::<toml::Value>(&text) {
            Ok(v) => serde_json::to_value(v)?,
            Err(te) => serde_json::from_str(&text)
                .map_err(|je| Error::Config(format!("{}: not valid TOML ({te}) or JSON ({je})", path.display())))?,
        };
        let kind = match value.get("scenario").and_then(|s| s.as_str()) {
            Some(s) => s.parse()?,
            None => fallback.ok_or_else(|| Error::Config("config names no scenario".into()))?,
        };
        let mut base = serde_json::to_value(Self::defaults(kind))?;
        merge(&mut base, value);
        serde_json::from_value(base).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Applies `key=value` with a dotted key path; array elements are
    /// addressed by index, e.g. `barriers.0.r1=2.5`. Values parse as JSON
    /// where possible and as strings otherwise.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override '{assignment}' is not key=value")))?;
        let value: serde_json::Value =
            serde_json::from_str(raw.trim()).unwrap_or_else(|_| serde_json::Value::String(raw.trim().to_string()));
        let mut root = serde_json::to_value(&*self)?;
        let mut node = &mut root;
        let parts: Vec<&str> = key.trim().split('.').collect();
        for (i, part) in parts.iter().enumerate() {
            let last = i + 1 == parts.len();
            node = match node {
                serde_json::Value::Object(map) => {
                    if last {
                        map.insert(part.to_string(), value.clone());
                        break;
                    }
                    map.get_mut(*part).ok_or_else(|| Error::Config(format!("unknown key '{key}'")))?
                }
                serde_json::Value::Array(items) => {
                    let idx: usize = part.parse().map_err(|_| Error::Config(format!("bad index in '{key}'")))?;
                    let slot =
                        items.get_mut(idx).ok_or_else(|| Error::Config(format!("index out of range in '{key}'")))?;
                    if last {
                        *slot = value.clone();
                        break;
                    }
                    slot
                }
                _ => return Err(Error::Config(format!("'{key}' does not name a setting"))),
            };
        }
        *self = serde_json::from_value(root).map_err(|e| Error::Config(format!("{key}: {e}")))?;
        Ok(())
    }
}

fn merge(base: &mut serde_json::Value, over: serde_json::Value) {
    match (base, over) {
        (serde_json::Value::Object(b), serde_json::Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    // Tagged tables are replaced whole so a variant switch does
                    // not inherit stale fields.
                    Some(slot) if slot.is_object() && v.get("kind").is_none() && v.get("variant").is_none() => {
                        merge(slot, v)
                    }
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, o) => *b = o,
    }
}
