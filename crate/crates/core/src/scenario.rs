//! Scenario files: world, controller, sensor and simulation settings plus a
//! list of start positions, in JSON.
//!
//! ```json
//! {
//!   "name": "single-disc",
//!   "mode": "known-map",
//!   "world": {
//!     "robot_radius": 0.3,
//!     "safety_margin": 0.1,
//!     "obstacles": [{ "type": "disc", "center": [5.0, 0.0], "radius": 1.0 }]
//!   },
//!   "controller": { "gamma": 0.2, "eps_d": 0.35, "eps_s": 0.2, "eps": 0.1, "s": "auto" },
//!   "starts": [[8.0, 0.3]]
//! }
//! ```
//!
//! Lengths are metres, times seconds, angles radians.

use std::fmt;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::controller::{ControllerParams, HybridState};
use crate::geometry::{rotate_unchecked, ConvexShape, Turn, Vec2};
use crate::regions::{Mode, SetParams};
use crate::sensor::{self, SensorConfig};
use crate::sim::{self, HybridTrajectory, SensorRun, SimConfig, SimError};
use crate::world::WorldModel;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunMode {
    #[default]
    KnownMap,
    SensorBased,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum ObstacleSpec {
    Disc {
        center: [f64; 2],
        radius: f64,
    },
    Polygon {
        vertices: Vec<[f64; 2]>,
    },
    Rectangle {
        min: [f64; 2],
        max: [f64; 2],
    },
    /// Inscribed polygon approximation of an ellipse.
    Ellipse {
        center: [f64; 2],
        semi_axes: [f64; 2],
        #[serde(default)]
        rotation: f64,
        #[serde(default = "default_segments")]
        segments: usize,
    },
}

fn default_segments() -> usize {
    48
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldSpec {
    pub robot_radius: f64,
    pub safety_margin: f64,
    #[serde(default)]
    pub obstacles: Vec<ObstacleSpec>,
}

/// `"auto"` or an explicit vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DecisionSpec {
    Vector([f64; 2]),
    Keyword(String),
}

impl Default for DecisionSpec {
    fn default() -> Self {
        DecisionSpec::Keyword("auto".into())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSpec {
    pub gamma: f64,
    pub eps_d: f64,
    pub eps_s: f64,
    pub eps: f64,
    #[serde(default)]
    pub s: DecisionSpec,
    /// `+1` or `-1`: direction chosen when `x · s = 0`.
    #[serde(default = "default_tie")]
    pub tie: i8,
    /// Inner-layer fraction for sensor-based runs.
    #[serde(default = "default_p_frac")]
    pub p_frac: f64,
}

fn default_tie() -> i8 {
    1
}

fn default_p_frac() -> f64 {
    0.5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorSpec {
    pub max_range: f64,
    #[serde(default = "default_resolution")]
    pub angular_resolution: f64,
    #[serde(default)]
    pub noise_std: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub gap_threshold: Option<f64>,
}

fn default_resolution() -> f64 {
    0.5f64.to_radians()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSpec {
    pub dt: f64,
    pub dwell: Option<f64>,
    pub max_time: f64,
    pub convergence_radius: f64,
    pub flow_priority: bool,
}

impl Default for SimSpec {
    fn default() -> Self {
        let d = SimConfig::default();
        Self {
            dt: d.dt,
            dwell: None,
            max_time: d.max_time,
            convergence_radius: d.convergence_radius,
            flow_priority: d.flow_priority,
        }
    }
}

/// The file as written, before validation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub mode: RunMode,
    pub world: WorldSpec,
    pub controller: ControllerSpec,
    #[serde(default)]
    pub sensor: Option<SensorSpec>,
    #[serde(default)]
    pub sim: SimSpec,
    pub starts: Vec<[f64; 2]>,
}

/// A problem with one field of a scenario file.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("parse error at {0}")]
    Parse(FieldError),
    #[error("invalid scenario:\n{}", .0.iter().map(|e| format!("  {e}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<FieldError>),
}

impl ScenarioFile {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            ScenarioError::Parse(FieldError {
                path: if path == "." { "(root)".into() } else { path },
                message: e.into_inner().to_string(),
            })
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario files serialize")
    }

    /// Validates every field and builds the runnable scenario.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn build(&self) -> Result<Scenario, ScenarioError> {
        let mut errs = Vec::new();
        let mut err = |path: &str, message: String| {
            errs.push(FieldError {
                path: path.into(),
                message,
            })
        };

        let w = &self.world;
        if !(w.robot_radius >= 0.0 && w.robot_radius.is_finite()) {
            err("world.robot_radius", format!("must be non-negative, got {}", w.robot_radius));
        }
        let mut shapes = Vec::new();
        for (i, o) in w.obstacles.iter().enumerate() {
            match build_shape(o) {
                Ok(s) => shapes.push(s),
                Err(e) => err(&format!("world.obstacles[{i}]"), e.to_string()),
            }
        }

        let c = &self.controller;
        if !(c.gamma > 0.0 && c.gamma.is_finite()) {
            err("controller.gamma", format!("must be positive, got {}", c.gamma));
        }
        if !(c.eps_d > 0.0 && c.eps_d.is_finite()) {
            err("controller.eps_d", format!("must be positive, got {}", c.eps_d));
        }
        if !(c.eps_s < c.eps_d) {
            err("controller.eps_s", format!("must be below eps_d = {}, got {}", c.eps_d, c.eps_s));
        }
        if !(c.eps > 0.0) {
            err("controller.eps", format!("must be positive, got {}", c.eps));
        } else if !(c.eps < c.eps_s) {
            err("controller.eps", format!("must be below eps_s = {}, got {}", c.eps_s, c.eps));
        }
        let decision = match &c.s {
            DecisionSpec::Keyword(k) if k == "auto" => None,
            DecisionSpec::Keyword(k) => {
                err("controller.s", format!("expected \"auto\" or [x, y], got {k:?}"));
                None
            }
            DecisionSpec::Vector(v) => {
                let v = Vec2::from(*v);
                if !(v.is_finite() && v.norm() > 0.0) {
                    err("controller.s", "must be a finite non-zero vector".into());
                }
                Some(v)
            }
        };
        let tie = Turn::from_sign(c.tie);
        if tie.is_none() {
            err("controller.tie", format!("must be 1 or -1, got {}", c.tie));
        }
        if !(c.p_frac > 0.0 && c.p_frac < 1.0) {
            err("controller.p_frac", format!("must lie in (0, 1), got {}", c.p_frac));
        }

        let s = &self.sim;
        let sim = SimConfig {
            dt: s.dt,
            max_time: s.max_time,
            dwell: s.dwell.unwrap_or(10.0 * s.dt),
            convergence_radius: s.convergence_radius,
            flow_priority: s.flow_priority,
        };
        if let Err(SimError::InvalidConfig(m)) = sim.validate() {
            let field = m.split_whitespace().next().unwrap_or("sim");
            err(&format!("sim.{field}"), m.clone());
        }

        let world = WorldModel::new(shapes, w.robot_radius, w.safety_margin);
        let report = world.validate(c.eps_d);
        for v in &report.violations {
            let path = match v {
                crate::world::Violation::SafetyMargin { .. } => "world.safety_margin",
                crate::world::Violation::NeighbourhoodWidth { .. } => "controller.eps_d",
                crate::world::Violation::NegativeRadius(_) => "world.robot_radius",
                _ => "world.obstacles",
            };
            err(path, v.to_string());
        }

        let mut sensor = None;
        let mut warnings = Vec::new();
        match (&self.sensor, self.mode) {
            (None, RunMode::SensorBased) => err("sensor", "required for sensor-based runs".into()),
            (None, RunMode::KnownMap) => {}
            (Some(sp), _) => match SensorConfig::new(sp.max_range, sp.angular_resolution, sp.noise_std, sp.seed) {
                Err(e) => err("sensor", e.to_string()),
                Ok(cfg) => {
                    let cfg = cfg.with_gap_threshold(sp.gap_threshold.unwrap_or(0.0));
                    if let Err(e) = cfg.check_range(world.inflation(), c.eps_d) {
                        err("sensor.max_range", e.to_string());
                    }
                    if self.mode == RunMode::SensorBased {
                        warnings.extend(sensor::noise_lint(c.eps_d, c.eps_s, c.eps, Some(c.p_frac), sp.noise_std));
                    }
                    sensor = Some(cfg);
                }
            },
        }

        if self.starts.is_empty() {
            err("starts", "at least one start position is required".into());
        }
        for (i, p) in self.starts.iter().enumerate() {
            let x = Vec2::from(*p);
            if !x.is_finite() {
                err(&format!("starts[{i}]"), "must be finite".into());
            } else if world.distance(x) < world.inflation() {
                err(
                    &format!("starts[{i}]"),
                    format!("lies within r_a = {} of an obstacle", world.inflation()),
                );
            }
        }

        if !errs.is_empty() {
            return Err(ScenarioError::Invalid(errs));
        }
        Ok(Scenario {
            name: self.name.clone(),
            mode: self.mode,
            world,
            gamma: c.gamma,
            sets: SetParams {
                eps_d: c.eps_d,
                eps_s: c.eps_s,
                eps: c.eps,
            },
            decision,
            tie: tie.expect("checked"),
            p_frac: c.p_frac,
            sensor,
            sim,
            starts: self.starts.iter().map(|p| Vec2::from(*p)).collect(),
            warnings,
        })
    }
}

fn build_shape(o: &ObstacleSpec) -> crate::geometry::Result<ConvexShape> {
    match o {
        ObstacleSpec::Disc { center, radius } => ConvexShape::disc((*center).into(), *radius),
        ObstacleSpec::Polygon { vertices } => {
            ConvexShape::polygon(vertices.iter().map(|v| Vec2::from(*v)).collect())
        }
        ObstacleSpec::Rectangle { min, max } => ConvexShape::rectangle((*min).into(), (*max).into()),
        ObstacleSpec::Ellipse {
            center,
            semi_axes,
            rotation,
            segments,
        } => ConvexShape::ellipse(
            (*center).into(),
            (semi_axes[0], semi_axes[1]),
            *rotation,
            *segments,
        ),
    }
}

/// A validated scenario.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub mode: RunMode,
    pub world: WorldModel,
    pub gamma: f64,
    pub sets: SetParams,
    /// `None` resolves per start.
    pub decision: Option<Vec2>,
    pub tie: Turn,
    pub p_frac: f64,
    pub sensor: Option<SensorConfig>,
    pub sim: SimConfig,
    pub starts: Vec<Vec2>,
    /// Non-fatal findings, such as layer widths close to the sensor noise.
    pub warnings: Vec<String>,
}

impl Scenario {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        ScenarioFile::load(path)?.build()
    }

    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        ScenarioFile::from_json(text)?.build()
    }

    /// Decision vector for a start: the configured one, or the `s` that puts
    /// `x0` on the half-line along `ν_1(s)`.
    pub fn decision_for(&self, x0: Vec2) -> Vec2 {
        self.decision.unwrap_or_else(|| auto_decision(x0))
    }

    pub fn params_for(&self, x0: Vec2) -> ControllerParams {
        ControllerParams {
            gamma: self.gamma,
            s: self.decision_for(x0),
            sets: self.sets,
            tie: self.tie,
        }
    }

    pub fn run_known_map(&self, x0: Vec2) -> Result<HybridTrajectory, SimError> {
        sim::run(x0, &self.world, &self.params_for(x0), &self.sim)
    }

    pub fn run_sensor_based(&self, x0: Vec2) -> Result<HybridTrajectory, SimError> {
        let sensor = self
            .sensor
            .ok_or_else(|| SimError::InvalidConfig("no sensor configured".into()))?;
        let sensing = SensorRun {
            sensor,
            p_frac: self.p_frac,
        };
        sim::run_sensor_based(x0, &self.world, &self.params_for(x0), &sensing, &self.sim)
    }

    /// Runs one start in the scenario's own mode.
    pub fn run(&self, x0: Vec2) -> Result<HybridTrajectory, SimError> {
        match self.mode {
            RunMode::KnownMap => self.run_known_map(x0),
            RunMode::SensorBased => self.run_sensor_based(x0),
        }
    }

    /// Runs the given starts in parallel, in the scenario's own mode. Results
    /// come back in the order of `indices`.
    pub fn run_batch(&self, indices: &[usize]) -> Vec<Result<HybridTrajectory, SimError>> {
        indices.par_iter().map(|&i| self.run(self.starts[i])).collect()
    }

    /// Initial hybrid state for a start.
    pub fn initial_state(&self, x0: Vec2) -> HybridState {
        let k = self.world.nearest_obstacle(x0).map_or(0, |n| n.index);
        HybridState {
            x: x0,
            mode: Mode::MoveToTarget,
            k,
        }
    }
}

/// `s = ν_{-1}(x0) / ‖x0‖`, so that `ν_1(s)` points along `x0`. Falls back
/// to `(0, -1)` at the target.
pub fn auto_decision(x0: Vec2) -> Vec2 {
    match x0.normalized() {
        Some(d) => rotate_unchecked(d, Turn::CounterClockwise),
        None => Vec2::new(0.0, -1.0),
    }
}
