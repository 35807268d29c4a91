//! Sectioned scenario configuration.

use std::path::Path;

use amest::control::{MassExtraction, PassivityGains, SlidingModeGains};
use amest::estimator::EstimatorGains;
use amest::model::{ModelConstants, ModelMode, UnknownParams, Vector8};
use amest::sim::{ControllerKind, NoiseConfig, Scenario, Trajectory, Waypoint};
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Text of the default configuration (the published simulation scenario).
pub const DEFAULT_CONFIG: &str = include_str!("../configs/default.toml");

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub model: ModelSection,
    pub truth: TruthSection,
    pub controller: ControllerSection,
    pub estimator: EstimatorSection,
    pub sim: SimSection,
    pub noise: NoiseSection,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Full,
    SmallAngle,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub m_b: f64,
    pub inertia_b: [f64; 3],
    pub m1: f64,
    pub m2_link: f64,
    pub l1: f64,
    pub l2: f64,
    pub lc1: f64,
    pub i_y2: f64,
    pub g: f64,
    pub mode: Mode,
}

impl Default for ModelSection {
    fn default() -> Self {
        let c = ModelConstants::default();
        Self {
            m_b: c.m_b,
            inertia_b: c.inertia_b.into(),
            m1: c.m1,
            m2_link: c.m2_link,
            l1: c.l1,
            l2: c.l2,
            lc1: c.lc1,
            i_y2: c.i_y2,
            g: c.g,
            mode: Mode::Full,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TruthSection {
    pub m2: f64,
    pub lc: f64,
}

impl Default for TruthSection {
    fn default() -> Self {
        let t = Scenario::default().truth;
        Self { m2: t.m2, lc: t.lc() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Controller {
    PassivityAdaptive,
    PassivityFixed,
    Asmc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Extraction {
    Normalized,
    Literal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerSection {
    pub kind: Controller,
    pub k: [f64; 8],
    pub lambda: [f64; 8],
    pub asmc_lambda: [f64; 8],
    pub asmc_k1: [f64; 8],
    pub asmc_k2: [f64; 8],
    pub asmc_boundary_layer: f64,
    pub mass_extraction: Extraction,
}

fn diag(m: &amest::Matrix8) -> [f64; 8] {
    m.diagonal().into()
}

impl Default for ControllerSection {
    fn default() -> Self {
        let s = Scenario::default();
        Self {
            kind: Controller::PassivityAdaptive,
            k: diag(&s.passivity.k),
            lambda: diag(&s.passivity.lambda),
            asmc_lambda: diag(&s.sliding.lambda),
            asmc_k1: diag(&s.sliding.k1),
            asmc_k2: diag(&s.sliding.k2),
            asmc_boundary_layer: s.sliding.boundary_layer,
            mass_extraction: Extraction::Normalized,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorSection {
    pub c_star: f64,
    pub k_star: f64,
    pub gamma: [f64; 3],
    pub initial_estimate: [f64; 3],
    pub q_hat_offset: f64,
}

impl Default for EstimatorSection {
    fn default() -> Self {
        let s = Scenario::default();
        Self {
            c_star: s.estimator.c_star()[(0, 0)],
            k_star: s.estimator.k_star()[(0, 0)],
            gamma: (*s.estimator.gamma()).into(),
            initial_estimate: s.initial_estimate.into(),
            q_hat_offset: s.q_hat_offset,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrajectoryKind {
    Sweep,
    Hover,
    Waypoints,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaypointEntry {
    pub t: f64,
    pub q: [f64; 8],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    pub duration: f64,
    pub dt: f64,
    pub seed: u64,
    pub trajectory: TrajectoryKind,
    pub hover_z: f64,
    pub waypoints: Vec<WaypointEntry>,
    pub divergence_bound: f64,
}

impl Default for SimSection {
    fn default() -> Self {
        let s = Scenario::default();
        Self {
            duration: s.duration,
            dt: s.dt,
            seed: s.seed,
            trajectory: TrajectoryKind::Sweep,
            hover_z: 1.0,
            waypoints: Vec::new(),
            divergence_bound: s.divergence_bound,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    pub q: f64,
    pub qd: f64,
    pub qdd: f64,
}

fn invalid(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {msg}"))
}

fn positive(field: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(invalid(field, format!("must be positive, got {v}")))
    }
}

fn non_negative(field: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(invalid(field, format!("must be non-negative, got {v}")))
    }
}

fn positive_all(field: &str, v: &[f64; 8]) -> Result<Vector8, CliError> {
    for (i, x) in v.iter().enumerate() {
        positive(&format!("{field}[{i}]"), *x)?;
    }
    Ok(Vector8::from_column_slice(v))
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }

    /// Validates every field and builds the scenario.
    pub fn to_scenario(&self) -> Result<Scenario, CliError> {
        let m = &self.model;
        let consts = ModelConstants {
            m_b: positive("model.m_b", m.m_b)?,
            inertia_b: Vector3::new(
                positive("model.inertia_b[0]", m.inertia_b[0])?,
                positive("model.inertia_b[1]", m.inertia_b[1])?,
                positive("model.inertia_b[2]", m.inertia_b[2])?,
            ),
            m1: positive("model.m1", m.m1)?,
            m2_link: positive("model.m2_link", m.m2_link)?,
            l1: positive("model.l1", m.l1)?,
            l2: positive("model.l2", m.l2)?,
            lc1: non_negative("model.lc1", m.lc1)?,
            i_y2: positive("model.i_y2", m.i_y2)?,
            g: positive("model.g", m.g)?,
            mode: match m.mode {
                Mode::Full => ModelMode::Full,
                Mode::SmallAngle => ModelMode::SmallAngle,
            },
        };
        consts.validate().map_err(|e| invalid("model", e))?;

        let truth = UnknownParams::from_mass_and_com(
            positive("truth.m2", self.truth.m2)?,
            non_negative("truth.lc", self.truth.lc)?,
        );

        let c = &self.controller;
        let passivity = PassivityGains::new(
            positive_all("controller.k", &c.k)?,
            positive_all("controller.lambda", &c.lambda)?,
        )
        .map_err(|e| invalid("controller", e))?;
        let sliding = SlidingModeGains::new(
            positive_all("controller.asmc_lambda", &c.asmc_lambda)?,
            positive_all("controller.asmc_k1", &c.asmc_k1)?,
            positive_all("controller.asmc_k2", &c.asmc_k2)?,
            non_negative("controller.asmc_boundary_layer", c.asmc_boundary_layer)?,
        )
        .map_err(|e| invalid("controller", e))?;

        let e = &self.estimator;
        let gamma = Vector3::new(
            positive("estimator.gamma[0]", e.gamma[0])?,
            positive("estimator.gamma[1]", e.gamma[1])?,
            positive("estimator.gamma[2]", e.gamma[2])?,
        );
        let estimator = EstimatorGains::isotropic(
            positive("estimator.c_star", e.c_star)?,
            positive("estimator.k_star", e.k_star)?,
            gamma,
        )
        .map_err(|err| invalid("estimator", err))?;
        if !e.initial_estimate.iter().all(|v| v.is_finite()) {
            return Err(invalid("estimator.initial_estimate", "must be finite"));
        }
        if !e.q_hat_offset.is_finite() {
            return Err(invalid("estimator.q_hat_offset", "must be finite"));
        }

        let s = &self.sim;
        let dt = positive("sim.dt", s.dt)?;
        let duration = positive("sim.duration", s.duration)?;
        if duration < dt * (1.0 - 1e-9) {
            return Err(invalid("sim.duration", format!("{duration} is shorter than sim.dt = {dt}")));
        }
        let trajectory = match s.trajectory {
            TrajectoryKind::Sweep => Trajectory::Sweep,
            TrajectoryKind::Hover => {
                if !s.hover_z.is_finite() {
                    return Err(invalid("sim.hover_z", "must be finite"));
                }
                Trajectory::hover_at(s.hover_z)
            }
            TrajectoryKind::Waypoints => {
                let points = s
                    .waypoints
                    .iter()
                    .map(|w| Waypoint {
                        t: w.t,
                        q: Vector8::from_column_slice(&w.q),
                    })
                    .collect();
                Trajectory::waypoints(points).map_err(|err| invalid("sim.waypoints", err))?
            }
        };

        let noise = NoiseConfig {
            q: non_negative("noise.q", self.noise.q)?,
            qd: non_negative("noise.qd", self.noise.qd)?,
            qdd: non_negative("noise.qdd", self.noise.qdd)?,
        };

        let scenario = Scenario {
            consts,
            truth,
            controller: match c.kind {
                Controller::PassivityAdaptive => ControllerKind::PassivityAdaptive,
                Controller::PassivityFixed => ControllerKind::PassivityFixed,
                Controller::Asmc => ControllerKind::Asmc,
            },
            passivity,
            sliding,
            mass_extraction: match c.mass_extraction {
                Extraction::Normalized => MassExtraction::Normalized,
                Extraction::Literal => MassExtraction::Literal,
            },
            estimator,
            initial_estimate: Vector3::from(e.initial_estimate),
            q_hat_offset: e.q_hat_offset,
            duration,
            dt,
            noise,
            seed: s.seed,
            trajectory,
            divergence_bound: positive("sim.divergence_bound", s.divergence_bound)?,
        };
        scenario.validate().map_err(|err| invalid("scenario", err))?;
        Ok(scenario)
    }
}
