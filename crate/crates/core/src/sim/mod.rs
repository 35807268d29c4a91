//! Deterministic closed-loop simulation of plant, estimator and controller.
//!
//! The plant `(q, qd)`, the estimator `(q_hat, m_hat)` and the sliding-mode
//! adaptation term `Delta_hat` form one coupled ODE advanced by RK4 at a fixed
//! step. The control torque is computed once per step and held over it. The
//! roll/pitch slots of the reference come from allocating the previous step's
//! torque. Measurement noise, when enabled, is drawn once per step and only
//! corrupts what the estimators see.

mod compare;
mod trajectory;

pub use compare::{compare, summarize, Comparison, ScenarioSummary};
pub use trajectory::{reference_trajectory, Trajectory, Waypoint};

use nalgebra::{SVector, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::control::{
    asmc_adaptation_rate, asmc_mass_estimate_from, asmc_torque_from, attitude_allocation,
    lyapunov_v2, passivity_control_from, AsmcState, AttitudeSetpoint, MassExtraction,
    PassivityGains, SlidingModeGains, TrajectoryPoint, DEFAULT_MIN_DENOMINATOR,
    DEFAULT_MIN_THRUST,
};
use crate::dynamics::{decompose_dynamics, DecomposedDynamics};
use crate::error::{Error, Result};
use crate::estimator::{estimator_derivative, lyapunov_v1, EstimatorGains, EstimatorState, PlantSample};
use crate::integrate::rk4_step;
use crate::model::{idx, GeneralizedState, ModelConstants, UnknownParams, Vector8};

/// Which controller closes the loop.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ControllerKind {
    /// Passivity-based control fed by the online estimator.
    PassivityAdaptive,
    /// Passivity-based control with the initial estimates frozen.
    PassivityFixed,
    /// Adaptive sliding mode with vertical-channel mass extraction.
    Asmc,
}

impl ControllerKind {
    pub fn name(&self) -> &'static str {
        match self {
            ControllerKind::PassivityAdaptive => "passivity-adaptive",
            ControllerKind::PassivityFixed => "passivity-fixed",
            ControllerKind::Asmc => "asmc",
        }
    }
}

impl std::str::FromStr for ControllerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "passivity-adaptive" => Ok(ControllerKind::PassivityAdaptive),
            "passivity-fixed" => Ok(ControllerKind::PassivityFixed),
            "asmc" => Ok(ControllerKind::Asmc),
            other => Err(Error::InvalidScenario(format!("unknown controller {other:?}"))),
        }
    }
}

/// Standard deviations of the additive Gaussian noise on `(q, qd, qdd)`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NoiseConfig {
    pub q: f64,
    pub qd: f64,
    pub qdd: f64,
}

impl NoiseConfig {
    pub fn is_zero(&self) -> bool {
        self.q == 0.0 && self.qd == 0.0 && self.qdd == 0.0
    }
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub consts: ModelConstants,
    pub truth: UnknownParams,
    pub controller: ControllerKind,
    pub passivity: PassivityGains,
    pub sliding: SlidingModeGains,
    pub mass_extraction: MassExtraction,
    pub estimator: EstimatorGains,
    /// Initial `(m2_hat, m3_hat, m4_hat)`.
    pub initial_estimate: Vector3<f64>,
    /// `q_hat(0) = q(0) + offset` componentwise.
    pub q_hat_offset: f64,
    pub duration: f64,
    pub dt: f64,
    pub noise: NoiseConfig,
    pub seed: u64,
    pub trajectory: Trajectory,
    /// Any `|q_i|` above this aborts the run.
    pub divergence_bound: f64,
}

impl Default for Scenario {
    /// Firefly constants, 0.4 kg payload at `lc = 0.16 m`, the sweep
    /// reference, and the published estimator and controller gains.
    fn default() -> Self {
        let passivity = PassivityGains::new(
            Vector8::from_column_slice(&[4.5, 4.5, 7.5, 8.0, 8.0, 8.0, 1.4, 1.4]),
            Vector8::from_column_slice(&[1.0, 1.0, 5.0, 1.0, 1.0, 1.0, 0.2, 0.2]),
        )
        .expect("valid passivity gains");
        let sliding = SlidingModeGains::new(
            Vector8::from_column_slice(&[1.0, 1.0, 5.0, 1.0, 1.0, 1.0, 0.2, 0.2]),
            Vector8::from_column_slice(&[4.5, 4.5, 7.5, 8.0, 8.0, 8.0, 1.4, 1.4]),
            Vector8::from_column_slice(&[0.5, 0.5, 0.5, 0.1, 0.1, 0.1, 0.05, 0.05]),
            0.05,
        )
        .expect("valid sliding gains");
        Self {
            consts: ModelConstants::default(),
            truth: UnknownParams::from_mass_and_com(0.5, 0.16),
            controller: ControllerKind::PassivityAdaptive,
            passivity,
            sliding,
            mass_extraction: MassExtraction::Normalized,
            estimator: EstimatorGains::isotropic(10.0, 20.0, Vector3::new(0.2, 0.1, 0.1))
                .expect("valid estimator gains"),
            initial_estimate: Vector3::new(0.1, 1e-3, 1e-5),
            q_hat_offset: 0.1,
            duration: 10.0,
            dt: 1e-3,
            noise: NoiseConfig::default(),
            seed: 0,
            trajectory: Trajectory::Sweep,
            divergence_bound: 100.0,
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.consts.validate()?;
        self.truth.validate()?;
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidScenario(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.duration.is_finite() && self.duration >= self.dt * (1.0 - 1e-9)) {
            return Err(Error::InvalidScenario(format!(
                "duration {} shorter than dt {}",
                self.duration, self.dt
            )));
        }
        for (name, s) in [("q", self.noise.q), ("qd", self.noise.qd), ("qdd", self.noise.qdd)] {
            if !(s.is_finite() && s >= 0.0) {
                return Err(Error::InvalidScenario(format!(
                    "noise sigma for {name} must be non-negative, got {s}"
                )));
            }
        }
        if !self.initial_estimate.iter().all(|v| v.is_finite()) || !self.q_hat_offset.is_finite() {
            return Err(Error::InvalidScenario("non-finite initial estimate".into()));
        }
        if !(self.divergence_bound > 0.0) {
            return Err(Error::InvalidScenario("divergence bound must be positive".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        ((self.duration / self.dt).round() as usize).max(1)
    }
}

/// One logged instant: state at the start of a step and the torque held over it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogRow {
    pub t: f64,
    pub q: Vector8,
    pub qd: Vector8,
    pub qdd: Vector8,
    pub q_hat: Vector8,
    /// Parameters reported by the scenario's estimation method: the online
    /// estimator for the passivity controllers, the mass extraction (with the
    /// bare-link COM) for the sliding-mode controller.
    pub m_hat: Vector3<f64>,
    /// Online estimator parameters (identical to `m_hat` unless sliding mode).
    pub estimator_m_hat: Vector3<f64>,
    pub tau: Vector8,
    pub e_c: Vector8,
    pub v1: f64,
    pub v2: f64,
    pub phi_d: f64,
    pub theta_d: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SimLog {
    pub rows: Vec<LogRow>,
}

impl SimLog {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn last(&self) -> Option<&LogRow> {
        self.rows.last()
    }
}

const N: usize = 35;
type Packed = SVector<f64, N>;

/// Offsets in the packed coupled state.
mod slot {
    pub const Q: usize = 0;
    pub const QD: usize = 8;
    pub const Q_HAT: usize = 16;
    pub const M_HAT: usize = 24;
    pub const DELTA: usize = 27;
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Noise {
    pub q: Vector8,
    pub qd: Vector8,
    pub qdd: Vector8,
}

impl Noise {
    fn zero() -> Self {
        Self {
            q: Vector8::zeros(),
            qd: Vector8::zeros(),
            qdd: Vector8::zeros(),
        }
    }

    fn draw(cfg: &NoiseConfig, rng: &mut ChaCha8Rng) -> Self {
        let mut gauss = |sigma: f64| -> Vector8 {
            Vector8::from_fn(|_, _| {
                let z: f64 = StandardNormal.sample(rng);
                sigma * z
            })
        };
        Self {
            q: gauss(cfg.q),
            qd: gauss(cfg.qd),
            qdd: gauss(cfg.qdd),
        }
    }
}

/// Stepper for one scenario.
pub struct Simulator {
    scenario: Scenario,
    pub plant: GeneralizedState,
    pub estimator: EstimatorState,
    pub asmc: AsmcState,
    attitude: AttitudeSetpoint,
    last_tau: Option<Vector8>,
    rng: ChaCha8Rng,
    step_index: usize,
}

fn unpack(y: &Packed) -> (GeneralizedState, EstimatorState, Vector8) {
    let plant = GeneralizedState::new(
        y.fixed_rows::<8>(slot::Q).into_owned(),
        y.fixed_rows::<8>(slot::QD).into_owned(),
    );
    let est = EstimatorState {
        q_hat: y.fixed_rows::<8>(slot::Q_HAT).into_owned(),
        m_hat: y.fixed_rows::<3>(slot::M_HAT).into_owned(),
    };
    (plant, est, y.fixed_rows::<8>(slot::DELTA).into_owned())
}

fn pack(plant: &GeneralizedState, est: &EstimatorState, delta: &Vector8) -> Packed {
    let mut y = Packed::zeros();
    y.fixed_rows_mut::<8>(slot::Q).copy_from(&plant.q);
    y.fixed_rows_mut::<8>(slot::QD).copy_from(&plant.qd);
    y.fixed_rows_mut::<8>(slot::Q_HAT).copy_from(&est.q_hat);
    y.fixed_rows_mut::<3>(slot::M_HAT).copy_from(&est.m_hat);
    y.fixed_rows_mut::<8>(slot::DELTA).copy_from(delta);
    y
}

impl Simulator {
    /// Plant starts on the reference with the reference velocity.
    pub fn new(scenario: Scenario) -> Result<Self> {
        scenario.validate()?;
        let start = scenario.trajectory.sample(0.0);
        let plant = GeneralizedState::new(start.q, start.qd);
        let estimator = EstimatorState::with_offset(
            &plant.q,
            scenario.q_hat_offset,
            scenario.initial_estimate,
        );
        let asmc = AsmcState::initial(&scenario.consts);
        let rng = ChaCha8Rng::seed_from_u64(scenario.seed);
        Ok(Self {
            plant,
            estimator,
            asmc,
            attitude: AttitudeSetpoint {
                phi_d: 0.0,
                theta_d: 0.0,
            },
            last_tau: None,
            rng,
            step_index: 0,
            scenario,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn time(&self) -> f64 {
        self.step_index as f64 * self.scenario.dt
    }

    fn reference(&self, t: f64) -> TrajectoryPoint {
        self.scenario.trajectory.sample_with_attitude(t, &self.attitude)
    }

    fn control(&self, dd: &DecomposedDynamics, traj: &TrajectoryPoint) -> Vector8 {
        let sc = &self.scenario;
        match sc.controller {
            ControllerKind::PassivityAdaptive => {
                passivity_control_from(dd, &self.plant, traj, &self.estimator.m_hat, &sc.passivity)
            }
            ControllerKind::PassivityFixed => {
                passivity_control_from(dd, &self.plant, traj, &sc.initial_estimate, &sc.passivity)
            }
            ControllerKind::Asmc => {
                asmc_torque_from(dd, &self.plant, traj, &self.asmc, &sc.sliding, &sc.consts)
            }
        }
    }

    /// Advances one step and returns the row logged at its start.
    pub fn step(&mut self) -> Result<LogRow> {
        let sc = self.scenario.clone();
        let consts = &sc.consts;
        let truth = sc.truth.as_vector();
        let t = self.time();
        self.plant.validate()?;

        // Attitude setpoint from the previous torque (hover thrust at start).
        let prev_tau = self.last_tau.unwrap_or_else(|| {
            let mut hover = Vector8::zeros();
            hover[idx::Z] = (consts.known_mass() + sc.truth.m2) * consts.g;
            hover
        });
        if let Ok(sp) = attitude_allocation(&prev_tau, self.plant.q[idx::PSI], DEFAULT_MIN_THRUST) {
            self.attitude = sp;
        }
        let traj = self.reference(t);

        let dd = decompose_dynamics(&self.plant, consts)?;
        let tau = self.control(&dd, &traj);
        let qdd = dd.reconstruct(&truth).solve_accel(&self.plant.qd, &tau)?;

        let noise = if sc.noise.is_zero() {
            Noise::zero()
        } else {
            Noise::draw(&sc.noise, &mut self.rng)
        };
        let state_noise = noise.q.amax() != 0.0 || noise.qd.amax() != 0.0;

        let e_c = self.plant.q - traj.q;
        let v2_gains = match sc.controller {
            ControllerKind::Asmc => PassivityGains {
                k: sc.sliding.k1,
                lambda: sc.sliding.lambda,
            },
            _ => sc.passivity,
        };
        let reported = match sc.controller {
            ControllerKind::Asmc => self.asmc.params(consts),
            _ => self.estimator.m_hat,
        };
        let row = LogRow {
            t,
            q: self.plant.q,
            qd: self.plant.qd,
            qdd,
            q_hat: self.estimator.q_hat,
            m_hat: reported,
            estimator_m_hat: self.estimator.m_hat,
            tau,
            e_c,
            v1: lyapunov_v1(&self.estimator, &sc.truth, &self.plant.q, &sc.estimator),
            v2: lyapunov_v2(&dd, &self.plant, &traj, &sc.truth, &v2_gains),
            phi_d: self.attitude.phi_d,
            theta_d: self.attitude.theta_d,
        };

        // Vertical-channel mass extraction for the sliding-mode controller.
        if sc.controller == ControllerKind::Asmc {
            let measured = GeneralizedState::new(self.plant.q + noise.q, self.plant.qd + noise.qd);
            let dd_meas = if state_noise {
                decompose_dynamics(&measured, consts)?
            } else {
                dd
            };
            let update = asmc_mass_estimate_from(
                &dd_meas,
                &measured,
                &(qdd + noise.qdd),
                &tau,
                &self.asmc,
                consts,
                sc.mass_extraction,
                DEFAULT_MIN_DENOMINATOR,
            );
            self.asmc.m2_hat = update.apply(self.asmc.m2_hat);
        }

        let y0 = pack(&self.plant, &self.estimator, &self.asmc.delta_hat);
        let attitude = self.attitude;
        let rhs = |ts: f64, y: &Packed| -> Result<Packed> {
            let (plant, est, _) = unpack(y);
            let dd = decompose_dynamics(&plant, consts)?;
            let qdd = dd.reconstruct(&truth).solve_accel(&plant.qd, &tau)?;

            let measured = GeneralizedState::new(plant.q + noise.q, plant.qd + noise.qd);
            let dd_meas = if state_noise {
                decompose_dynamics(&measured, consts)?
            } else {
                dd
            };
            let sample = PlantSample::from_dynamics(measured, qdd + noise.qdd, tau, dd_meas);
            let rates = estimator_derivative(&est, &sample, &sc.estimator);

            let mut dy = Packed::zeros();
            dy.fixed_rows_mut::<8>(slot::Q).copy_from(&plant.qd);
            dy.fixed_rows_mut::<8>(slot::QD).copy_from(&qdd);
            dy.fixed_rows_mut::<8>(slot::Q_HAT).copy_from(&rates.q_hat_dot);
            dy.fixed_rows_mut::<3>(slot::M_HAT).copy_from(&rates.m_hat_dot);
            if sc.controller == ControllerKind::Asmc {
                let reference = sc.trajectory.sample_with_attitude(ts, &attitude);
                dy.fixed_rows_mut::<8>(slot::DELTA)
                    .copy_from(&asmc_adaptation_rate(&plant, &reference, &sc.sliding));
            }
            Ok(dy)
        };
        let y1 = rk4_step(rhs, t, &y0, sc.dt)?;

        let (plant, est, delta) = unpack(&y1);
        self.plant = plant;
        self.estimator = est;
        self.asmc.delta_hat = delta;
        self.last_tau = Some(tau);
        self.step_index += 1;

        if !y1.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidState(format!("non-finite state after t = {t}")));
        }
        if self.plant.q.amax() > sc.divergence_bound {
            return Err(Error::InvalidState(format!(
                "|q| exceeded {} after t = {t}",
                sc.divergence_bound
            )));
        }
        Ok(row)
    }
}

/// Runs a scenario to completion. A failing step aborts the run with
/// [`Error::Diverged`] carrying the rows logged so far.
pub fn run(scenario: &Scenario) -> Result<SimLog> {
    let mut sim = Simulator::new(scenario.clone())?;
    let steps = scenario.steps();
    let mut log = SimLog {
        rows: Vec::with_capacity(steps),
    };
    for _ in 0..steps {
        let t = sim.time();
        match sim.step() {
            Ok(row) => log.rows.push(row),
            Err(e) => {
                return Err(Error::Diverged {
                    time: t,
                    reason: e.to_string(),
                    log: Box::new(log),
                })
            }
        }
    }
    Ok(log)
}
