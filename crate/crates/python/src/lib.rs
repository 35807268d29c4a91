//! Python module `pyamest`.

use amest::control::{self, PassivityGains, TrajectoryPoint};
use amest::dynamics;
use amest::estimator::{self, EstimatorGains, EstimatorState, PlantSample};
use amest::model::{GeneralizedState, ModelConstants, ModelMode, UnknownParams, Vector8};
use amest::sim::{self, ControllerKind, NoiseConfig, SimLog, Trajectory};
use nalgebra::Vector3;
use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(pyamest, DivergenceError, PyRuntimeError, "The simulation left its bounds.");

fn to_py(e: amest::Error) -> PyErr {
    match e {
        amest::Error::Diverged { time, reason, .. } => {
            DivergenceError::new_err(format!("diverged at t = {time} s: {reason}"))
        }
        amest::Error::InternalModel { .. } | amest::Error::SingularDynamics { .. } => {
            PyRuntimeError::new_err(e.to_string())
        }
        other => PyValueError::new_err(other.to_string()),
    }
}

fn vec8(name: &str, v: &[f64]) -> PyResult<Vector8> {
    if v.len() != 8 {
        return Err(PyValueError::new_err(format!("{name} must have 8 entries, got {}", v.len())));
    }
    Ok(Vector8::from_column_slice(v))
}

fn vec3(name: &str, v: &[f64]) -> PyResult<Vector3<f64>> {
    if v.len() != 3 {
        return Err(PyValueError::new_err(format!("{name} must have 3 entries, got {}", v.len())));
    }
    Ok(Vector3::from_column_slice(v))
}

fn rows(m: &amest::Matrix8) -> Vec<Vec<f64>> {
    (0..8).map(|i| m.row(i).iter().copied().collect()).collect()
}

type Matrices = (Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<f64>);

fn list(v: &Vector8) -> Vec<f64> {
    v.iter().copied().collect()
}

/// Known physical constants of the vehicle and arm.
#[pyclass(name = "ModelConstants", from_py_object)]
#[derive(Clone)]
pub struct PyModelConstants {
    inner: ModelConstants,
}

#[pymethods]
impl PyModelConstants {
    #[new]
    #[pyo3(signature = (m_b=None, inertia_b=None, m1=None, m2_link=None, l1=None, l2=None, lc1=None, i_y2=None, g=None, small_angle=false))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        m_b: Option<f64>,
        inertia_b: Option<Vec<f64>>,
        m1: Option<f64>,
        m2_link: Option<f64>,
        l1: Option<f64>,
        l2: Option<f64>,
        lc1: Option<f64>,
        i_y2: Option<f64>,
        g: Option<f64>,
        small_angle: bool,
    ) -> PyResult<Self> {
        let d = ModelConstants::default();
        let inner = ModelConstants {
            m_b: m_b.unwrap_or(d.m_b),
            inertia_b: match inertia_b {
                Some(v) => vec3("inertia_b", &v)?,
                None => d.inertia_b,
            },
            m1: m1.unwrap_or(d.m1),
            m2_link: m2_link.unwrap_or(d.m2_link),
            l1: l1.unwrap_or(d.l1),
            l2: l2.unwrap_or(d.l2),
            lc1: lc1.unwrap_or(d.lc1),
            i_y2: i_y2.unwrap_or(d.i_y2),
            g: g.unwrap_or(d.g),
            mode: if small_angle { ModelMode::SmallAngle } else { ModelMode::Full },
        };
        inner.validate().map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn m_b(&self) -> f64 {
        self.inner.m_b
    }
    #[getter]
    fn m1(&self) -> f64 {
        self.inner.m1
    }
    #[getter]
    fn m2_link(&self) -> f64 {
        self.inner.m2_link
    }
    #[getter]
    fn l1(&self) -> f64 {
        self.inner.l1
    }
    #[getter]
    fn l2(&self) -> f64 {
        self.inner.l2
    }
    #[getter]
    fn i_y2(&self) -> f64 {
        self.inner.i_y2
    }
    #[getter]
    fn g(&self) -> f64 {
        self.inner.g
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

fn consts_or_default(c: Option<PyModelConstants>) -> ModelConstants {
    c.map(|c| c.inner).unwrap_or_default()
}

/// `(m2, m2 lc, m2 lc^2)` for a link-2 mass and COM distance.
#[pyfunction]
fn unknown_params(m2: f64, lc: f64) -> PyResult<(f64, f64, f64)> {
    let p = UnknownParams::from_mass_and_com(m2, lc);
    p.validate().map_err(to_py)?;
    Ok((p.m2, p.m3, p.m4))
}

/// Inertia, Coriolis and gravity terms `(M, C, G)` at a state.
#[pyfunction]
#[pyo3(signature = (q, qd, params, consts=None))]
fn dynamics_matrices(
    q: Vec<f64>,
    qd: Vec<f64>,
    params: Vec<f64>,
    consts: Option<PyModelConstants>,
) -> PyResult<Matrices> {
    let state = GeneralizedState::new(vec8("q", &q)?, vec8("qd", &qd)?);
    let dm = dynamics::synthesize_dynamics(&state, &consts_or_default(consts), &vec3("params", &params)?)
        .map_err(to_py)?;
    Ok((rows(&dm.mass), rows(&dm.coriolis), list(&dm.gravity)))
}

/// Generalized acceleration produced by a torque.
#[pyfunction]
#[pyo3(signature = (q, qd, tau, params, consts=None))]
fn forward_dynamics(
    q: Vec<f64>,
    qd: Vec<f64>,
    tau: Vec<f64>,
    params: Vec<f64>,
    consts: Option<PyModelConstants>,
) -> PyResult<Vec<f64>> {
    let state = GeneralizedState::new(vec8("q", &q)?, vec8("qd", &qd)?);
    let acc = dynamics::forward_dynamics(
        &state,
        &vec8("tau", &tau)?,
        &consts_or_default(consts),
        &vec3("params", &params)?,
    )
    .map_err(to_py)?;
    Ok(list(&acc.qdd))
}

#[pyfunction]
#[pyo3(signature = (q, qd, params, consts=None))]
fn total_energy(q: Vec<f64>, qd: Vec<f64>, params: Vec<f64>, consts: Option<PyModelConstants>) -> PyResult<f64> {
    let state = GeneralizedState::new(vec8("q", &q)?, vec8("qd", &qd)?);
    dynamics::total_energy(&state, &consts_or_default(consts), &vec3("params", &params)?).map_err(to_py)
}

/// Estimator rates `(q_hat_dot, m_hat_dot)` for one plant measurement.
#[pyfunction]
#[pyo3(signature = (q, qd, qdd, tau, q_hat, m_hat, c_star=10.0, k_star=20.0, gamma=vec![0.2, 0.1, 0.1], consts=None))]
#[allow(clippy::too_many_arguments)]
fn estimator_rates(
    q: Vec<f64>,
    qd: Vec<f64>,
    qdd: Vec<f64>,
    tau: Vec<f64>,
    q_hat: Vec<f64>,
    m_hat: Vec<f64>,
    c_star: f64,
    k_star: f64,
    gamma: Vec<f64>,
    consts: Option<PyModelConstants>,
) -> PyResult<(Vec<f64>, (f64, f64, f64))> {
    let gains = EstimatorGains::isotropic(c_star, k_star, vec3("gamma", &gamma)?).map_err(to_py)?;
    let state = GeneralizedState::new(vec8("q", &q)?, vec8("qd", &qd)?);
    let sample = PlantSample::measure(state, vec8("qdd", &qdd)?, vec8("tau", &tau)?, &consts_or_default(consts))
        .map_err(to_py)?;
    let est = EstimatorState {
        q_hat: vec8("q_hat", &q_hat)?,
        m_hat: vec3("m_hat", &m_hat)?,
    };
    let r = estimator::estimator_derivative(&est, &sample, &gains);
    Ok((list(&r.q_hat_dot), (r.m_hat_dot[0], r.m_hat_dot[1], r.m_hat_dot[2])))
}

/// Passivity-based torque for a desired point `(q_d, qd_d, qdd_d)`.
#[pyfunction]
#[pyo3(signature = (q, qd, q_d, qd_d, qdd_d, m_hat, k, lam, consts=None))]
#[allow(clippy::too_many_arguments)]
fn passivity_control(
    q: Vec<f64>,
    qd: Vec<f64>,
    q_d: Vec<f64>,
    qd_d: Vec<f64>,
    qdd_d: Vec<f64>,
    m_hat: Vec<f64>,
    k: Vec<f64>,
    lam: Vec<f64>,
    consts: Option<PyModelConstants>,
) -> PyResult<Vec<f64>> {
    let gains = PassivityGains::new(vec8("k", &k)?, vec8("lam", &lam)?).map_err(to_py)?;
    let traj = TrajectoryPoint {
        q: vec8("q_d", &q_d)?,
        qd: vec8("qd_d", &qd_d)?,
        qdd: vec8("qdd_d", &qdd_d)?,
    };
    let state = GeneralizedState::new(vec8("q", &q)?, vec8("qd", &qd)?);
    let tau = control::passivity_control(&state, &traj, &vec3("m_hat", &m_hat)?, &gains, &consts_or_default(consts))
        .map_err(to_py)?;
    Ok(list(&tau))
}

/// Roll and pitch setpoints `(phi_d, theta_d)` from a torque vector and yaw.
#[pyfunction]
fn attitude_allocation(tau: Vec<f64>, psi: f64) -> PyResult<(f64, f64)> {
    let sp = control::attitude_allocation(&vec8("tau", &tau)?, psi, control::DEFAULT_MIN_THRUST).map_err(to_py)?;
    Ok((sp.phi_d, sp.theta_d))
}

/// Sweep reference `(q_d, qd_d, qdd_d)` at time `t`.
#[pyfunction]
fn reference_trajectory(t: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let p = sim::reference_trajectory(t);
    (list(&p.q), list(&p.qd), list(&p.qdd))
}

/// Closed-loop scenario; defaults reproduce the published simulation.
#[pyclass(name = "Scenario", from_py_object)]
#[derive(Clone)]
pub struct PyScenario {
    inner: sim::Scenario,
}

#[pymethods]
impl PyScenario {
    #[new]
    #[pyo3(signature = (controller="passivity-adaptive", duration=10.0, dt=1e-3, seed=0, m2=0.5, lc=0.16, noise_q=0.0, noise_qd=0.0, noise_qdd=0.0, gamma=None, hover_z=None, consts=None))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        controller: &str,
        duration: f64,
        dt: f64,
        seed: u64,
        m2: f64,
        lc: f64,
        noise_q: f64,
        noise_qd: f64,
        noise_qdd: f64,
        gamma: Option<Vec<f64>>,
        hover_z: Option<f64>,
        consts: Option<PyModelConstants>,
    ) -> PyResult<Self> {
        let base = sim::Scenario::default();
        let estimator = match gamma {
            Some(g) => base.estimator.with_gamma(vec3("gamma", &g)?).map_err(to_py)?,
            None => base.estimator.clone(),
        };
        let inner = sim::Scenario {
            consts: consts_or_default(consts),
            truth: UnknownParams::from_mass_and_com(m2, lc),
            controller: controller.parse::<ControllerKind>().map_err(to_py)?,
            estimator,
            duration,
            dt,
            seed,
            noise: NoiseConfig {
                q: noise_q,
                qd: noise_qd,
                qdd: noise_qdd,
            },
            trajectory: hover_z.map(Trajectory::hover_at).unwrap_or(Trajectory::Sweep),
            ..base
        };
        inner.validate().map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn steps(&self) -> usize {
        self.inner.steps()
    }

    #[getter]
    fn controller(&self) -> &'static str {
        self.inner.controller.name()
    }

    /// Runs the scenario and returns its log.
    fn run(&self, py: Python<'_>) -> PyResult<PySimLog> {
        let scenario = self.inner.clone();
        let log = py.detach(move || sim::run(&scenario)).map_err(to_py)?;
        Ok(PySimLog {
            log,
            scenario: self.inner.clone(),
        })
    }
}

/// Logged closed-loop run.
#[pyclass(name = "SimLog", from_py_object)]
#[derive(Clone)]
pub struct PySimLog {
    log: SimLog,
    scenario: sim::Scenario,
}

#[pymethods]
impl PySimLog {
    fn __len__(&self) -> usize {
        self.log.len()
    }

    /// Columns keyed by name: `t`, `V1`, `V2` are lists of floats; the rest
    /// are lists of per-step vectors.
    fn columns<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let d = PyDict::new(py);
        let rows = &self.log.rows;
        d.set_item("t", rows.iter().map(|r| r.t).collect::<Vec<_>>())?;
        d.set_item("q", rows.iter().map(|r| list(&r.q)).collect::<Vec<_>>())?;
        d.set_item("qd", rows.iter().map(|r| list(&r.qd)).collect::<Vec<_>>())?;
        d.set_item("q_hat", rows.iter().map(|r| list(&r.q_hat)).collect::<Vec<_>>())?;
        d.set_item("m_hat", rows.iter().map(|r| r.m_hat.iter().copied().collect::<Vec<_>>()).collect::<Vec<_>>())?;
        d.set_item("tau", rows.iter().map(|r| list(&r.tau)).collect::<Vec<_>>())?;
        d.set_item("e_c", rows.iter().map(|r| list(&r.e_c)).collect::<Vec<_>>())?;
        d.set_item("V1", rows.iter().map(|r| r.v1).collect::<Vec<_>>())?;
        d.set_item("V2", rows.iter().map(|r| r.v2).collect::<Vec<_>>())?;
        Ok(d)
    }

    /// Tracking and estimation metrics.
    fn summary<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        summary_dict(py, &sim::summarize(&self.scenario, &self.log))
    }
}

fn summary_dict<'py>(py: Python<'py>, s: &sim::ScenarioSummary) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("controller", s.controller)?;
    d.set_item("rms_tracking", s.rms_tracking.iter().copied().collect::<Vec<_>>())?;
    d.set_item("rms_position", s.rms_position)?;
    d.set_item("final_m_hat", s.final_m_hat.iter().copied().collect::<Vec<_>>())?;
    d.set_item("mean_abs_m2_error", s.mean_abs_m2_error)?;
    d.set_item("convergence_time", s.convergence_time)?;
    Ok(d)
}

/// Runs scenarios sharing truth and trajectory and returns their summaries.
#[pyfunction]
fn compare<'py>(py: Python<'py>, scenarios: Vec<PyScenario>) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let inner: Vec<sim::Scenario> = scenarios.into_iter().map(|s| s.inner).collect();
    let cmp = py.detach(move || sim::compare(&inner)).map_err(to_py)?;
    cmp.summaries.iter().map(|s| summary_dict(py, s)).collect()
}

#[pymodule]
fn pyamest(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModelConstants>()?;
    m.add_class::<PyScenario>()?;
    m.add_class::<PySimLog>()?;
    m.add("DivergenceError", m.py().get_type::<DivergenceError>())?;
    m.add_function(wrap_pyfunction!(unknown_params, m)?)?;
    m.add_function(wrap_pyfunction!(dynamics_matrices, m)?)?;
    m.add_function(wrap_pyfunction!(forward_dynamics, m)?)?;
    m.add_function(wrap_pyfunction!(total_energy, m)?)?;
    m.add_function(wrap_pyfunction!(estimator_rates, m)?)?;
    m.add_function(wrap_pyfunction!(passivity_control, m)?)?;
    m.add_function(wrap_pyfunction!(attitude_allocation, m)?)?;
    m.add_function(wrap_pyfunction!(reference_trajectory, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    Ok(())
}
