//! Online estimator for the payload triple `(m2, m3, m4)`.
//!
//! An auxiliary state `q_hat` is driven by the measured forcing term through
//!
//! ```text
//! C* q_hat' + K* q_hat + [m2^ M2 + m3^ M3 + m4^ M4] qdd
//!     + [m2^ C2 + m3^ C3 + m4^ C4] qd + m2^ G2 + m3^ G3 = U + C* qd + K* q
//! ```
//!
//! and the estimates follow the gradient of the state error `e = q_hat - q`:
//! `m_i^' = gamma_i e^T (M_i qdd + C_i qd + G_i)`. With the Lyapunov function
//! `V1 = 1/2 e^T C* e + sum_i m~_i^2 / (2 gamma_i)` one gets `V1' = -e^T K* e`.

use nalgebra::{Cholesky, Const, Vector3};

use crate::dynamics::{decompose_dynamics, DecomposedDynamics};
use crate::error::{Error, Result};
use crate::model::{GeneralizedState, Matrix8, ModelConstants, UnknownParams, Vector8};

/// Default guard below which `m2_hat` is considered not yet identified (kg).
pub const DEFAULT_IDENTIFIABLE_MASS: f64 = 1e-3;

#[derive(Clone, Debug)]
pub struct EstimatorGains {
    c_star: Matrix8,
    k_star: Matrix8,
    gamma: Vector3<f64>,
    c_star_chol: Cholesky<f64, Const<8>>,
}

fn is_symmetric(m: &Matrix8) -> bool {
    (m - m.transpose()).amax() <= 1e-12 * m.amax().max(1.0)
}

impl EstimatorGains {
    pub fn new(c_star: Matrix8, k_star: Matrix8, gamma: Vector3<f64>) -> Result<Self> {
        if !is_symmetric(&c_star) || !is_symmetric(&k_star) {
            return Err(Error::GainConfig("C* and K* must be symmetric".into()));
        }
        let c_star_chol = c_star
            .cholesky()
            .ok_or_else(|| Error::GainConfig("C* is not positive definite".into()))?;
        if k_star.cholesky().is_none() {
            return Err(Error::GainConfig("K* is not positive definite".into()));
        }
        if !gamma.iter().all(|g| g.is_finite() && *g > 0.0) {
            return Err(Error::GainConfig(format!(
                "learning rates must be positive, got {gamma:?}"
            )));
        }
        Ok(Self {
            c_star,
            k_star,
            gamma,
            c_star_chol,
        })
    }

    /// `C* = c I`, `K* = k I`.
    pub fn isotropic(c: f64, k: f64, gamma: Vector3<f64>) -> Result<Self> {
        Self::new(Matrix8::identity() * c, Matrix8::identity() * k, gamma)
    }

    pub fn c_star(&self) -> &Matrix8 {
        &self.c_star
    }

    pub fn k_star(&self) -> &Matrix8 {
        &self.k_star
    }

    pub fn gamma(&self) -> &Vector3<f64> {
        &self.gamma
    }

    pub fn with_gamma(&self, gamma: Vector3<f64>) -> Result<Self> {
        Self::new(self.c_star, self.k_star, gamma)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimatorState {
    pub q_hat: Vector8,
    /// `(m2_hat, m3_hat, m4_hat)`.
    pub m_hat: Vector3<f64>,
}

impl EstimatorState {
    /// Starts `q_hat` at `q + offset` in every component.
    pub fn with_offset(q: &Vector8, offset: f64, m_hat: Vector3<f64>) -> Self {
        Self {
            q_hat: q.add_scalar(offset),
            m_hat,
        }
    }

    pub fn error(&self, q: &Vector8) -> Vector8 {
        self.q_hat - q
    }
}

/// One measurement of the plant together with the dynamics split at that
/// measurement and the forcing term it implies.
#[derive(Clone, Copy, Debug)]
pub struct PlantSample {
    pub state: GeneralizedState,
    pub qdd: Vector8,
    pub tau: Vector8,
    pub forcing: Vector8,
    pub dynamics: DecomposedDynamics,
}

impl PlantSample {
    pub fn measure(
        state: GeneralizedState,
        qdd: Vector8,
        tau: Vector8,
        consts: &ModelConstants,
    ) -> Result<Self> {
        let dynamics = decompose_dynamics(&state, consts)?;
        Ok(Self::from_dynamics(state, qdd, tau, dynamics))
    }

    pub fn from_dynamics(
        state: GeneralizedState,
        qdd: Vector8,
        tau: Vector8,
        dynamics: DecomposedDynamics,
    ) -> Self {
        let forcing = dynamics.forcing(&state.qd, &qdd, &tau);
        Self {
            state,
            qdd,
            tau,
            forcing,
            dynamics,
        }
    }

    /// `M_i qdd + C_i qd + G_i` for the three unknown parameters.
    pub fn param_terms(&self) -> [Vector8; 3] {
        self.dynamics.param_terms(&self.qdd, &self.state.qd)
    }
}

/// Time derivatives of the estimator state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimatorRates {
    pub q_hat_dot: Vector8,
    pub m_hat_dot: Vector3<f64>,
}

pub fn estimator_derivative(
    est: &EstimatorState,
    sample: &PlantSample,
    gains: &EstimatorGains,
) -> EstimatorRates {
    let q = &sample.state.q;
    let qd = &sample.state.qd;
    let terms = sample.param_terms();
    let predicted = terms[0] * est.m_hat[0] + terms[1] * est.m_hat[1] + terms[2] * est.m_hat[2];
    let rhs = sample.forcing + gains.k_star * (q - est.q_hat) - predicted;
    let q_hat_dot = qd + gains.c_star_chol.solve(&rhs);

    let e = est.error(q);
    let m_hat_dot = Vector3::new(
        gains.gamma[0] * e.dot(&terms[0]),
        gains.gamma[1] * e.dot(&terms[1]),
        gains.gamma[2] * e.dot(&terms[2]),
    );
    EstimatorRates {
        q_hat_dot,
        m_hat_dot,
    }
}

/// Residual of the error dynamics
/// `C* e' + K* e + sum_i m~_i (M_i qdd + C_i qd + G_i)`, which vanishes when
/// the sample is generated by the true parameters.
pub fn error_dynamics_residual(
    est: &EstimatorState,
    rates: &EstimatorRates,
    truth: &UnknownParams,
    sample: &PlantSample,
    gains: &EstimatorGains,
) -> Vector8 {
    let e = est.error(&sample.state.q);
    let e_dot = rates.q_hat_dot - sample.state.qd;
    let tilde = est.m_hat - truth.as_vector();
    let terms = sample.param_terms();
    gains.c_star * e_dot
        + gains.k_star * e
        + terms[0] * tilde[0]
        + terms[1] * tilde[1]
        + terms[2] * tilde[2]
}

/// `V1 = 1/2 e^T C* e + sum_i (m^_i - m_i)^2 / (2 gamma_i)`.
pub fn lyapunov_v1(
    est: &EstimatorState,
    truth: &UnknownParams,
    q: &Vector8,
    gains: &EstimatorGains,
) -> f64 {
    let e = est.error(q);
    let tilde = est.m_hat - truth.as_vector();
    let param: f64 = tilde
        .iter()
        .zip(gains.gamma.iter())
        .map(|(t, g)| t * t / (2.0 * g))
        .sum();
    0.5 * e.dot(&(gains.c_star * e)) + param
}

/// `V1' = -e^T K* e`.
pub fn lyapunov_v1_rate(est: &EstimatorState, q: &Vector8, gains: &EstimatorGains) -> f64 {
    let e = est.error(q);
    -e.dot(&(gains.k_star * e))
}

/// Payload mass and link-2 COM distance implied by the current estimates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PayloadEstimate {
    pub payload_mass: f64,
    pub lc: f64,
}

pub fn extract_payload(
    m_hat: &Vector3<f64>,
    consts: &ModelConstants,
    min_mass: f64,
) -> Result<PayloadEstimate> {
    let m2 = m_hat[0];
    if !(m2 > min_mass) {
        return Err(Error::NotIdentifiable { m2_hat: m2 });
    }
    Ok(PayloadEstimate {
        payload_mass: m2 - consts.m2_link,
        lc: m_hat[1] / m2,
    })
}
