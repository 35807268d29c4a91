//! Equations of motion `M(q) qdd + C(q, qd) qd + G(q) = tau` of the
//! hexacopter + arm, and their affine split in the unknown triple
//! `(m2, m3, m4)`:
//!
//! ```text
//! M = M1 + m2 M2 + m3 M3 + m4 M4
//! C = C1 + m2 C2 + m3 C3 + m4 C4
//! G = G1 + m2 G2 + m3 G3
//! ```
//!
//! `C` is built from the Christoffel symbols of `M`, with the partial
//! derivatives of `M` obtained exactly by forward-mode dual numbers, so that
//! `Mdot = C + C^T` and `Mdot - 2C` is skew-symmetric.

mod kinematics;

use nalgebra::{SVector, SymmetricEigen, Vector3};
use num_dual::Dual64;

use crate::error::{Error, Result};
use crate::model::{
    idx, GeneralizedAccel, GeneralizedState, Matrix8, ModelConstants, Vector8, DOF,
};

/// Coordinates the inertia matrix depends on (Euler angles and joints).
const ANGLE_COORDS: std::ops::Range<usize> = idx::PHI..DOF;

/// Above this condition number the inertia matrix is treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

/// `M`, `C`, `G` evaluated at one state and parameter triple.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DynamicsMatrices {
    pub mass: Matrix8,
    pub coriolis: Matrix8,
    pub gravity: Vector8,
}

impl DynamicsMatrices {
    /// `M qdd + C qd + G`.
    pub fn inverse_dynamics(&self, qd: &Vector8, qdd: &Vector8) -> Vector8 {
        self.mass * qdd + self.coriolis * qd + self.gravity
    }

    /// Solves `M qdd = tau - C qd - G`.
    pub fn solve_accel(&self, qd: &Vector8, tau: &Vector8) -> Result<Vector8> {
        let eig = SymmetricEigen::new(self.mass);
        let lo = eig.eigenvalues.min();
        let hi = eig.eigenvalues.max();
        if !(lo > 0.0) || hi / lo > MAX_CONDITION {
            return Err(Error::SingularDynamics {
                condition: if lo > 0.0 { hi / lo } else { f64::INFINITY },
            });
        }
        let rhs = tau - self.coriolis * qd - self.gravity;
        let chol = self
            .mass
            .cholesky()
            .ok_or(Error::SingularDynamics { condition: f64::INFINITY })?;
        Ok(chol.solve(&rhs))
    }
}

/// The affine split of the dynamics at one state.
///
/// Index 0 of `mass` and `coriolis` holds the known part (`M1`, `C1`), indices
/// 1..=3 the parts multiplying `m2`, `m3`, `m4`. `gravity` holds `G1`, `G2`,
/// `G3`; `m4` has no gravity contribution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecomposedDynamics {
    pub mass: [Matrix8; 4],
    pub coriolis: [Matrix8; 4],
    pub gravity: [Vector8; 3],
}

impl DecomposedDynamics {
    pub fn mass_matrix(&self, p: &Vector3<f64>) -> Matrix8 {
        self.mass[0] + self.mass[1] * p[0] + self.mass[2] * p[1] + self.mass[3] * p[2]
    }

    pub fn coriolis_matrix(&self, p: &Vector3<f64>) -> Matrix8 {
        self.coriolis[0]
            + self.coriolis[1] * p[0]
            + self.coriolis[2] * p[1]
            + self.coriolis[3] * p[2]
    }

    pub fn gravity_vector(&self, p: &Vector3<f64>) -> Vector8 {
        self.gravity[0] + self.gravity[1] * p[0] + self.gravity[2] * p[1]
    }

    pub fn reconstruct(&self, p: &Vector3<f64>) -> DynamicsMatrices {
        DynamicsMatrices {
            mass: self.mass_matrix(p),
            coriolis: self.coriolis_matrix(p),
            gravity: self.gravity_vector(p),
        }
    }

    /// `M1 a + C1 v + G1`.
    pub fn known_terms(&self, a: &Vector8, v: &Vector8) -> Vector8 {
        self.mass[0] * a + self.coriolis[0] * v + self.gravity[0]
    }

    /// The vectors multiplying `m2`, `m3`, `m4`:
    /// `M2 a + C2 v + G2`, `M3 a + C3 v + G3`, `M4 a + C4 v`.
    pub fn param_terms(&self, a: &Vector8, v: &Vector8) -> [Vector8; 3] {
        [
            self.mass[1] * a + self.coriolis[1] * v + self.gravity[1],
            self.mass[2] * a + self.coriolis[2] * v + self.gravity[2],
            self.mass[3] * a + self.coriolis[3] * v,
        ]
    }

    /// `U = tau - M1 qdd - C1 qd - G1`.
    pub fn forcing(&self, qd: &Vector8, qdd: &Vector8, tau: &Vector8) -> Vector8 {
        tau - self.known_terms(qdd, qd)
    }
}

fn christoffel(partials: &[Matrix8], qd: &Vector8) -> Matrix8 {
    // partials[k] = dM/dq_{3+k}; dM/dp is zero.
    let mut mdot = Matrix8::zeros();
    let mut t = Matrix8::zeros();
    for (k, dm) in partials.iter().enumerate() {
        let j = idx::PHI + k;
        mdot += dm * qd[j];
        t.set_column(j, &(dm * qd));
    }
    (mdot + t - t.transpose()) * 0.5
}

/// Evaluates the affine split of `M`, `C`, `G` at `state`.
pub fn decompose_dynamics(
    state: &GeneralizedState,
    consts: &ModelConstants,
) -> Result<DecomposedDynamics> {
    state.validate()?;

    let mut mass = [Matrix8::zeros(); 4];
    let mut partials = [[Matrix8::zeros(); 5]; 4];
    let mut gravity = [Vector8::zeros(); 3];

    for (k, coord) in ANGLE_COORDS.enumerate() {
        let mut qd_seed: SVector<Dual64, DOF> = state.q.map(Dual64::from);
        qd_seed[coord] = qd_seed[coord].derivative();
        let pieces = kinematics::pieces(&qd_seed, consts);
        for p in 0..4 {
            if k == 0 {
                mass[p] = pieces.mass[p].map(|d| d.re);
            }
            partials[p][k] = pieces.mass[p].map(|d| d.eps);
        }
        for (grad, v) in gravity.iter_mut().zip(&pieces.potential) {
            grad[coord] = v.eps;
        }
    }
    // The potential is linear in z and independent of x, y.
    gravity[0][idx::Z] = consts.g * consts.known_mass();
    gravity[1][idx::Z] = consts.g;

    let coriolis = [0, 1, 2, 3].map(|p| christoffel(&partials[p], &state.qd));

    let dd = DecomposedDynamics {
        mass,
        coriolis,
        gravity,
    };
    self_check(&dd)?;
    Ok(dd)
}

fn self_check(dd: &DecomposedDynamics) -> Result<()> {
    let mut deviation = 0.0f64;
    for m in &dd.mass {
        if !m.iter().all(|v| v.is_finite()) {
            return Err(Error::InternalModel {
                deviation: f64::INFINITY,
            });
        }
        deviation = deviation.max((m - m.transpose()).amax());
    }
    if deviation > 1e-9 {
        return Err(Error::InternalModel { deviation });
    }
    Ok(())
}

/// `M`, `C`, `G` for an arbitrary (not necessarily consistent) parameter triple.
pub fn synthesize_dynamics(
    state: &GeneralizedState,
    consts: &ModelConstants,
    params: &Vector3<f64>,
) -> Result<DynamicsMatrices> {
    Ok(decompose_dynamics(state, consts)?.reconstruct(params))
}

/// `qdd = M^-1 (tau - C qd - G)`.
pub fn forward_dynamics(
    state: &GeneralizedState,
    tau: &Vector8,
    consts: &ModelConstants,
    params: &Vector3<f64>,
) -> Result<GeneralizedAccel> {
    let dm = synthesize_dynamics(state, consts, params)?;
    let qdd = dm.solve_accel(&state.qd, tau)?;
    Ok(GeneralizedAccel { qdd })
}

/// Forcing term `U = tau - M1 qdd - C1 qd - G1` from the known-parameter part.
pub fn forcing_term(
    state: &GeneralizedState,
    accel: &GeneralizedAccel,
    tau: &Vector8,
    consts: &ModelConstants,
) -> Result<Vector8> {
    let dd = decompose_dynamics(state, consts)?;
    Ok(dd.forcing(&state.qd, &accel.qdd, tau))
}

/// Link-2 inertia about its joint after attaching a point payload at the tip.
pub fn apply_parallel_axis(i_y2: f64, m_payload: f64, l2: f64) -> Result<f64> {
    if [i_y2, m_payload, l2].iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::Domain(format!(
            "parallel-axis inputs must be non-negative: I = {i_y2}, m = {m_payload}, l = {l2}"
        )));
    }
    Ok(i_y2 + m_payload * l2 * l2)
}

/// Inertia matrix only (no derivatives).
pub fn mass_matrix(
    q: &Vector8,
    consts: &ModelConstants,
    params: &Vector3<f64>,
) -> Matrix8 {
    let pieces = kinematics::pieces::<f64>(q, consts);
    pieces.mass[0]
        + pieces.mass[1] * params[0]
        + pieces.mass[2] * params[1]
        + pieces.mass[3] * params[2]
}

/// Potential energy with zero datum at `z = 0`.
pub fn potential_energy(q: &Vector8, consts: &ModelConstants, params: &Vector3<f64>) -> f64 {
    let pieces = kinematics::pieces::<f64>(q, consts);
    pieces.potential[0] + pieces.potential[1] * params[0] + pieces.potential[2] * params[1]
}

/// Kinetic plus potential energy (J).
pub fn total_energy(
    state: &GeneralizedState,
    consts: &ModelConstants,
    params: &Vector3<f64>,
) -> Result<f64> {
    state.validate()?;
    let m = mass_matrix(&state.q, consts, params);
    Ok(0.5 * state.qd.dot(&(m * state.qd)) + potential_energy(&state.q, consts, params))
}
