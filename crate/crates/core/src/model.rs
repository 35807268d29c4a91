//! Configuration-space types and the known physical constants of the
//! hexacopter + 2-DOF arm.

use nalgebra::{SMatrix, SVector, Vector3};

use crate::error::{Error, Result};

/// Number of generalized coordinates: position (3), Euler angles (3), joints (2).
pub const DOF: usize = 8;

pub type Vector8 = SVector<f64, DOF>;
pub type Matrix8 = SMatrix<f64, DOF, DOF>;

/// Index helpers for the generalized coordinate vector `[x, y, z, phi, theta, psi, eta1, eta2]`.
pub mod idx {
    pub const X: usize = 0;
    pub const Y: usize = 1;
    pub const Z: usize = 2;
    pub const PHI: usize = 3;
    pub const THETA: usize = 4;
    pub const PSI: usize = 5;
    pub const ETA1: usize = 6;
    pub const ETA2: usize = 7;
}

/// Pitch must stay strictly inside this bound (Z-Y-X Euler singularity).
pub const GIMBAL_LIMIT: f64 = std::f64::consts::FRAC_PI_2 - 1e-6;

/// Configuration `q` and velocity `qd` of the combined system.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeneralizedState {
    pub q: Vector8,
    pub qd: Vector8,
}

impl GeneralizedState {
    pub fn new(q: Vector8, qd: Vector8) -> Self {
        Self { q, qd }
    }

    pub fn at_rest(q: Vector8) -> Self {
        Self {
            q,
            qd: Vector8::zeros(),
        }
    }

    /// Checks finiteness and the gimbal-lock exclusion `|theta| < pi/2`.
    pub fn validate(&self) -> Result<()> {
        if !self.q.iter().chain(self.qd.iter()).all(|v| v.is_finite()) {
            return Err(Error::InvalidState("non-finite component".into()));
        }
        let theta = self.q[idx::THETA];
        if theta.abs() >= GIMBAL_LIMIT {
            return Err(Error::InvalidState(format!(
                "pitch {theta} rad at gimbal lock"
            )));
        }
        Ok(())
    }
}

/// Second derivative of the generalized coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeneralizedAccel {
    pub qdd: Vector8,
}

/// Kinematic simplifications available for the model.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ModelMode {
    /// Full rigid-body model.
    #[default]
    Full,
    /// Small roll/pitch: the arm and gravity see only yaw, the Euler-rate map is
    /// the identity, and the link-1 centre of mass sits on the joint.
    SmallAngle,
}

/// Known physical parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelConstants {
    /// Hexacopter mass (kg).
    pub m_b: f64,
    /// Diagonal body inertia (Ixx, Iyy, Izz) in kg m^2.
    pub inertia_b: Vector3<f64>,
    /// Link-1 mass (kg).
    pub m1: f64,
    /// Bare link-2 mass before any payload (kg).
    pub m2_link: f64,
    /// Link lengths (m).
    pub l1: f64,
    pub l2: f64,
    /// Link-1 centre-of-mass offset from its joint (m).
    pub lc1: f64,
    /// Link-2 rotational inertia about its joint axis (kg m^2).
    pub i_y2: f64,
    /// Gravitational acceleration (m/s^2).
    pub g: f64,
    pub mode: ModelMode,
}

impl Default for ModelConstants {
    /// Firefly hexacopter with a 2-DOF arm.
    fn default() -> Self {
        Self {
            m_b: 1.0,
            inertia_b: Vector3::new(0.013, 0.013, 0.021),
            m1: 0.1,
            m2_link: 0.1,
            l1: 0.2,
            l2: 0.2,
            lc1: 0.1,
            i_y2: 0.005,
            g: 9.81,
            mode: ModelMode::Full,
        }
    }
}

impl ModelConstants {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("m_b", self.m_b),
            ("Ixx", self.inertia_b.x),
            ("Iyy", self.inertia_b.y),
            ("Izz", self.inertia_b.z),
            ("m1", self.m1),
            ("m2_link", self.m2_link),
            ("l1", self.l1),
            ("l2", self.l2),
            ("i_y2", self.i_y2),
            ("g", self.g),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        if !(0.0..=self.l1).contains(&self.lc1) {
            return Err(Error::Domain(format!(
                "lc1 = {} outside [0, l1 = {}]",
                self.lc1, self.l1
            )));
        }
        Ok(())
    }

    /// Link-1 COM offset as seen by the kinematics (zero in small-angle mode).
    pub fn effective_lc1(&self) -> f64 {
        match self.mode {
            ModelMode::Full => self.lc1,
            ModelMode::SmallAngle => 0.0,
        }
    }

    /// Mass of everything except link 2 and its payload.
    pub fn known_mass(&self) -> f64 {
        self.m_b + self.m1
    }

    /// Unknown-parameter triple of the bare link 2 (uniform rod, COM at mid-length).
    pub fn no_payload_params(&self) -> UnknownParams {
        UnknownParams::from_mass_and_com(self.m2_link, self.l2 / 2.0)
    }
}

/// The unknown triple `(m2, m3, m4) = (m2, m2 lc, m2 lc^2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnknownParams {
    pub m2: f64,
    pub m3: f64,
    pub m4: f64,
}

impl UnknownParams {
    pub fn new(m2: f64, m3: f64, m4: f64) -> Result<Self> {
        let p = Self { m2, m3, m4 };
        p.validate()?;
        Ok(p)
    }

    /// Consistent triple for a link-2 mass `m2` whose COM lies `lc` from the joint.
    pub fn from_mass_and_com(m2: f64, lc: f64) -> Self {
        Self {
            m2,
            m3: m2 * lc,
            m4: m2 * lc * lc,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m2.is_finite() && self.m2 > 0.0) {
            return Err(Error::Domain(format!("m2 must be positive, got {}", self.m2)));
        }
        if !(self.m3.is_finite() && self.m3 >= 0.0 && self.m4.is_finite() && self.m4 >= 0.0) {
            return Err(Error::Domain(format!(
                "m3, m4 must be non-negative, got {}, {}",
                self.m3, self.m4
            )));
        }
        Ok(())
    }

    pub fn lc(&self) -> f64 {
        self.m3 / self.m2
    }

    pub fn as_vector(&self) -> Vector3<f64> {
        Vector3::new(self.m2, self.m3, self.m4)
    }
}

impl From<UnknownParams> for Vector3<f64> {
    fn from(p: UnknownParams) -> Self {
        p.as_vector()
    }
}
