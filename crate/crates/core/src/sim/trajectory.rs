use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_8, PI};

use crate::control::{AttitudeSetpoint, TrajectoryPoint};
use crate::error::{Error, Result};
use crate::model::{idx, Vector8};

/// Desired configuration as a function of time. The roll and pitch slots are
/// setpoints supplied by attitude allocation and carry zero derivatives.
#[derive(Clone, Debug, PartialEq)]
pub enum Trajectory {
    /// Diagonal position sweep at 0.7 m altitude with a swinging arm:
    /// `x = cos(pi t / 5) / 2`, `y = -x`, `eta1 = -pi/2 + pi/4 sin(pi t / 5)`,
    /// `eta2 = pi/8 sin(pi t / 5)`, zero yaw.
    Sweep,
    /// Constant configuration.
    Hover { q: Vector8 },
    /// Rest-to-rest quintic blends between timed waypoints.
    Waypoints(Vec<Waypoint>),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Waypoint {
    pub t: f64,
    pub q: Vector8,
}

impl Trajectory {
    /// Hover at `z` with the arm hanging straight down.
    pub fn hover_at(z: f64) -> Self {
        let mut q = Vector8::zeros();
        q[idx::Z] = z;
        q[idx::ETA1] = -FRAC_PI_2;
        Trajectory::Hover { q }
    }

    pub fn waypoints(mut points: Vec<Waypoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidScenario("no waypoints".into()));
        }
        points.sort_by(|a, b| a.t.total_cmp(&b.t));
        if points.windows(2).any(|w| !(w[1].t > w[0].t)) {
            return Err(Error::InvalidScenario(
                "waypoint times must be distinct".into(),
            ));
        }
        Ok(Trajectory::Waypoints(points))
    }

    /// Reference at `t` with zero roll/pitch setpoints.
    pub fn sample(&self, t: f64) -> TrajectoryPoint {
        let mut p = match self {
            Trajectory::Sweep => sweep(t),
            Trajectory::Hover { q } => TrajectoryPoint::hold(*q),
            Trajectory::Waypoints(points) => blend(points, t),
        };
        for i in [idx::PHI, idx::THETA] {
            p.q[i] = 0.0;
            p.qd[i] = 0.0;
            p.qdd[i] = 0.0;
        }
        p
    }

    /// Reference at `t` with the roll/pitch slots filled from `attitude`.
    pub fn sample_with_attitude(&self, t: f64, attitude: &AttitudeSetpoint) -> TrajectoryPoint {
        let mut p = self.sample(t);
        p.q[idx::PHI] = attitude.phi_d;
        p.q[idx::THETA] = attitude.theta_d;
        p
    }
}

/// Sweep reference at `t` (roll/pitch slots zero).
pub fn reference_trajectory(t: f64) -> TrajectoryPoint {
    Trajectory::Sweep.sample(t)
}

fn sweep(t: f64) -> TrajectoryPoint {
    let w = PI / 5.0;
    let (s, c) = (w * t).sin_cos();
    let mut q = Vector8::zeros();
    let mut qd = Vector8::zeros();
    let mut qdd = Vector8::zeros();

    q[idx::X] = 0.5 * c;
    qd[idx::X] = -0.5 * w * s;
    qdd[idx::X] = -0.5 * w * w * c;
    q[idx::Y] = -q[idx::X];
    qd[idx::Y] = -qd[idx::X];
    qdd[idx::Y] = -qdd[idx::X];
    q[idx::Z] = 0.7;

    q[idx::ETA1] = -FRAC_PI_2 + FRAC_PI_4 * s;
    qd[idx::ETA1] = FRAC_PI_4 * w * c;
    qdd[idx::ETA1] = -FRAC_PI_4 * w * w * s;
    q[idx::ETA2] = FRAC_PI_8 * s;
    qd[idx::ETA2] = FRAC_PI_8 * w * c;
    qdd[idx::ETA2] = -FRAC_PI_8 * w * w * s;

    TrajectoryPoint { q, qd, qdd }
}

fn blend(points: &[Waypoint], t: f64) -> TrajectoryPoint {
    let first = &points[0];
    let last = &points[points.len() - 1];
    if t <= first.t {
        return TrajectoryPoint::hold(first.q);
    }
    if t >= last.t {
        return TrajectoryPoint::hold(last.q);
    }
    let k = points.partition_point(|w| w.t <= t);
    let (a, b) = (&points[k - 1], &points[k]);
    let span = b.t - a.t;
    let u = (t - a.t) / span;
    let s = u * u * u * (10.0 - 15.0 * u + 6.0 * u * u);
    let ds = 30.0 * u * u * (1.0 - u) * (1.0 - u) / span;
    let dds = 60.0 * u * (1.0 - u) * (1.0 - 2.0 * u) / (span * span);
    let delta = b.q - a.q;
    TrajectoryPoint {
        q: a.q + delta * s,
        qd: delta * ds,
        qdd: delta * dds,
    }
}
