#![allow(dead_code)]

use amest::model::{idx, ModelConstants, Vector8};
use nalgebra::{Rotation3, Vector3};
use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random configuration away from gimbal lock, random velocity.
pub fn random_state(rng: &mut impl Rng) -> (Vector8, Vector8) {
    let pi = std::f64::consts::PI;
    let mut q = Vector8::zeros();
    for i in 0..3 {
        q[i] = rng.random_range(-2.0..2.0);
    }
    q[idx::PHI] = rng.random_range(-1.2..1.2);
    q[idx::THETA] = rng.random_range(-1.2..1.2);
    q[idx::PSI] = rng.random_range(-pi..pi);
    q[idx::ETA1] = rng.random_range(-pi..pi);
    q[idx::ETA2] = rng.random_range(-pi..pi);
    let qd = Vector8::from_fn(|_, _| rng.random_range(-2.0..2.0));
    (q, qd)
}

pub fn random_vector(rng: &mut impl Rng, scale: f64) -> Vector8 {
    Vector8::from_fn(|_, _| rng.random_range(-scale..scale))
}

/// Direct world-frame geometry, written independently of the library.
pub struct Geometry {
    pub base: Vector3<f64>,
    pub body: Rotation3<f64>,
    pub link1_com: Vector3<f64>,
    pub link2_com: Vector3<f64>,
    pub link2_frame: Rotation3<f64>,
}

pub fn geometry(q: &Vector8, consts: &ModelConstants, lc: f64) -> Geometry {
    let base = Vector3::new(q[0], q[1], q[2]);
    let body = Rotation3::from_euler_angles(q[idx::PHI], q[idx::THETA], q[idx::PSI]);
    let y = Vector3::y_axis();
    let a1 = q[idx::ETA1];
    let a2 = q[idx::ETA1] + q[idx::ETA2];
    // A link at angle a points along Ry(-a) x = [cos a, 0, sin a].
    let link = |a: f64| Rotation3::from_axis_angle(&y, -a);
    let ex = Vector3::x();
    let link1_com = base + body * (link(a1) * ex * consts.lc1);
    let link2_com = base + body * (link(a1) * ex * consts.l1 + link(a2) * ex * lc);
    Geometry {
        base,
        body,
        link1_com,
        link2_com,
        link2_frame: body * link(a2),
    }
}

fn angular_velocity(r_plus: &Rotation3<f64>, r_minus: &Rotation3<f64>, r: &Rotation3<f64>, h: f64) -> Vector3<f64> {
    let rdot = (r_plus.matrix() - r_minus.matrix()) / (2.0 * h);
    let omega = r.matrix().transpose() * rdot;
    Vector3::new(omega[(2, 1)], omega[(0, 2)], omega[(1, 0)])
}

/// Kinetic energy from finite-difference velocities of the world geometry.
pub fn kinetic_energy(q: &Vector8, qd: &Vector8, consts: &ModelConstants, m2: f64, lc: f64) -> f64 {
    let h = 1e-5;
    let g0 = geometry(q, consts, lc);
    let gp = geometry(&(q + qd * h), consts, lc);
    let gm = geometry(&(q - qd * h), consts, lc);
    let vel = |p: Vector3<f64>, m: Vector3<f64>| (p - m) / (2.0 * h);

    let v_base = vel(gp.base, gm.base);
    let v1 = vel(gp.link1_com, gm.link1_com);
    let v2 = vel(gp.link2_com, gm.link2_com);
    let w_body = angular_velocity(&gp.body, &gm.body, &g0.body, h);
    let w_link = angular_velocity(&gp.link2_frame, &gm.link2_frame, &g0.link2_frame, h);
    let ib = consts.inertia_b;

    0.5 * consts.m_b * v_base.norm_squared()
        + 0.5 * (ib.x * w_body.x.powi(2) + ib.y * w_body.y.powi(2) + ib.z * w_body.z.powi(2))
        + 0.5 * consts.m1 * v1.norm_squared()
        + 0.5 * m2 * v2.norm_squared()
        + 0.5 * consts.i_y2 * w_link.y.powi(2)
}

/// Inertia matrix recovered by polarisation of the kinetic energy.
pub fn oracle_mass_matrix(q: &Vector8, consts: &ModelConstants, m2: f64, lc: f64) -> nalgebra::SMatrix<f64, 8, 8> {
    let e = |i: usize| Vector8::from_fn(|r, _| if r == i { 1.0 } else { 0.0 });
    let ke = |v: &Vector8| kinetic_energy(q, v, consts, m2, lc);
    let diag: Vec<f64> = (0..8).map(|i| ke(&e(i))).collect();
    nalgebra::SMatrix::<f64, 8, 8>::from_fn(|i, j| {
        if i == j {
            2.0 * diag[i]
        } else {
            ke(&(e(i) + e(j))) - diag[i] - diag[j]
        }
    })
}

/// Potential energy from the world-frame heights of each mass.
pub fn potential(q: &Vector8, consts: &ModelConstants, m2: f64, lc: f64) -> f64 {
    let g = geometry(q, consts, lc);
    consts.g * (consts.m_b * g.base.z + consts.m1 * g.link1_com.z + m2 * g.link2_com.z)
}

pub fn params(m2: f64, lc: f64) -> Vector3<f64> {
    Vector3::new(m2, m2 * lc, m2 * lc * lc)
}
