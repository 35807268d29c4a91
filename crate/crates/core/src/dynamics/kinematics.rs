//! Lagrangian building blocks of the combined system, generic over the scalar
//! so that the same code yields both values and exact first derivatives
//! (forward-mode dual numbers) of the inertia and potential pieces.
//!
//! Frames: inertial z points up, gravity acts along -z. The body attitude is
//! `R = Rz(psi) Ry(theta) Rx(phi)` and the body angular velocity is
//! `omega = W(Phi) Phi_dot`. Both arm joints sit at the body origin and turn
//! about the body y axis; a link at absolute joint angle `a` points along
//! `[cos a, 0, sin a]` in the body frame, so `eta1 = -pi/2` hangs straight down.

use nalgebra::{Matrix3, SMatrix, SVector, Scalar, Vector3};
use num_dual::DualNum;

use crate::model::{idx, ModelConstants, ModelMode, DOF};

pub(crate) trait Real: DualNum<Primitive = f64> + Scalar + Copy {}
impl<T: DualNum<Primitive = f64> + Scalar + Copy> Real for T {}

/// Inertia and potential split into the parts multiplying `(1, m2, m3, m4)`.
pub(crate) struct Pieces<D: Real> {
    pub mass: [SMatrix<D, DOF, DOF>; 4],
    pub potential: [D; 3],
}

fn c<D: Real>(v: f64) -> D {
    D::from(v)
}

pub(crate) fn rotation<D: Real>(phi: D, theta: D, psi: D, mode: ModelMode) -> Matrix3<D> {
    let (sy, cy) = (psi.sin(), psi.cos());
    match mode {
        ModelMode::SmallAngle => Matrix3::new(
            cy,
            -sy,
            c(0.0),
            sy,
            cy,
            c(0.0),
            c(0.0),
            c(0.0),
            c(1.0),
        ),
        ModelMode::Full => {
            let (sr, cr) = (phi.sin(), phi.cos());
            let (sp, cp) = (theta.sin(), theta.cos());
            Matrix3::new(
                cy * cp,
                cy * sp * sr - sy * cr,
                cy * sp * cr + sy * sr,
                sy * cp,
                sy * sp * sr + cy * cr,
                sy * sp * cr - cy * sr,
                -sp,
                cp * sr,
                cp * cr,
            )
        }
    }
}

/// Maps Euler-angle rates to body angular velocity.
pub(crate) fn euler_rate_map<D: Real>(phi: D, theta: D, mode: ModelMode) -> Matrix3<D> {
    match mode {
        ModelMode::SmallAngle => Matrix3::identity(),
        ModelMode::Full => {
            let (sr, cr) = (phi.sin(), phi.cos());
            let (sp, cp) = (theta.sin(), theta.cos());
            Matrix3::new(
                c(1.0),
                c(0.0),
                -sp,
                c(0.0),
                cr,
                sr * cp,
                c(0.0),
                -sr,
                cr * cp,
            )
        }
    }
}

fn link_dir<D: Real>(a: D) -> Vector3<D> {
    Vector3::new(a.cos(), c(0.0), a.sin())
}

fn link_dir_rate<D: Real>(a: D) -> Vector3<D> {
    Vector3::new(-a.sin(), c(0.0), a.cos())
}

fn skew<D: Real>(r: &Vector3<D>) -> Matrix3<D> {
    Matrix3::new(
        c(0.0),
        -r.z,
        r.y,
        r.z,
        c(0.0),
        -r.x,
        -r.y,
        r.x,
        c(0.0),
    )
}

/// World-frame velocity Jacobian of a body-fixed (or arm-carried) point.
///
/// `r` is the point in body coordinates and `r_eta` its 3x2 derivative with
/// respect to the joint angles. `translate` selects whether the base
/// translation contributes (it does not for the `lc`-proportional part).
fn point_jacobian<D: Real>(
    rot: &Matrix3<D>,
    rate_map: &Matrix3<D>,
    r: &Vector3<D>,
    r_eta: &SMatrix<D, 3, 2>,
    translate: bool,
) -> SMatrix<D, 3, DOF> {
    let mut jac = SMatrix::<D, 3, DOF>::zeros();
    if translate {
        jac.fixed_view_mut::<3, 3>(0, 0).fill_with_identity();
    }
    let ang = -(rot * skew(r) * rate_map);
    jac.fixed_view_mut::<3, 3>(0, idx::PHI).copy_from(&ang);
    jac.fixed_view_mut::<3, 2>(0, idx::ETA1)
        .copy_from(&(rot * r_eta));
    jac
}

pub(crate) fn pieces<D: Real>(q: &SVector<D, DOF>, consts: &ModelConstants) -> Pieces<D> {
    let mode = consts.mode;
    let (phi, theta, psi) = (q[idx::PHI], q[idx::THETA], q[idx::PSI]);
    let (eta1, eta2) = (q[idx::ETA1], q[idx::ETA2]);
    let rot = rotation(phi, theta, psi, mode);
    let w = euler_rate_map(phi, theta, mode);

    let a2 = eta1 + eta2;
    let (u1, u1d) = (link_dir(eta1), link_dir_rate(eta1));
    let (u2, u2d) = (link_dir(a2), link_dir_rate(a2));

    // Hexacopter body.
    let mut m1 = SMatrix::<D, DOF, DOF>::zeros();
    for i in 0..3 {
        m1[(i, i)] = c(consts.m_b);
    }
    let ib = Matrix3::from_diagonal(&consts.inertia_b.map(c::<D>));
    m1.fixed_view_mut::<3, 3>(idx::PHI, idx::PHI)
        .copy_from(&(w.transpose() * ib * w));

    // Link 1 as a point mass at lc1 along the link.
    let lc1 = consts.effective_lc1();
    let r1 = u1 * c::<D>(lc1);
    let mut r1_eta = SMatrix::<D, 3, 2>::zeros();
    r1_eta.set_column(0, &(u1d * c::<D>(lc1)));
    let j1 = point_jacobian(&rot, &w, &r1, &r1_eta, true);
    m1 += j1.transpose() * j1 * c::<D>(consts.m1);

    // Link-2 rotational inertia about its joint (y) axis.
    let mut spin = SMatrix::<D, 1, DOF>::zeros();
    for k in 0..3 {
        spin[(0, idx::PHI + k)] = w[(1, k)];
    }
    spin[(0, idx::ETA1)] = c(-1.0);
    spin[(0, idx::ETA2)] = c(-1.0);
    m1 += spin.transpose() * spin * c::<D>(consts.i_y2);

    // Link-2 point mass at r = l1 u1 + lc u2, split as A + lc B.
    let ra = u1 * c::<D>(consts.l1);
    let mut ra_eta = SMatrix::<D, 3, 2>::zeros();
    ra_eta.set_column(0, &(u1d * c::<D>(consts.l1)));
    let ja = point_jacobian(&rot, &w, &ra, &ra_eta, true);

    let mut rb_eta = SMatrix::<D, 3, 2>::zeros();
    rb_eta.set_column(0, &u2d);
    rb_eta.set_column(1, &u2d);
    let jb = point_jacobian(&rot, &w, &u2, &rb_eta, false);

    let m2 = ja.transpose() * ja;
    let cross = ja.transpose() * jb;
    let m3 = cross + cross.transpose();
    let m4 = jb.transpose() * jb;

    let g = c::<D>(consts.g);
    let z = q[idx::Z];
    let height = |r: &Vector3<D>| -> D { rot.row(2).transpose().dot(r) };
    let v1 = g * (z * c::<D>(consts.m_b + consts.m1) + height(&r1) * c::<D>(consts.m1));
    let v2 = g * (z + height(&ra));
    let v3 = g * height(&u2);

    Pieces {
        mass: [m1, m2, m3, m4],
        potential: [v1, v2, v3],
    }
}
