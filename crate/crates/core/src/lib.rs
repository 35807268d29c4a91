//! Online payload-parameter estimation and augmented passivity-based control
//! for a hexacopter carrying a two-link arm.
//!
//! The combined vehicle is described by eight generalized coordinates
//! `q = [x, y, z, phi, theta, psi, eta1, eta2]` and the Euler-Lagrange model
//! `M(q) qdd + C(q, qd) qd + G(q) = tau`. A payload grasped by the second link
//! changes three quantities, `m2`, `m3 = m2 lc` and `m4 = m2 lc^2`, and the
//! dynamics are affine in them. The crate provides
//!
//! * [`dynamics`]: the equations of motion and their affine split,
//! * [`estimator`]: the online estimator of `(m2, m3, m4)`,
//! * [`control`]: the passivity-based controller, attitude allocation and an
//!   adaptive sliding-mode baseline with mass extraction,
//! * [`sim`]: deterministic closed-loop simulation and scenario comparison.
//!
//! ```
//! use amest::sim::{run, Scenario};
//!
//! let scenario = Scenario { duration: 0.05, ..Scenario::default() };
//! let log = run(&scenario).unwrap();
//! assert_eq!(log.len(), 50);
//! ```

pub mod control;
pub mod dynamics;
pub mod error;
pub mod estimator;
pub mod integrate;
pub mod model;
pub mod sim;

pub use error::{Error, Result};
pub use model::{
    GeneralizedAccel, GeneralizedState, Matrix8, ModelConstants, ModelMode, UnknownParams,
    Vector8, DOF,
};
