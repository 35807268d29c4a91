//! Seeded invariant suite run by `amestctl validate`.

use std::f64::consts::PI;

use amest::control::{augmented, passivity_control_from, regressor_from, TrajectoryPoint};
use amest::dynamics::{decompose_dynamics, forward_dynamics, mass_matrix, potential_energy, total_energy};
use amest::estimator::{
    error_dynamics_residual, estimator_derivative, lyapunov_v1, lyapunov_v1_rate, EstimatorState,
    PlantSample,
};
use amest::integrate::rk4_step;
use amest::model::{idx, GeneralizedState, Matrix8, ModelConstants, Vector8};
use amest::sim::{run, Scenario};
use nalgebra::{SVector, Vector3};
use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug)]
pub struct SuiteOptions {
    pub seed: u64,
    pub samples: usize,
    /// Adds 1e-3 to every entry of C in the skew-symmetry check.
    pub inject_fault: bool,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            samples: 1000,
            inject_fault: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PropertyResult {
    pub name: &'static str,
    pub worst: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// Description of the sample attaining `worst`.
    pub witness: String,
}

impl std::fmt::Display for PropertyResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} {:<28} worst = {:.3e} (tolerance {:.0e})",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.worst,
            self.tolerance
        )?;
        if !self.passed {
            write!(f, " at {}", self.witness)?;
        }
        Ok(())
    }
}

/// Tracks the worst value of a property over samples.
struct Worst {
    value: f64,
    witness: String,
}

impl Worst {
    fn new() -> Self {
        Self {
            value: 0.0,
            witness: String::from("-"),
        }
    }

    fn update(&mut self, v: f64, witness: impl FnOnce() -> String) {
        if !(v <= self.value) {
            self.value = v;
            self.witness = witness();
        }
    }

    fn finish(self, name: &'static str, tolerance: f64) -> PropertyResult {
        PropertyResult {
            name,
            passed: self.value <= tolerance,
            worst: self.value,
            tolerance,
            witness: self.witness,
        }
    }
}

fn random_state(rng: &mut impl Rng) -> GeneralizedState {
    let mut q = Vector8::zeros();
    for i in 0..3 {
        q[i] = rng.random_range(-2.0..2.0);
    }
    q[idx::PHI] = rng.random_range(-1.2..1.2);
    q[idx::THETA] = rng.random_range(-1.2..1.2);
    q[idx::PSI] = rng.random_range(-PI..PI);
    q[idx::ETA1] = rng.random_range(-PI..PI);
    q[idx::ETA2] = rng.random_range(-PI..PI);
    GeneralizedState::new(q, random_vector(rng, 2.0))
}

fn random_vector(rng: &mut impl Rng, scale: f64) -> Vector8 {
    Vector8::from_fn(|_, _| rng.random_range(-scale..scale))
}

fn random_params(rng: &mut impl Rng) -> Vector3<f64> {
    let m2 = rng.random_range(0.05..1.5);
    let lc = rng.random_range(0.0..0.3);
    Vector3::new(m2, m2 * lc, m2 * lc * lc)
}

fn describe(state: &GeneralizedState) -> String {
    let q: Vec<String> = state.q.iter().map(|v| format!("{v:.4}")).collect();
    let qd: Vec<String> = state.qd.iter().map(|v| format!("{v:.4}")).collect();
    format!("q = [{}], qd = [{}]", q.join(", "), qd.join(", "))
}

/// Structural properties of the dynamics, estimator and controller at
/// `samples` random states.
pub fn structural(opts: &SuiteOptions) -> Vec<PropertyResult> {
    let consts = ModelConstants::default();
    let scenario = Scenario::default();
    let gains = scenario.estimator;
    let pgains = scenario.passivity;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let mut sym = Worst::new();
    let mut min_eig = (f64::INFINITY, String::from("-"));
    let mut skew = Worst::new();
    let mut affine = Worst::new();
    let mut regressor = Worst::new();
    let mut est_res = Worst::new();
    let mut loop_res = Worst::new();
    let mut grav = Worst::new();
    let mut v1_rate = Worst::new();

    let fault = if opts.inject_fault {
        Matrix8::repeat(1e-3)
    } else {
        Matrix8::zeros()
    };

    for _ in 0..opts.samples {
        let state = random_state(&mut rng);
        let (q, qd) = (state.q, state.qd);
        let p = random_params(&mut rng);
        let dd = match decompose_dynamics(&state, &consts) {
            Ok(dd) => dd,
            Err(e) => {
                sym.update(f64::INFINITY, || format!("{}: {e}", describe(&state)));
                continue;
            }
        };
        let dm = dd.reconstruct(&p);

        sym.update((dm.mass - dm.mass.transpose()).amax(), || describe(&state));
        let eig = dm.mass.symmetric_eigenvalues().min();
        if eig < min_eig.0 {
            min_eig = (eig, describe(&state));
        }

        let h = 1e-6;
        let mdot = (mass_matrix(&(q + qd * h), &consts, &p) - mass_matrix(&(q - qd * h), &consts, &p))
            / (2.0 * h);
        let c = dm.coriolis + fault;
        let x = random_vector(&mut rng, 1.0);
        let form = x.dot(&((mdot - c * 2.0) * x)).abs() / x.norm_squared();
        skew.update(form, || describe(&state));

        let (a, b, s) = (random_params(&mut rng), random_params(&mut rng), rng.random_range(-2.0..2.0));
        let mix = dd.reconstruct(&(a * s + b * (1.0 - s)));
        let (da, db) = (dd.reconstruct(&a), dd.reconstruct(&b));
        let dev = (mix.mass - (da.mass * s + db.mass * (1.0 - s)))
            .amax()
            .max((mix.coriolis - (da.coriolis * s + db.coriolis * (1.0 - s))).amax())
            .max((mix.gravity - (da.gravity * s + db.gravity * (1.0 - s))).amax());
        affine.update(dev, || describe(&state));

        let traj = TrajectoryPoint {
            q: random_state(&mut rng).q,
            qd: random_vector(&mut rng, 2.0),
            qdd: random_vector(&mut rng, 3.0),
        };
        let y = regressor_from(&dd, &traj);
        let direct = dm.mass * traj.qdd + dm.coriolis * traj.qd + dm.gravity;
        regressor.update((y * augmented(&p) - direct).amax(), || describe(&state));

        // Estimator error dynamics on a sample generated by the true parameters.
        let tau = random_vector(&mut rng, 10.0);
        if let Ok(qdd) = dm.solve_accel(&qd, &tau) {
            let sample = PlantSample::from_dynamics(state, qdd, tau, dd);
            let est = EstimatorState {
                q_hat: q + random_vector(&mut rng, 0.2),
                m_hat: random_params(&mut rng),
            };
            let rates = estimator_derivative(&est, &sample, &gains);
            let truth = amest::UnknownParams {
                m2: p[0],
                m3: p[1],
                m4: p[2],
            };
            let res = error_dynamics_residual(&est, &rates, &truth, &sample, &gains);
            est_res.update(res.amax(), || describe(&state));

            let hh = 1e-6;
            let along = |t: f64| {
                let e = EstimatorState {
                    q_hat: est.q_hat + rates.q_hat_dot * t,
                    m_hat: est.m_hat + rates.m_hat_dot * t,
                };
                lyapunov_v1(&e, &truth, &(q + qd * t), &gains)
            };
            let fd = (along(hh) - along(-hh)) / (2.0 * hh);
            let analytic = lyapunov_v1_rate(&est, &q, &gains);
            v1_rate.update((fd - analytic).abs() / analytic.abs().max(1e-3), || describe(&state));
        }

        // Closed-loop tracking-error dynamics under the passivity controller.
        let m_hat = random_params(&mut rng);
        let tau = passivity_control_from(&dd, &state, &traj, &m_hat, &pgains);
        if let Ok(qdd) = dm.solve_accel(&qd, &tau) {
            let (e, ed, edd) = (q - traj.q, qd - traj.qd, qdd - traj.qdd);
            let lhs = dm.mass * edd + dm.coriolis * ed + pgains.k * (ed + pgains.lambda * e);
            let rhs = y * (augmented(&m_hat) - augmented(&p));
            loop_res.update((lhs - rhs).amax() / tau.amax().max(1.0), || describe(&state));
        }

        let hg = 1e-6;
        let mut g_dev = 0.0f64;
        for k in 0..8 {
            let mut dq = Vector8::zeros();
            dq[k] = hg;
            let fd = (potential_energy(&(q + dq), &consts, &p) - potential_energy(&(q - dq), &consts, &p))
                / (2.0 * hg);
            g_dev = g_dev.max((dm.gravity[k] - fd).abs());
        }
        grav.update(g_dev, || describe(&state));
    }

    // Reported as the smallest eigenvalue seen, which must stay positive.
    let pd = PropertyResult {
        name: "mass-positive-definite",
        worst: min_eig.0,
        tolerance: 0.0,
        passed: min_eig.0 > 0.0,
        witness: min_eig.1,
    };
    vec![
        sym.finish("mass-symmetry", 1e-10),
        pd,
        skew.finish("skew-symmetry", 1e-6),
        affine.finish("affinity", 1e-10),
        regressor.finish("regressor-identity", 1e-10),
        est_res.finish("estimator-error-dynamics", 1e-9),
        loop_res.finish("closed-loop-error-dynamics", 1e-9),
        grav.finish("gravity-gradient", 1e-6),
        v1_rate.finish("lyapunov-rate", 1e-5),
    ]
}

/// Relative energy drift of the torque-free, gravity-free plant over `duration`.
pub fn energy_drift(duration: f64, dt: f64) -> PropertyResult {
    let consts = ModelConstants {
        g: 0.0,
        ..ModelConstants::default()
    };
    let p = Scenario::default().truth.as_vector();
    let q0 = Vector8::from_column_slice(&[0.0, 0.0, 1.0, 0.1, -0.2, 0.3, -1.2, 0.4]);
    let qd0 = Vector8::from_column_slice(&[0.1, -0.2, 0.05, 0.3, -0.2, 0.4, 0.5, -0.6]);
    let split = |y: &SVector<f64, 16>| {
        GeneralizedState::new(y.fixed_rows::<8>(0).into_owned(), y.fixed_rows::<8>(8).into_owned())
    };
    let mut y = SVector::<f64, 16>::zeros();
    y.fixed_rows_mut::<8>(0).copy_from(&q0);
    y.fixed_rows_mut::<8>(8).copy_from(&qd0);
    let energy = |y: &SVector<f64, 16>| total_energy(&split(y), &consts, &p);
    let f = |_t: f64, y: &SVector<f64, 16>| -> amest::Result<SVector<f64, 16>> {
        let s = split(y);
        let a = forward_dynamics(&s, &Vector8::zeros(), &consts, &p)?;
        let mut dy = SVector::<f64, 16>::zeros();
        dy.fixed_rows_mut::<8>(0).copy_from(&s.qd);
        dy.fixed_rows_mut::<8>(8).copy_from(&a.qdd);
        Ok(dy)
    };
    let mut worst = Worst::new();
    let result = (|| -> amest::Result<()> {
        let e0 = energy(&y)?;
        let steps = (duration / dt).round() as usize;
        for k in 0..steps {
            y = rk4_step(f, k as f64 * dt, &y, dt)?;
            let t = (k + 1) as f64 * dt;
            worst.update(((energy(&y)? - e0) / e0).abs(), || format!("t = {t}"));
        }
        Ok(())
    })();
    if let Err(e) = result {
        worst.update(f64::INFINITY, || e.to_string());
    }
    worst.finish("energy-conservation", 1e-6)
}

/// Largest per-step rise of V1 over a noise-free closed-loop run.
pub fn lyapunov_monotonicity(duration: f64) -> PropertyResult {
    let scenario = Scenario {
        duration,
        ..Scenario::default()
    };
    let mut worst = Worst::new();
    match run(&scenario) {
        Ok(log) => {
            for w in log.rows.windows(2) {
                worst.update(w[1].v1 - w[0].v1, || format!("t = {}", w[1].t));
            }
        }
        Err(e) => worst.update(f64::INFINITY, || e.to_string()),
    }
    worst.finish("lyapunov-monotonicity", 1e-8)
}

/// Every property of the suite.
pub fn run_suite(opts: &SuiteOptions) -> Vec<PropertyResult> {
    let mut results = structural(opts);
    results.push(energy_drift(5.0, 1e-3));
    results.push(lyapunov_monotonicity(2.0));
    results
}
