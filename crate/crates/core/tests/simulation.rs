use amest::control::TrajectoryPoint;
use amest::dynamics::decompose_dynamics;
use amest::integrate::rk4_step;
use amest::model::{GeneralizedState, ModelConstants, UnknownParams, Vector8};
use amest::sim::{compare, reference_trajectory, run, summarize, ControllerKind, NoiseConfig, Scenario, Trajectory};
use amest::Error;
use nalgebra::{SVector, Vector2};

fn short(duration: f64) -> Scenario {
    Scenario {
        duration,
        ..Scenario::default()
    }
}

#[test]
fn reference_derivatives_match_finite_differences() {
    let h = 1e-5;
    for k in 0..50 {
        let t = 0.37 * k as f64;
        let p: TrajectoryPoint = reference_trajectory(t);
        let (a, b) = (reference_trajectory(t + h), reference_trajectory(t - h));
        assert!(((a.q - b.q) / (2.0 * h) - p.qd).amax() < 1e-6);
        assert!(((a.qd - b.qd) / (2.0 * h) - p.qdd).amax() < 1e-6);
    }
}

#[test]
fn equilibrium_is_held_under_gravity_compensation() {
    let consts = ModelConstants::default();
    let p = UnknownParams::from_mass_and_com(0.5, 0.16).as_vector();
    let q = Vector8::from_column_slice(&[0.3, -0.2, 1.0, 0.0, 0.0, 0.4, -1.2, 0.5]);
    let dd = decompose_dynamics(&GeneralizedState::at_rest(q), &consts).unwrap();
    let tau = dd.gravity_vector(&p);
    let mut y = SVector::<f64, 16>::zeros();
    y.fixed_rows_mut::<8>(0).copy_from(&q);
    let f = |_t: f64, y: &SVector<f64, 16>| -> amest::Result<SVector<f64, 16>> {
        let s = GeneralizedState::new(y.fixed_rows::<8>(0).into(), y.fixed_rows::<8>(8).into());
        let qdd = decompose_dynamics(&s, &consts)?.reconstruct(&p).solve_accel(&s.qd, &tau)?;
        let mut dy = SVector::<f64, 16>::zeros();
        dy.fixed_rows_mut::<8>(0).copy_from(&s.qd);
        dy.fixed_rows_mut::<8>(8).copy_from(&qdd);
        Ok(dy)
    };
    for k in 0..100 {
        let next = rk4_step(f, k as f64 * 1e-3, &y, 1e-3).unwrap();
        assert!((next - y).amax() < 1e-12);
        y = next;
    }
}

#[test]
fn rk4_error_drops_sixteenfold_on_oscillator() {
    let omega = 3.0;
    let f = |_t: f64, y: &Vector2<f64>| -> Result<Vector2<f64>, ()> { Ok(Vector2::new(y[1], -omega * omega * y[0])) };
    let error = |dt: f64| {
        let mut y = Vector2::new(1.0, 0.0);
        let n = (2.0 / dt).round() as usize;
        for k in 0..n {
            y = rk4_step(f, k as f64 * dt, &y, dt).unwrap();
        }
        (y[0] - (omega * 2.0).cos()).abs()
    };
    let ratio = error(0.02) / error(0.01);
    assert!((12.0..=20.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn runs_are_bit_identical() {
    let sc = Scenario {
        noise: NoiseConfig { q: 1e-4, qd: 1e-3, qdd: 0.1 },
        seed: 42,
        ..short(0.5)
    };
    assert_eq!(run(&sc).unwrap(), run(&sc).unwrap());
    let other = Scenario { seed: 43, ..sc.clone() };
    assert_ne!(run(&sc).unwrap(), run(&other).unwrap());
}

#[test]
fn logged_acceleration_is_consistent_with_the_plant() {
    let sc = short(1.0);
    let log = run(&sc).unwrap();
    let truth = sc.truth.as_vector();
    for row in &log.rows {
        let dd = decompose_dynamics(&GeneralizedState::new(row.q, row.qd), &sc.consts).unwrap();
        let res = dd.reconstruct(&truth).inverse_dynamics(&row.qd, &row.qdd) - row.tau;
        assert!(res.amax() <= 1e-8, "residual {} at t = {}", res.amax(), row.t);
    }
}

#[test]
fn v1_is_nonincreasing_without_noise() {
    let log = run(&short(3.0)).unwrap();
    for w in log.rows.windows(2) {
        assert!(w[1].v1 - w[0].v1 <= 1e-8, "V1 rose at t = {}", w[1].t);
    }
    assert!(log.last().unwrap().v1 < log.rows[0].v1);
}

#[test]
fn hover_with_exact_model_regulates_position() {
    let consts = ModelConstants::default();
    let bare = consts.no_payload_params();
    let sc = Scenario {
        truth: bare,
        initial_estimate: bare.as_vector(),
        controller: ControllerKind::PassivityFixed,
        trajectory: Trajectory::hover_at(1.0),
        ..short(3.0)
    };
    let log = run(&sc).unwrap();
    for row in &log.rows {
        assert!(row.e_c.fixed_rows::<3>(0).norm() < 1e-3, "t = {}", row.t);
    }
}

#[test]
fn larger_adaptation_gains_converge_sooner() {
    // Doubling from half the default gains keeps the estimator well damped.
    let reference = Scenario::default();
    let base = Scenario {
        estimator: reference.estimator.with_gamma(reference.estimator.gamma() * 0.5).unwrap(),
        ..reference
    };
    let fast = Scenario {
        estimator: base.estimator.with_gamma(base.estimator.gamma() * 2.0).unwrap(),
        ..base.clone()
    };
    let t_base = summarize(&base, &run(&base).unwrap()).convergence_time.unwrap();
    let t_fast = summarize(&fast, &run(&fast).unwrap()).convergence_time.unwrap();
    assert!(t_fast < t_base, "{t_fast} vs {t_base}");
}

#[test]
fn compare_is_symmetric_for_identical_scenarios() {
    let sc = short(0.3);
    let cmp = compare(&[sc.clone(), sc]).unwrap();
    assert_eq!(cmp.summaries[0], cmp.summaries[1]);
}

#[test]
fn compare_rejects_mismatched_truth() {
    let a = short(0.1);
    let b = Scenario {
        truth: UnknownParams::from_mass_and_com(0.3, 0.1),
        ..a.clone()
    };
    assert!(matches!(compare(&[a.clone(), b]), Err(Error::ComparisonMismatch(_))));
    assert!(matches!(compare(&[a]), Err(Error::ComparisonMismatch(_))));
}

#[test]
fn divergence_reports_time_and_partial_log() {
    // Too coarse a hold for the stiff elbow mode: the loop goes unstable.
    let sc = Scenario {
        dt: 5e-3,
        ..short(5.0)
    };
    match run(&sc) {
        Err(Error::Diverged { time, log, .. }) => {
            assert!(time > 0.0);
            assert_eq!(log.len(), (time / sc.dt).round() as usize);
        }
        other => panic!("expected divergence, got {other:?}"),
    }
}

#[test]
fn asmc_reports_its_own_mass_estimate() {
    let sc = Scenario {
        controller: ControllerKind::Asmc,
        ..short(0.5)
    };
    let log = run(&sc).unwrap();
    let last = log.last().unwrap();
    assert!((last.m_hat[1] - last.m_hat[0] * sc.consts.l2 / 2.0).abs() < 1e-12);
    assert_ne!(last.m_hat, last.estimator_m_hat);
}
