use nalgebra::Vector3;

use super::{run, Scenario, SimLog};
use crate::error::{Error, Result};

/// Fraction of the run after which tracking errors are scored.
const TRACKING_WINDOW: f64 = 0.2;
/// Fraction of the run after which parameter errors are averaged.
const ESTIMATE_WINDOW: f64 = 0.5;
/// Relative band on `m2` that counts as converged.
const CONVERGENCE_BAND: f64 = 0.05;

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioSummary {
    pub controller: &'static str,
    /// RMS of the x, y, z tracking errors over the scoring window (m).
    pub rms_tracking: Vector3<f64>,
    /// RMS of the position-error norm over the scoring window (m).
    pub rms_position: f64,
    pub final_m_hat: Vector3<f64>,
    /// `(t, m_hat - m)` at every logged step.
    pub param_error: Vec<(f64, Vector3<f64>)>,
    /// Mean `|m2_hat - m2|` over the second half of the run (kg).
    pub mean_abs_m2_error: f64,
    /// First time after which `|m2_hat - m2| < 5 % m2` holds to the end.
    pub convergence_time: Option<f64>,
    pub tracking_window_start: f64,
    pub estimate_window_start: f64,
}

pub fn summarize(scenario: &Scenario, log: &SimLog) -> ScenarioSummary {
    let truth = scenario.truth.as_vector();
    let tracking_from = TRACKING_WINDOW * scenario.duration;
    let estimate_from = ESTIMATE_WINDOW * scenario.duration;

    let mut sq = Vector3::zeros();
    let mut n_track = 0usize;
    let mut abs_m2 = 0.0;
    let mut n_est = 0usize;
    for row in &log.rows {
        if row.t >= tracking_from - 1e-9 {
            let e = row.e_c.fixed_rows::<3>(0);
            sq += e.component_mul(&e);
            n_track += 1;
        }
        if row.t >= estimate_from - 1e-9 {
            abs_m2 += (row.m_hat[0] - truth[0]).abs();
            n_est += 1;
        }
    }
    let rms_tracking = if n_track > 0 {
        (sq / n_track as f64).map(f64::sqrt)
    } else {
        Vector3::zeros()
    };
    let rms_position = if n_track > 0 {
        (sq.sum() / n_track as f64).sqrt()
    } else {
        0.0
    };

    let band = CONVERGENCE_BAND * truth[0];
    let mut convergence_time = None;
    for row in log.rows.iter().rev() {
        if (row.m_hat[0] - truth[0]).abs() < band {
            convergence_time = Some(row.t);
        } else {
            break;
        }
    }

    ScenarioSummary {
        controller: scenario.controller.name(),
        rms_tracking,
        rms_position,
        final_m_hat: log.last().map(|r| r.m_hat).unwrap_or(scenario.initial_estimate),
        param_error: log.rows.iter().map(|r| (r.t, r.m_hat - truth)).collect(),
        mean_abs_m2_error: if n_est > 0 { abs_m2 / n_est as f64 } else { f64::NAN },
        convergence_time,
        tracking_window_start: tracking_from,
        estimate_window_start: estimate_from,
    }
}

#[derive(Clone, Debug)]
pub struct Comparison {
    pub logs: Vec<SimLog>,
    pub summaries: Vec<ScenarioSummary>,
}

fn check_compatible(scenarios: &[Scenario]) -> Result<()> {
    if scenarios.len() < 2 {
        return Err(Error::ComparisonMismatch(
            "at least two scenarios are required".into(),
        ));
    }
    let first = &scenarios[0];
    for (i, s) in scenarios.iter().enumerate().skip(1) {
        if s.truth != first.truth {
            return Err(Error::ComparisonMismatch(format!(
                "scenario {i} has payload {:?}, scenario 0 has {:?}",
                s.truth, first.truth
            )));
        }
        if s.trajectory != first.trajectory {
            return Err(Error::ComparisonMismatch(format!(
                "scenario {i} follows a different trajectory"
            )));
        }
    }
    Ok(())
}

/// Runs the scenarios concurrently and summarises each.
pub fn compare(scenarios: &[Scenario]) -> Result<Comparison> {
    check_compatible(scenarios)?;
    let results: Vec<Result<SimLog>> = std::thread::scope(|scope| {
        let handles: Vec<_> = scenarios
            .iter()
            .map(|s| scope.spawn(move || run(s)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("simulation thread panicked"))
            .collect()
    });
    let mut logs = Vec::with_capacity(scenarios.len());
    for r in results {
        logs.push(r?);
    }
    let summaries = scenarios
        .iter()
        .zip(&logs)
        .map(|(s, l)| summarize(s, l))
        .collect();
    Ok(Comparison { logs, summaries })
}
