//! Human-readable summaries, comparison tables and charts.

use std::fmt::Write;

use amest::estimator::{extract_payload, DEFAULT_IDENTIFIABLE_MASS};
use amest::model::idx;
use amest::sim::{summarize, Scenario, ScenarioSummary, SimLog};

use crate::svg::{chart, Panel, Series, PALETTE};

fn opt_time(t: Option<f64>) -> String {
    t.map(|t| format!("{t:.3} s")).unwrap_or_else(|| "not reached".into())
}

pub fn summary(scenario: &Scenario, log: &SimLog, diverged: Option<(f64, &str)>) -> String {
    let s = summarize(scenario, log);
    let truth = scenario.truth;
    let mut out = String::new();
    let _ = writeln!(out, "controller            {}", s.controller);
    let _ = writeln!(
        out,
        "steps                 {} of {} (dt = {} s)",
        log.len(),
        scenario.steps(),
        scenario.dt
    );
    match diverged {
        Some((t, reason)) => {
            let _ = writeln!(out, "status                DIVERGED at t = {t} s: {reason}");
        }
        None => {
            let _ = writeln!(out, "status                completed");
        }
    }
    let m = s.final_m_hat;
    let _ = writeln!(out, "final m2_hat          {:.6} kg   (true {:.6})", m[0], truth.m2);
    let _ = writeln!(out, "final m3_hat          {:.6} kg m (true {:.6})", m[1], truth.m3);
    let _ = writeln!(out, "final m4_hat          {:.6} kg m^2 (true {:.6})", m[2], truth.m4);
    match extract_payload(&m, &scenario.consts, DEFAULT_IDENTIFIABLE_MASS) {
        Ok(p) => {
            let _ = writeln!(
                out,
                "payload estimate      {:.6} kg   (true {:.6})",
                p.payload_mass,
                truth.m2 - scenario.consts.m2_link
            );
            let _ = writeln!(out, "lc estimate           {:.6} m    (true {:.6})", p.lc, truth.lc());
        }
        Err(e) => {
            let _ = writeln!(out, "payload estimate      unavailable: {e}");
        }
    }
    let r = s.rms_tracking;
    let _ = writeln!(
        out,
        "rms tracking x y z    {:.6e} {:.6e} {:.6e} m (t >= {} s)",
        r[0], r[1], r[2], s.tracking_window_start
    );
    let _ = writeln!(out, "rms position error    {:.6e} m", s.rms_position);
    let _ = writeln!(
        out,
        "mean |m2_hat - m2|    {:.6e} kg (t >= {} s)",
        s.mean_abs_m2_error, s.estimate_window_start
    );
    let _ = writeln!(out, "m2 convergence (5 %)  {}", opt_time(s.convergence_time));
    if let Some(last) = log.last() {
        let _ = writeln!(out, "final V1, V2          {:.6e} {:.6e}", last.v1, last.v2);
    }
    out
}

fn series(log: &SimLog, f: impl Fn(&amest::sim::LogRow) -> f64) -> Vec<(f64, f64)> {
    log.rows.iter().map(|r| (r.t, f(r))).collect()
}

/// Desired against actual trajectories.
pub fn tracking_chart(log: &SimLog) -> String {
    let channels = [
        (idx::X, "x [m]"),
        (idx::Y, "y [m]"),
        (idx::Z, "z [m]"),
        (idx::PHI, "phi [rad]"),
        (idx::THETA, "theta [rad]"),
        (idx::ETA1, "eta1 [rad]"),
        (idx::ETA2, "eta2 [rad]"),
    ];
    let panels: Vec<Panel> = channels
        .iter()
        .map(|&(i, label)| {
            Panel::new(label)
                .with(Series::new("desired", PALETTE[1], series(log, |r| r.q[i] - r.e_c[i])).dashed())
                .with(Series::new("actual", PALETTE[0], series(log, |r| r.q[i])))
        })
        .collect();
    chart("Trajectory tracking", "time [s]", &panels)
}

const PARAM_LABELS: [&str; 3] = ["m2 [kg]", "m3 [kg m]", "m4 [kg m^2]"];

pub fn params_chart(scenario: &Scenario, log: &SimLog) -> String {
    let truth = scenario.truth.as_vector();
    let panels: Vec<Panel> = (0..3)
        .map(|k| {
            Panel::new(PARAM_LABELS[k])
                .with(Series::new("estimate", PALETTE[0], series(log, |r| r.m_hat[k])))
                .rule(truth[k], "true")
        })
        .collect();
    chart("Parameter estimates", "time [s]", &panels)
}

pub fn compare_params_chart(labels: &[String], scenario: &Scenario, logs: &[SimLog]) -> String {
    let truth = scenario.truth.as_vector();
    let panels: Vec<Panel> = (0..3)
        .map(|k| {
            let mut p = Panel::new(PARAM_LABELS[k]).rule(truth[k], "true");
            for (i, log) in logs.iter().enumerate() {
                p = p.with(Series::new(&labels[i], PALETTE[i % PALETTE.len()], series(log, |r| r.m_hat[k])));
            }
            p
        })
        .collect();
    chart("Parameter estimates", "time [s]", &panels)
}

pub fn compare_tracking_chart(labels: &[String], logs: &[SimLog]) -> String {
    let mut p = Panel::new("|position error| [m]");
    for (i, log) in logs.iter().enumerate() {
        p = p.with(Series::new(
            &labels[i],
            PALETTE[i % PALETTE.len()],
            series(log, |r| r.e_c.fixed_rows::<3>(0).norm()),
        ));
    }
    chart("Position tracking error", "time [s]", &[p])
}

/// Metric table, best `m2` estimate first.
pub fn compare_table(labels: &[String], summaries: &[ScenarioSummary]) -> String {
    let mut order: Vec<usize> = (0..summaries.len()).collect();
    order.sort_by(|&a, &b| summaries[a].mean_abs_m2_error.total_cmp(&summaries[b].mean_abs_m2_error));
    let mut out = String::from(
        "scenario,controller,rms_x,rms_y,rms_z,rms_position,final_m2,final_m3,final_m4,mean_abs_m2_error,convergence_time\n",
    );
    for i in order {
        let s = &summaries[i];
        let conv = s.convergence_time.map(|t| format!("{t:.15e}")).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{:.15e},{:.15e},{:.15e},{:.15e},{:.15e},{:.15e},{:.15e},{:.15e},{}",
            labels[i],
            s.controller,
            s.rms_tracking[0],
            s.rms_tracking[1],
            s.rms_tracking[2],
            s.rms_position,
            s.final_m_hat[0],
            s.final_m_hat[1],
            s.final_m_hat[2],
            s.mean_abs_m2_error,
            conv
        );
    }
    out
}
