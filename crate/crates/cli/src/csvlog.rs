//! CSV serialization of simulation logs.

use std::fmt::Write;

use amest::sim::{LogRow, SimLog};

/// Column names in order.
pub fn header() -> Vec<String> {
    let mut cols = vec!["t".to_string()];
    for prefix in ["q", "qd", "qhat"] {
        cols.extend((0..8).map(|i| format!("{prefix}{i}")));
    }
    cols.extend(["m2hat", "m3hat", "m4hat"].map(String::from));
    for prefix in ["tau", "ec"] {
        cols.extend((0..8).map(|i| format!("{prefix}{i}")));
    }
    cols.extend(["V1", "V2", "phi_d", "theta_d"].map(String::from));
    cols
}

pub fn row_values(row: &LogRow) -> Vec<f64> {
    let mut v = Vec::with_capacity(48);
    v.push(row.t);
    v.extend(row.q.iter());
    v.extend(row.qd.iter());
    v.extend(row.q_hat.iter());
    v.extend(row.m_hat.iter());
    v.extend(row.tau.iter());
    v.extend(row.e_c.iter());
    v.extend([row.v1, row.v2, row.phi_d, row.theta_d]);
    v
}

/// 16 significant digits in scientific notation.
fn number(out: &mut String, v: f64) {
    write!(out, "{v:.15e}").expect("write to string");
}

pub fn to_csv(log: &SimLog) -> String {
    let mut out = header().join(",");
    out.push('\n');
    for row in &log.rows {
        for (i, v) in row_values(row).into_iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            number(&mut out, v);
        }
        out.push('\n');
    }
    out
}

/// Parses text produced by [`to_csv`] into its header and numeric rows.
pub fn parse_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>), String> {
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or("empty file")?
        .split(',')
        .map(String::from)
        .collect();
    let mut rows = Vec::new();
    for (n, line) in lines.enumerate() {
        let row = line
            .split(',')
            .map(|f| f.parse::<f64>().map_err(|e| format!("line {}: {e}", n + 2)))
            .collect::<Result<Vec<_>, _>>()?;
        if row.len() != header.len() {
            return Err(format!("line {}: {} fields, expected {}", n + 2, row.len(), header.len()));
        }
        rows.push(row);
    }
    Ok((header, rows))
}
