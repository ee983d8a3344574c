//! CSV, JSON and plain-text renderings of run results. Reals are written
//! with at most 12 significant digits, shortest round-trip otherwise.

use std::io::Write;

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::matrix_lab::LabRow;
use crate::scan::ScanReport;
use crate::shooting::BifurcationReport;

pub const SCAN_COLUMNS: [&str; 7] =
    ["r0", "multiplicity", "signature", "regular", "gamma_min_eig", "gamma_max_eig", "forms_rel_disagreement"];

/// Rounds to 12 significant digits and prints the shortest decimal that
/// reads back to the rounded value.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

pub fn fmt_real(x: f64) -> String {
    let r = round12(x);
    if r == 0.0 {
        return "0".into();
    }
    format!("{r}")
}

fn io_err(e: impl std::fmt::Display) -> Error {
    Error::Config(format!("write failed: {e}"))
}

fn write_rows<W: Write>(out: W, header: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(io_err)?;
    for row in rows {
        w.write_record(&row).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn write_scan_csv<W: Write>(report: &ScanReport, out: W) -> Result<()> {
    let rows = report
        .crossings
        .iter()
        .map(|c| {
            vec![
                fmt_real(c.r0),
                c.multiplicity.to_string(),
                c.signature.to_string(),
                c.regular.to_string(),
                fmt_real(c.gamma_min_eig),
                fmt_real(c.gamma_max_eig),
                fmt_real(c.forms_rel_disagreement),
            ]
        })
        .collect();
    write_rows(out, &SCAN_COLUMNS, rows)
}

pub fn write_lab_csv<W: Write>(rows: &[LabRow], out: W) -> Result<()> {
    let body = rows
        .iter()
        .map(|r| {
            vec![
                r.seed.to_string(),
                r.d.to_string(),
                r.n_crossings.to_string(),
                r.lhs.to_string(),
                r.rhs.to_string(),
                r.holds.to_string(),
            ]
        })
        .collect();
    write_rows(out, &["seed", "d", "n_crossings", "lhs", "rhs", "holds"], body)
}

pub fn write_bifurcation_csv<W: Write>(report: &BifurcationReport, out: W) -> Result<()> {
    let body = report
        .points
        .iter()
        .map(|p| vec![fmt_real(p.s), p.k.to_string(), fmt_real(p.r), fmt_real(p.amplitude)])
        .collect();
    write_rows(out, &["s", "k", "r", "amplitude"], body)
}

fn round_value(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round12(n.as_f64().unwrap_or(f64::NAN));
            serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_value).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_value(v))).collect()),
        other => other,
    }
}

/// Pretty JSON with reals rounded to 12 significant digits.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value).map_err(io_err)?;
    serde_json::to_string_pretty(&round_value(v)).map_err(io_err)
}

pub fn scan_table(report: &ScanReport) -> String {
    let mut s = String::new();
    s.push_str(&format!(
        "{:>16} {:>4} {:>5} {:>8} {:>16} {:>16} {:>12}\n",
        "r0", "m", "sgn", "regular", "gamma_min", "gamma_max", "disagree"
    ));
    for c in &report.crossings {
        s.push_str(&format!(
            "{:>16} {:>4} {:>5} {:>8} {:>16} {:>16} {:>12}\n",
            fmt_real(c.r0),
            c.multiplicity,
            c.signature,
            c.regular,
            format!("{:.6e}", c.gamma_min_eig),
            format!("{:.6e}", c.gamma_max_eig),
            format!("{:.2e}", c.forms_rel_disagreement),
        ));
    }
    s.push_str(&format!(
        "morse index at r = 1: {}   sum of multiplicities: {}   identity {}\n",
        report.smale_lhs,
        report.smale_rhs,
        if report.smale_holds && report.stepwise_holds { "holds" } else { "FAILS" }
    ));
    s.push_str(&format!("bifurcation instants at least: {}\n", report.bifurcation_lower_bound));
    for w in &report.warnings {
        s.push_str(&format!("warning: {w}\n"));
    }
    s
}
