//! CSV and JSON serialization.

use std::fs;
use std::path::{Path, PathBuf};

use holonomy::linalg::{CMatrix, C64};
use holonomy::phase::PhaseReport;
use serde_json::{json, Value};

/// 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn complex_json(z: C64) -> Value {
    json!({ "re": z.re, "im": z.im })
}

pub fn matrix_json(m: &CMatrix) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|r| Value::Array((0..m.ncols()).map(|c| complex_json(m[(r, c)])).collect()))
            .collect(),
    )
}

/// Terminal report of one level, numbered from 1.
pub fn level_json(report: &PhaseReport) -> Value {
    let abelian = report.abelian;
    json!({
        "level": report.level + 1,
        "multiplicity": report.w.dim(),
        "trace": complex_json(report.trace),
        "abs_trace": report.trace.norm(),
        "phase": abelian.map(|a| a.total),
        "visibility": abelian.map(|a| a.visibility),
        "eta": abelian.map(|a| a.eta),
        "gamma_angle": abelian.map(|a| a.gamma),
        "dynamical_phase": report.dynamical_phase,
        "eigenvalues": report.eigenvalues.iter().map(|z| complex_json(*z)).collect::<Vec<_>>(),
        "noncyclic": matrix_json(&report.noncyclic),
        "overlap": matrix_json(&report.w.matrix),
        "holonomy": matrix_json(&report.gamma),
    })
}

#[derive(Debug)]
pub struct IoFailure(pub String);

pub fn ensure_dir(dir: &Path) -> Result<(), IoFailure> {
    fs::create_dir_all(dir).map_err(|e| IoFailure(format!("cannot create {}: {e}", dir.display())))
}

/// Writes `rows` under `header` to `dir/name` and returns the path.
pub fn write_csv(dir: &Path, name: &str, header: &[String], rows: &[Vec<String>]) -> Result<PathBuf, IoFailure> {
    ensure_dir(dir)?;
    let path = dir.join(name);
    let fail = |e: csv::Error| IoFailure(format!("cannot write {}: {e}", path.display()));
    let mut w = csv::Writer::from_path(&path).map_err(fail)?;
    w.write_record(header).map_err(fail)?;
    for row in rows {
        w.write_record(row).map_err(fail)?;
    }
    w.flush().map_err(|e| IoFailure(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

pub fn write_json(dir: &Path, name: &str, value: &Value) -> Result<PathBuf, IoFailure> {
    ensure_dir(dir)?;
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(value).expect("values are finite");
    text.push('\n');
    fs::write(&path, text).map_err(|e| IoFailure(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}
