//! Custom operator families read from CSV.
//!
//! Generators: header `generator,row,col,re,im`, zero-based indices, one
//! row per nonzero entry; the family is `θ ↦ Σᵢ θⁱ Xᵢ`. Curve: header
//! `t,θ¹,…,θᴺ` with one column per generator and strictly increasing `t`.

use std::path::Path;

use holonomy::curve::{Curve, OperatorFamily};
use holonomy::linalg::{c64, CMatrix, HermitianMatrix};

use crate::config::{ConfigError, Custom};

fn bad(path: &Path, msg: impl std::fmt::Display) -> ConfigError {
    ConfigError(format!("{}: {msg}", path.display()))
}

fn reader(path: &Path) -> Result<csv::Reader<std::fs::File>, ConfigError> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(|e| bad(path, e))
}

pub fn read_generators(path: &Path) -> Result<Vec<HermitianMatrix>, ConfigError> {
    let mut entries = Vec::new();
    for (n, record) in reader(path)?.records().enumerate() {
        let record = record.map_err(|e| bad(path, e))?;
        if record.len() != 5 {
            return Err(bad(path, format!("row {} has {} fields, expected 5", n + 1, record.len())));
        }
        let index = |k: usize| record[k].parse::<usize>().map_err(|_| bad(path, format!("row {}: bad index '{}'", n + 1, &record[k])));
        let real = |k: usize| {
            record[k]
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| bad(path, format!("row {}: bad number '{}'", n + 1, &record[k])))
        };
        entries.push((index(0)?, index(1)?, index(2)?, c64(real(3)?, real(4)?)));
    }
    if entries.is_empty() {
        return Err(bad(path, "no generator entries"));
    }
    let count = entries.iter().map(|e| e.0).max().unwrap_or(0) + 1;
    let dim = entries.iter().map(|e| e.1.max(e.2)).max().unwrap_or(0) + 1;
    let mut mats = vec![CMatrix::zeros(dim, dim); count];
    for (g, r, c, z) in entries {
        mats[g][(r, c)] += z;
    }
    mats.into_iter()
        .enumerate()
        .map(|(g, m)| HermitianMatrix::new(m).map_err(|e| bad(path, format!("generator {g}: {e}"))))
        .collect()
}

pub fn read_curve(path: &Path, params: usize, cyclic: Option<bool>) -> Result<Curve, ConfigError> {
    let mut rdr = reader(path)?;
    let width = rdr.headers().map_err(|e| bad(path, e))?.len();
    if width != params + 1 {
        return Err(bad(path, format!("expected t and {params} parameter columns, found {width} columns")));
    }
    let mut times = Vec::new();
    let mut points = Vec::new();
    for (n, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| bad(path, e))?;
        let row = record
            .iter()
            .map(|v| v.parse::<f64>().ok().filter(|x| x.is_finite()))
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| bad(path, format!("row {}: non-numeric field", n + 1)))?;
        times.push(row[0]);
        points.push(row[1..].to_vec());
    }
    let closed = match (points.first(), points.last()) {
        (Some(a), Some(b)) => a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12),
        _ => false,
    };
    Curve::new(times, points, cyclic.unwrap_or(closed)).map_err(|e| bad(path, e))
}

pub fn load(custom: &Custom) -> Result<(OperatorFamily, Curve), ConfigError> {
    let generators = read_generators(&custom.generators)?;
    let curve = read_curve(&custom.curve, generators.len(), custom.cyclic)?;
    let family = OperatorFamily::linear(generators).map_err(|e| ConfigError(e.to_string()))?;
    Ok((family, curve))
}
