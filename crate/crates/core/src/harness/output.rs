//! Text formats: floats at 17 significant digits, '.' decimal separator, LF
//! line endings, no locale.

use std::fmt::Write as _;

use crate::error::Error;
use crate::simplex::WeightVector;
use crate::BezierSimplex;
use crate::Result;

pub fn float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

pub fn opt_float(v: Option<f64>) -> String {
    v.map(float).unwrap_or_default()
}

/// Leading comment line carrying the tool version and the resolved config.
pub fn provenance_line(config: &serde_json::Value) -> String {
    format!("# {} config={}\n", crate::VERSION, config)
}

/// `t_1..t_M, x_1..x_L` rows for the given weights.
pub fn surface_csv(model: &BezierSimplex, ts: &[WeightVector]) -> Result<String> {
    let mut out = String::new();
    let header: Vec<String> = (1..=model.objectives())
        .map(|m| format!("t_{m}"))
        .chain((1..=model.dim()).map(|l| format!("x_{l}")))
        .collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for t in ts {
        let x = model.evaluate(t)?;
        let row: Vec<String> = t.as_slice().iter().chain(&x).map(|v| float(*v)).collect();
        let _ = writeln!(out, "{}", row.join(","));
    }
    Ok(out)
}

/// Reads a point set from CSV. Lines starting with `#` are skipped. A header
/// row is optional; when it names `x_*` columns only those are read, so the
/// output of [`surface_csv`] can be fed back directly.
pub fn read_points_csv(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .enumerate()
        .peekable();
    let mut columns: Option<Vec<usize>> = None;
    if let Some((_, first)) = lines.peek() {
        let fields: Vec<&str> = first.split(',').map(str::trim).collect();
        if fields.iter().any(|f| f.parse::<f64>().is_err()) {
            let xs: Vec<usize> = fields
                .iter()
                .enumerate()
                .filter(|(_, f)| f.starts_with("x_"))
                .map(|(i, _)| i)
                .collect();
            columns = Some(if xs.is_empty() { (0..fields.len()).collect() } else { xs });
            lines.next();
        }
    }
    let mut points = Vec::new();
    for (i, line) in lines {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let pick: Vec<usize> = columns.clone().unwrap_or_else(|| (0..fields.len()).collect());
        let mut p = Vec::with_capacity(pick.len());
        for c in pick {
            let f = fields
                .get(c)
                .ok_or_else(|| Error::Schema(format!("row {}: missing column {}", i + 1, c + 1)))?;
            let v: f64 = f
                .parse()
                .map_err(|_| Error::Schema(format!("row {}: {f:?} is not a number", i + 1)))?;
            p.push(v);
        }
        points.push(p);
    }
    if points.is_empty() {
        return Err(Error::Schema("point file has no rows".into()));
    }
    Ok(points)
}
