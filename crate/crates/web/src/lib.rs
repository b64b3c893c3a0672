//! Browser bindings for the demo page in `www/`. Every export returns a JSON
//! string; the native functions behind them are usable from Rust as well.

use bezier_mopt::diagnostics::{median, perturbation_experiment};
use bezier_mopt::metrics;
use bezier_mopt::simplex::{sample_uniform_simplex, MultiIndexSet};
use bezier_mopt::{run_surface_gd, BezierSimplex, Problem, Result, SolverConfig, WeightVector};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Weights `(i, j, H - i - j) / H` of a triangular grid, row by row, plus the
/// triangles connecting them.
pub fn triangle_grid(divisions: usize) -> (Vec<WeightVector>, Vec<[usize; 3]>) {
    let h = divisions as f64;
    let mut weights = Vec::new();
    let mut start = Vec::new();
    for i in 0..=divisions {
        start.push(weights.len());
        for j in 0..=divisions - i {
            let t = vec![i as f64 / h, j as f64 / h, (divisions - i - j) as f64 / h];
            weights.push(WeightVector::new(t).expect("grid weight"));
        }
    }
    let mut triangles = Vec::new();
    for i in 0..divisions {
        let row = divisions - i;
        for j in 0..row {
            let a = start[i] + j;
            let b = start[i + 1] + j;
            triangles.push([a, a + 1, b]);
            if j + 1 < row {
                triangles.push([a + 1, b + 1, b]);
            }
        }
    }
    (weights, triangles)
}

fn surface(model: &BezierSimplex, grid: &[WeightVector]) -> Result<Vec<Vec<f64>>> {
    grid.iter().map(|t| model.evaluate(t)).collect()
}

/// Runs surface-wise gradient descent and returns the fitted surface on a
/// triangular grid, the exact Pareto set where known, the control points and
/// a per-iteration trace.
pub fn solve_json(problem: &str, samples: usize, iterations: usize, degree: u32, seed: u64) -> Result<Value> {
    let problem = Problem::from_name(problem)?;
    let config = SolverConfig {
        samples,
        iterations,
        degree,
        seed,
        ..Default::default()
    };
    let (model, record) = run_surface_gd(&problem, &config)?;
    let (grid, triangles) = triangle_grid(16);
    let exact: Option<Vec<Vec<f64>>> = if problem.has_pareto_map() {
        Some(
            grid.iter()
                .map(|t| problem.pareto_map(t).map(|x| x.expect("map exists")))
                .collect::<Result<_>>()?,
        )
    } else {
        None
    };
    let mse = if problem.has_pareto_map() {
        Some(metrics::mse(&model, &problem, 2000, seed)?)
    } else {
        None
    };
    let trace: Vec<Value> = record
        .iterations
        .iter()
        .map(|r| json!([r.k, r.delta_p_norm, r.max_gradient_norm]))
        .collect();
    Ok(json!({
        "problem": problem.name(),
        "surface": surface(&model, &grid)?,
        "exact": exact,
        "triangles": triangles,
        "weights": grid,
        "control_points": model.to_document().control_points,
        "anchors": problem.anchors(),
        "mse": mse,
        "trace": trace,
    }))
}

/// Uniform weights on the 2-simplex and the Bernstein basis values of degree
/// `degree` at each.
pub fn sample_simplex_json(n: usize, degree: u32, seed: u64) -> Result<Value> {
    let basis = MultiIndexSet::new(3, degree)?;
    let ts = sample_uniform_simplex(3, n, seed)?;
    let mut max_partition_error: f64 = 0.0;
    let mut max_norm: f64 = 0.0;
    let mut bases = Vec::with_capacity(n);
    for t in &ts {
        let z = basis.bernstein_vector(t)?;
        max_partition_error = max_partition_error.max((z.iter().sum::<f64>() - 1.0).abs());
        max_norm = max_norm.max(z.iter().map(|v| v * v).sum::<f64>().sqrt());
        bases.push(z);
    }
    Ok(json!({
        "weights": ts,
        "indices": basis.indices(),
        "basis": bases,
        "max_partition_error": max_partition_error,
        "max_basis_norm": max_norm,
    }))
}

/// One-sample perturbation at iteration `k` of a `iterations`-long run on
/// scaled-MED, for each sample size in `samples`.
pub fn perturb_json(samples: &[usize], iterations: usize, k: usize, repeats: usize, seed: u64) -> Result<Value> {
    let problem = Problem::from_name("scaled-med")?;
    let mut rows = Vec::new();
    for &n in samples {
        let config = SolverConfig {
            samples: n,
            iterations,
            seed,
            ..Default::default()
        };
        let reports = perturbation_experiment(&problem, &config, k, repeats)?;
        let gaps: Vec<f64> = reports.iter().map(|r| r.sup_gap).collect();
        rows.push(json!({
            "N": n,
            "sup_gaps": gaps,
            "median_sup_gap": median(&gaps),
            "frob_gaps": reports.iter().map(|r| r.frob_gap).collect::<Vec<_>>(),
        }));
    }
    Ok(json!({ "k": k, "iterations": iterations, "rows": rows }))
}

fn to_js(result: Result<Value>) -> std::result::Result<String, JsError> {
    result.map(|v| v.to_string()).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn solve(problem: &str, samples: usize, iterations: usize, degree: u32, seed: u64) -> std::result::Result<String, JsError> {
    to_js(solve_json(problem, samples, iterations, degree, seed))
}

#[wasm_bindgen(js_name = sampleSimplex)]
pub fn sample_simplex(n: usize, degree: u32, seed: u64) -> std::result::Result<String, JsError> {
    to_js(sample_simplex_json(n, degree, seed))
}

#[wasm_bindgen]
pub fn perturb(samples: Vec<usize>, iterations: usize, k: usize, repeats: usize, seed: u64) -> std::result::Result<String, JsError> {
    to_js(perturb_json(&samples, iterations, k, repeats, seed))
}

#[wasm_bindgen]
pub fn version() -> String {
    bezier_mopt::VERSION.to_string()
}
