//! Approximation-quality metrics in decision space.

use crate::bezier::BezierSimplex;
use crate::error::{Error, Result};
use crate::problems::Problem;
use crate::simplex::{sample_uniform_simplex, WeightVector};

/// A nonempty finite set of points sharing one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    points: Vec<Vec<f64>>,
    label: String,
}

impl PointSet {
    pub fn new(label: impl Into<String>, points: Vec<Vec<f64>>) -> Result<Self> {
        let label = label.into();
        let dim = points
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::domain(format!("point set {label:?} is empty")))?;
        if dim == 0 || points.iter().any(|p| p.len() != dim) {
            return Err(Error::domain(format!(
                "point set {label:?} must have a uniform nonzero dimension"
            )));
        }
        Ok(PointSet { points, label })
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Images of `n` seeded uniform weights under `model`.
    pub fn from_model(model: &BezierSimplex, n: usize, seed: u64) -> Result<Self> {
        let ts = sample_uniform_simplex(model.objectives(), n, seed)?;
        let pts = ts
            .iter()
            .map(|t| model.evaluate(t))
            .collect::<Result<Vec<_>>>()?;
        PointSet::new("model", pts)
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn mean_nearest(from: &PointSet, to: &PointSet) -> Result<f64> {
    if from.dim() != to.dim() {
        return Err(Error::domain(format!(
            "point sets {:?} and {:?} differ in dimension ({} vs {})",
            from.label,
            to.label,
            from.dim(),
            to.dim()
        )));
    }
    let total: f64 = from
        .points
        .iter()
        .map(|x| {
            to.points
                .iter()
                .map(|y| distance(x, y))
                .fold(f64::INFINITY, f64::min)
        })
        .sum();
    Ok(total / from.len() as f64)
}

/// Generational distance: mean distance from each point of `x` to its nearest
/// neighbour in `y`.
pub fn gd(x: &PointSet, y: &PointSet) -> Result<f64> {
    mean_nearest(x, y)
}

/// Inverted generational distance: mean distance from each point of `y` to
/// its nearest neighbour in `x`.
pub fn igd(x: &PointSet, y: &PointSet) -> Result<f64> {
    mean_nearest(y, x)
}

/// `||b(t|P) - x*(t)||_2`.
pub fn loss(model: &BezierSimplex, problem: &Problem, t: &WeightVector) -> Result<f64> {
    let target = problem.pareto_map(t)?.ok_or_else(|| {
        Error::UnsupportedMetric(format!("{} has no analytic Pareto map", problem.name()))
    })?;
    loss_against(model, t, &target)
}

pub fn loss_against(model: &BezierSimplex, t: &WeightVector, target: &[f64]) -> Result<f64> {
    let b = model.evaluate(t)?;
    if b.len() != target.len() {
        return Err(Error::domain("model and Pareto map dimensions differ"));
    }
    Ok(distance(&b, target))
}

/// Mean squared loss over `n` seeded uniform weights.
pub fn mse(model: &BezierSimplex, problem: &Problem, n: usize, seed: u64) -> Result<f64> {
    if !problem.has_pareto_map() {
        return Err(Error::UnsupportedMetric(format!(
            "mse needs an analytic Pareto map; {} has none",
            problem.name()
        )));
    }
    let ts = sample_uniform_simplex(model.objectives(), n, seed)?;
    let mut total = 0.0;
    for t in &ts {
        total += loss(model, problem, t)?.powi(2);
    }
    Ok(total / n as f64)
}
