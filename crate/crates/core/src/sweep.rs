//! Scalarization sweep: minimize the weighted-sum objective independently on a
//! fixed lattice of weights. Supplies the reference set for GD/IGD on problems
//! without a closed-form Pareto map, and the fit-once baseline.
//!
//! This stands in for an evolutionary reference front. It is deterministic,
//! so reported GD/IGD values are comparable in magnitude to evolutionary
//! references but not identical to them.

use serde::Serialize;

use crate::bezier::{fit_least_squares, BezierSimplex};
use crate::error::{Error, Result};
use crate::metrics::PointSet;
use crate::problems::Problem;
use crate::simplex::{lattice_weights, MultiIndexSet, WeightVector};

pub const GRADIENT_TOLERANCE: f64 = 1e-8;
pub const MAX_STEPS: usize = 100_000;
const ARMIJO: f64 = 1e-4;
const MIN_STEP: f64 = 1e-30;
const RESOLUTION: f64 = 4.0 * f64::EPSILON;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub weight: WeightVector,
    pub x: Vec<f64>,
    pub gradient_norm: f64,
    pub steps: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Gradient descent on `sum_m t_m f_m` from the weighted mean of the
/// per-objective minimizers, with backtracking step sizes, until the gradient
/// norm drops below `tolerance` or `max_steps` steps are taken.
///
/// Weighted sums of skew problems can be minimized at a nonsmooth center
/// (an objective with exponent below one has unbounded slope there). Such
/// runs stop next to the center once no step makes progress and are
/// reported as not converged.
pub fn minimize_scalarized(
    problem: &Problem,
    t: &WeightVector,
    tolerance: f64,
    max_steps: usize,
) -> Result<SweepPoint> {
    let objective = problem.scalarize(t.clone())?;
    let anchors = problem.anchors();
    let mut x = vec![0.0; problem.variables()];
    for (m, a) in anchors.iter().enumerate() {
        for (xi, ai) in x.iter_mut().zip(a) {
            *xi += t[m] * ai;
        }
    }
    let mut value = objective.value(&x)?;
    let mut grad = objective.gradient(&x)?;
    let mut step: f64 = 1.0;
    let mut steps = 0;
    while norm(&grad) >= tolerance && steps < max_steps {
        let g2 = grad.iter().map(|g| g * g).sum::<f64>();
        step = (step * 2.0).min(1e6);
        let gnorm = g2.sqrt();
        let mut accepted = None;
        while step >= MIN_STEP {
            let trial: Vec<f64> = x.iter().zip(&grad).map(|(xi, gi)| xi - step * gi).collect();
            let v = objective.value(&trial)?;
            if v <= value - ARMIJO * step * g2 {
                accepted = Some((trial, v, None));
                break;
            }
            // Close to a minimizer the decrease drops below the resolution of
            // the objective. Switch to a secant step on the directional
            // derivative and accept it if it shrinks the gradient.
            if v <= value + RESOLUTION * value.abs() {
                let g_trial = objective.gradient(&trial)?;
                let denom = g2 - dot(&g_trial, &grad);
                if denom > 0.0 {
                    let secant = step * g2 / denom;
                    let cand: Vec<f64> = x.iter().zip(&grad).map(|(xi, gi)| xi - secant * gi).collect();
                    let g_cand = objective.gradient(&cand)?;
                    if norm(&g_cand) < gnorm {
                        let v_cand = objective.value(&cand)?;
                        step = secant;
                        accepted = Some((cand, v_cand, Some(g_cand)));
                        break;
                    }
                }
            }
            step *= 0.5;
        }
        let Some((next, v, g)) = accepted else { break };
        x = next;
        value = v;
        grad = match g {
            Some(g) => g,
            None => objective.gradient(&x)?,
        };
        steps += 1;
    }
    let gradient_norm = norm(&grad);
    Ok(SweepPoint {
        weight: t.clone(),
        x,
        gradient_norm,
        steps,
        converged: gradient_norm < tolerance,
    })
}

/// Minimizes the scalarized problem at every lattice weight (largest lattice
/// with at most `max_points` points).
pub fn sweep(problem: &Problem, max_points: usize) -> Result<Vec<SweepPoint>> {
    let weights = lattice_weights(problem.objectives(), max_points)?;
    let run = |t: &WeightVector| minimize_scalarized(problem, t, GRADIENT_TOLERANCE, MAX_STEPS);
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        weights.par_iter().map(run).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        weights.iter().map(run).collect()
    }
}

/// Reference set for GD/IGD. Every sweep point is kept, converged or not;
/// points that stall do so next to a nonsmooth individual minimizer.
#[derive(Debug, Clone)]
pub struct ValidationSet {
    pub points: PointSet,
    pub non_converged: usize,
}

pub fn validation_set(problem: &Problem, max_points: usize) -> Result<ValidationSet> {
    let swept = sweep(problem, max_points)?;
    let non_converged = swept.iter().filter(|p| !p.converged).count();
    let points = PointSet::new(
        format!("{}-sweep", problem.name()),
        swept.into_iter().map(|p| p.x).collect(),
    )?;
    Ok(ValidationSet {
        points,
        non_converged,
    })
}

#[derive(Debug, Clone)]
pub struct BaselineFit {
    pub model: BezierSimplex,
    pub lattice_points: usize,
    pub used_points: usize,
    pub non_converged: Vec<WeightVector>,
}

/// Sweep `population` lattice weights, then fit one degree-`degree` Bezier
/// simplex to the converged minimizers.
pub fn baseline(problem: &Problem, population: usize, degree: u32) -> Result<BaselineFit> {
    let basis = MultiIndexSet::new(problem.objectives(), degree)
        .map_err(|e| Error::Config(e.to_string()))?;
    let swept = match sweep(problem, population) {
        Ok(s) => s,
        Err(Error::Domain(_)) => {
            return Err(Error::InsufficientPoints {
                have: 0,
                need: basis.len(),
            })
        }
        Err(e) => return Err(e),
    };
    let lattice_points = swept.len();
    let (good, bad): (Vec<_>, Vec<_>) = swept.into_iter().partition(|p| p.converged);
    if good.len() < basis.len() {
        return Err(Error::InsufficientPoints {
            have: good.len(),
            need: basis.len(),
        });
    }
    let ts: Vec<WeightVector> = good.iter().map(|p| p.weight.clone()).collect();
    let xs: Vec<Vec<f64>> = good.iter().map(|p| p.x.clone()).collect();
    let model = fit_least_squares(&basis, &ts, &xs)?;
    Ok(BaselineFit {
        model,
        lattice_points,
        used_points: good.len(),
        non_converged: bad.into_iter().map(|p| p.weight).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{scaled_med, scaled_med_pareto, skew_mmed, skew_mmmd_default};

    #[test]
    fn recovers_scaled_med_map() {
        let p = scaled_med();
        for t in lattice_weights(3, 30).unwrap() {
            let sp = minimize_scalarized(&p, &t, 1e-10, MAX_STEPS).unwrap();
            assert!(sp.converged, "{:?} {} {}", sp.weight, sp.gradient_norm, sp.steps);
            let exact = scaled_med_pareto(&t);
            for l in 0..3 {
                assert!((sp.x[l] - exact[l]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn skew_sweeps_are_stationary_away_from_vertices() {
        for p in [skew_mmed(3).unwrap(), skew_mmmd_default(3).unwrap()] {
            let pts = sweep(&p, 100).unwrap();
            assert_eq!(pts.len(), 91);
            for sp in &pts {
                if !sp.converged {
                    // stalled runs sit on a cusp at one of the centers
                    let near = p.anchors().iter().any(|c| {
                        c.iter().zip(&sp.x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() < 1e-6
                    });
                    assert!(near, "{} at {:?}: {:?} grad {}", p.name(), sp.weight, sp.x, sp.gradient_norm);
                }
                // the minimizer of each objective's weighted sum stays near the simplex of centers
                assert!(sp.x.iter().all(|v| (-0.5..1.5).contains(v)));
            }
        }
    }

    #[test]
    fn baseline_needs_enough_points() {
        let p = scaled_med();
        let fit = baseline(&p, 10, 3).unwrap();
        assert_eq!(fit.used_points, 10);
        assert!(matches!(
            baseline(&p, 9, 3),
            Err(Error::InsufficientPoints { have: 6, need: 10 })
        ));
        assert!(matches!(baseline(&p, 2, 3), Err(Error::InsufficientPoints { .. })));
    }
}
