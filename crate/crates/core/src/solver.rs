//! The sample / step / refit loop that lifts a single-objective step rule to a
//! Pareto-set approximation, and its gradient-descent specialization.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::bezier::{BezierSimplex, DesignMatrix, LeastSquares};
use crate::error::{Error, Result};
use crate::problems::{Problem, ScalarizedObjective};
use crate::rng::{self, tag};
use crate::simplex::{sample_weights, MultiIndexSet, WeightVector};

/// Step size `alpha^(k)` as a function of the 1-based iteration index.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepSchedule {
    /// `alpha^(k) = 1 / k`.
    #[default]
    Harmonic,
    Constant(f64),
}

impl StepSchedule {
    pub fn alpha(&self, k: usize) -> f64 {
        match *self {
            StepSchedule::Harmonic => 1.0 / k as f64,
            StepSchedule::Constant(a) => a,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            StepSchedule::Harmonic => Ok(()),
            StepSchedule::Constant(a) if a > 0.0 && a <= 1.0 => Ok(()),
            StepSchedule::Constant(a) => Err(Error::Config(format!(
                "constant step size must lie in (0, 1], got {a}"
            ))),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "harmonic" | "1/k" => Ok(StepSchedule::Harmonic),
            other => other
                .strip_prefix("constant:")
                .unwrap_or(other)
                .parse::<f64>()
                .map(StepSchedule::Constant)
                .map_err(|_| Error::Config(format!("unknown step schedule {s:?}"))),
        }
    }
}

/// A single-objective update `x -> x'` for the scalarized loss at iteration `k`.
/// Implementations must be pure in `(x, t, k)`.
pub trait StepRule: Sync {
    fn step(&self, x: &[f64], objective: &ScalarizedObjective<'_>, k: usize) -> Result<Vec<f64>>;
}

/// One plain gradient step `x - alpha^(k) J_f(x)^T t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientStep {
    pub schedule: StepSchedule,
}

pub fn gradient_step_rule(schedule: StepSchedule) -> GradientStep {
    GradientStep { schedule }
}

impl StepRule for GradientStep {
    fn step(&self, x: &[f64], objective: &ScalarizedObjective<'_>, k: usize) -> Result<Vec<f64>> {
        let alpha = self.schedule.alpha(k);
        let g = objective.gradient(x)?;
        Ok(x.iter().zip(&g).map(|(xi, gi)| xi - alpha * gi).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub enum InitialControl {
    #[default]
    Zero,
    Matrix(DMatrix<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Weights drawn per iteration (`N`).
    pub samples: usize,
    /// Number of iterations (`K`).
    pub iterations: usize,
    pub degree: u32,
    pub schedule: StepSchedule,
    pub seed: u64,
    pub initial: InitialControl,
    /// Resampling attempts allowed when an iteration's design is singular.
    pub resample_retries: usize,
    /// Keep each iteration's weights in the trace.
    pub record_weights: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            samples: 30,
            iterations: 1000,
            degree: 3,
            schedule: StepSchedule::Harmonic,
            seed: 0,
            initial: InitialControl::Zero,
            resample_retries: 5,
            record_weights: false,
        }
    }
}

impl SolverConfig {
    /// Checks the configuration against `problem` and returns its basis.
    pub fn validate(&self, problem: &Problem) -> Result<MultiIndexSet> {
        if self.iterations == 0 {
            return Err(Error::Config("iteration count K must be at least 1".into()));
        }
        if self.degree == 0 {
            return Err(Error::Config("degree D must be at least 1".into()));
        }
        self.schedule.validate()?;
        let basis = MultiIndexSet::new(problem.objectives(), self.degree)
            .map_err(|e| Error::Config(e.to_string()))?;
        if self.samples < basis.len() {
            return Err(Error::Config(format!(
                "N = {} is too small: a degree-{} Bezier simplex with M = {} has {} control points, so N >= {} is required",
                self.samples,
                self.degree,
                problem.objectives(),
                basis.len(),
                basis.len()
            )));
        }
        if let InitialControl::Matrix(p) = &self.initial {
            if p.shape() != (basis.len(), problem.variables()) {
                return Err(Error::Config(format!(
                    "initial control matrix must be {}x{}, got {}x{}",
                    basis.len(),
                    problem.variables(),
                    p.nrows(),
                    p.ncols()
                )));
            }
        }
        Ok(basis)
    }
}

/// Replaces one weight of one iteration's sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    /// 1-based iteration.
    pub iteration: usize,
    pub index: usize,
    pub replacement: WeightVector,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub k: usize,
    pub alpha: f64,
    /// Singular samples discarded before this iteration's fit.
    pub resamples: usize,
    /// `lambda_min(Z^T Z)`.
    pub lambda_min: f64,
    /// `||(Z^T Z)^{-1}||_F`.
    pub inverse_gram_frobenius: f64,
    /// `||Z^T G||_F`.
    pub ztg_norm: f64,
    /// `||P^(k+1) - P^(k)||_F`.
    pub delta_p_norm: f64,
    /// Largest scalarized-gradient norm `||J_f(b_n)^T t_n||` in the batch.
    pub max_gradient_norm: f64,
    /// Largest `||z(t_n)||_2` in the batch.
    pub max_basis_norm: f64,
    /// Largest `|sum_i z_i(t_n) - 1|` in the batch.
    pub max_partition_error: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<WeightVector>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub iterations: Vec<IterationRecord>,
    pub seed: u64,
    pub samples: usize,
    pub model: BezierSimplex,
    /// Not available on targets without a monotonic clock.
    pub wall_clock_secs: Option<f64>,
}

impl RunRecord {
    pub fn max_gradient_norm(&self) -> f64 {
        self.iterations
            .iter()
            .map(|r| r.max_gradient_norm)
            .fold(0.0, f64::max)
    }

    pub fn min_lambda(&self) -> f64 {
        self.iterations
            .iter()
            .map(|r| r.lambda_min)
            .fold(f64::INFINITY, f64::min)
    }

    /// Trace document: one object per iteration plus a footer.
    pub fn to_json(&self, config_echo: serde_json::Value) -> String {
        let doc = serde_json::json!({
            "iterations": self.iterations,
            "footer": {
                "tool": crate::VERSION,
                "seed": self.seed,
                "samples": self.samples,
                "iterations": self.iterations.len(),
                "wall_clock_secs": self.wall_clock_secs,
                "model": self.model.to_document(),
                "config": config_echo,
            }
        });
        serde_json::to_string_pretty(&doc).expect("trace serializes")
    }
}

enum Update<'a> {
    /// Step every sampled point with the rule, then refit all control points.
    Refit(&'a dyn StepRule),
    /// `P <- P - alpha (Z^T Z)^{-1} Z^T G`.
    ControlStep,
}

/// Runs the generic loop with an arbitrary step rule.
pub fn run_generic(
    problem: &Problem,
    rule: &dyn StepRule,
    config: &SolverConfig,
) -> Result<(BezierSimplex, RunRecord)> {
    run_loop(problem, config, Update::Refit(rule), None)
}

/// Surface-wise gradient descent, applying the control-point update directly.
pub fn run_surface_gd(problem: &Problem, config: &SolverConfig) -> Result<(BezierSimplex, RunRecord)> {
    run_loop(problem, config, Update::ControlStep, None)
}

/// Surface-wise gradient descent with one weight of one iteration replaced.
pub fn run_surface_gd_perturbed(
    problem: &Problem,
    config: &SolverConfig,
    perturbation: &Perturbation,
) -> Result<(BezierSimplex, RunRecord)> {
    if perturbation.iteration == 0
        || perturbation.iteration > config.iterations
        || perturbation.index >= config.samples
    {
        return Err(Error::Config(format!(
            "perturbation at iteration {} index {} is outside K = {}, N = {}",
            perturbation.iteration, perturbation.index, config.iterations, config.samples
        )));
    }
    if perturbation.replacement.dim() != problem.objectives() {
        return Err(Error::domain("perturbation weight has the wrong dimension"));
    }
    run_loop(problem, config, Update::ControlStep, Some(perturbation))
}

/// The weights the solver draws at iteration `k` on resampling attempt `attempt`.
pub fn iteration_weights(objectives: usize, config: &SolverConfig, k: usize, attempt: usize) -> Vec<WeightVector> {
    let mut r = rng::stream(config.seed, &[tag::ITERATION, k as u64, attempt as u64]);
    sample_weights(objectives, config.samples, &mut r)
}

fn run_loop(
    problem: &Problem,
    config: &SolverConfig,
    update: Update<'_>,
    perturbation: Option<&Perturbation>,
) -> Result<(BezierSimplex, RunRecord)> {
    let basis = config.validate(problem)?;
    #[cfg(not(target_arch = "wasm32"))]
    let started = std::time::Instant::now();

    let objectives = problem.objectives();
    let dim = problem.variables();
    let mut control = match &config.initial {
        InitialControl::Zero => DMatrix::zeros(basis.len(), dim),
        InitialControl::Matrix(p) => p.clone(),
    };
    let mut trace = Vec::with_capacity(config.iterations);

    for k in 1..=config.iterations {
        let alpha = config.schedule.alpha(k);
        let mut attempt = 0;
        let (ts, design, ls) = loop {
            let mut ts = iteration_weights(objectives, config, k, attempt);
            if let Some(p) = perturbation.filter(|p| p.iteration == k) {
                ts[p.index] = p.replacement.clone();
            }
            let design = DesignMatrix::new(&ts, &basis)?;
            match LeastSquares::new(&design) {
                Ok(ls) => break (ts, design, ls),
                Err(Error::SingularFit { sigma_min, .. }) => {
                    if attempt >= config.resample_retries {
                        return Err(Error::SolverAbort {
                            iteration: k,
                            attempts: attempt + 1,
                            sigma_min,
                        });
                    }
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        };

        let z = design.matrix();
        let surface = z * &control;
        let mut grads = DMatrix::zeros(ts.len(), dim);
        let mut stepped = match update {
            Update::Refit(_) => Some(DMatrix::zeros(ts.len(), dim)),
            Update::ControlStep => None,
        };
        let mut max_gradient_norm = 0.0f64;
        let mut max_basis_norm = 0.0f64;
        let mut max_partition_error = 0.0f64;
        for (n, t) in ts.iter().enumerate() {
            let b: Vec<f64> = surface.row(n).iter().copied().collect();
            let g = problem.weighted_gradient(&b, t)?;
            let gnorm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            max_gradient_norm = max_gradient_norm.max(gnorm);
            for (l, v) in g.iter().enumerate() {
                grads[(n, l)] = *v;
            }
            let zrow = z.row(n);
            max_basis_norm = max_basis_norm.max(zrow.norm());
            max_partition_error = max_partition_error.max((zrow.sum() - 1.0).abs());
            if let (Update::Refit(rule), Some(x)) = (&update, stepped.as_mut()) {
                let objective = problem.scalarize(t.clone())?;
                let next = rule.step(&b, &objective, k)?;
                if next.len() != dim {
                    return Err(Error::domain("step rule changed the point dimension"));
                }
                for (l, v) in next.into_iter().enumerate() {
                    x[(n, l)] = v;
                }
            }
        }

        let next = match stepped {
            Some(x) => ls.solve(&x),
            None => &control - ls.solve(&grads) * alpha,
        };
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::SolverAbort {
                iteration: k,
                attempts: attempt + 1,
                sigma_min: ls.sigma_min(),
            });
        }
        let delta_p_norm = (&next - &control).norm();
        trace.push(IterationRecord {
            k,
            alpha,
            resamples: attempt,
            lambda_min: ls.gram_lambda_min(),
            inverse_gram_frobenius: ls.inverse_gram_frobenius(),
            ztg_norm: (z.transpose() * &grads).norm(),
            delta_p_norm,
            max_gradient_norm,
            max_basis_norm,
            max_partition_error,
            weights: config.record_weights.then_some(ts),
        });
        control = next;
    }

    let model = BezierSimplex::new(basis, control)?;
    #[cfg(not(target_arch = "wasm32"))]
    let wall_clock_secs = Some(started.elapsed().as_secs_f64());
    #[cfg(target_arch = "wasm32")]
    let wall_clock_secs = None;
    let record = RunRecord {
        iterations: trace,
        seed: config.seed,
        samples: config.samples,
        model: model.clone(),
        wall_clock_secs,
    };
    Ok((model, record))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bezier::fit_least_squares;
    use crate::metrics;
    use crate::problems::{scaled_med, scaled_med_pareto};
    use crate::simplex::{sample_uniform_simplex, weight_grid};

    struct Identity;
    impl StepRule for Identity {
        fn step(&self, x: &[f64], _: &ScalarizedObjective<'_>, _: usize) -> Result<Vec<f64>> {
            Ok(x.to_vec())
        }
    }

    fn config(samples: usize, iterations: usize, seed: u64) -> SolverConfig {
        SolverConfig {
            samples,
            iterations,
            seed,
            ..SolverConfig::default()
        }
    }

    #[test]
    fn gradient_step_examples() {
        let p = scaled_med();
        let rule = gradient_step_rule(StepSchedule::Constant(1.0));
        let obj = p.scalarize(WeightVector::vertex(3, 0)).unwrap();
        assert_eq!(rule.step(&[1.0, 1.0, 1.0], &obj, 1).unwrap(), vec![-1.0, 1.0, 1.0]);

        let t = WeightVector::new(vec![0.2, 0.5, 0.3]).unwrap();
        let x = scaled_med_pareto(&t);
        let obj = p.scalarize(t).unwrap();
        let y = gradient_step_rule(StepSchedule::Harmonic).step(&x, &obj, 1).unwrap();
        for l in 0..3 {
            assert!((y[l] - x[l]).abs() < 1e-14);
        }

        let tiny = gradient_step_rule(StepSchedule::Constant(1e-12));
        let y = tiny.step(&[0.5, 0.5, 0.5], &obj, 1).unwrap();
        assert!(y.iter().all(|v| (v - 0.5).abs() < 1e-10));
    }

    #[test]
    fn config_validation() {
        let p = scaled_med();
        assert!(config(30, 10, 0).validate(&p).is_ok());
        let err = config(5, 10, 0).validate(&p).unwrap_err();
        assert!(err.to_string().contains("N >= 10"), "{err}");
        assert!(config(30, 0, 0).validate(&p).is_err());
        let mut c = config(30, 10, 0);
        c.schedule = StepSchedule::Constant(0.0);
        assert!(c.validate(&p).is_err());
        c.schedule = StepSchedule::Constant(1.5);
        assert!(c.validate(&p).is_err());
        c.schedule = StepSchedule::Constant(1.0);
        assert!(c.validate(&p).is_ok());
        c.initial = InitialControl::Matrix(DMatrix::zeros(9, 3));
        assert!(c.validate(&p).is_err());
    }

    #[test]
    fn schedule_parsing() {
        assert_eq!(StepSchedule::parse("harmonic").unwrap(), StepSchedule::Harmonic);
        assert_eq!(StepSchedule::parse("1/k").unwrap(), StepSchedule::Harmonic);
        assert_eq!(StepSchedule::parse("constant:0.5").unwrap(), StepSchedule::Constant(0.5));
        assert!(StepSchedule::parse("fast").is_err());
    }

    #[test]
    fn identity_rule_keeps_a_fitted_model() {
        let p = scaled_med();
        let basis = MultiIndexSet::new(3, 3).unwrap();
        let ts = sample_uniform_simplex(3, 40, 9).unwrap();
        let xs: Vec<Vec<f64>> = ts.iter().map(|t| scaled_med_pareto(t).to_vec()).collect();
        let start = fit_least_squares(&basis, &ts, &xs).unwrap();
        let mut c = config(30, 5, 1);
        c.initial = InitialControl::Matrix(start.control_points().clone());
        let (end, _) = run_generic(&p, &Identity, &c).unwrap();
        assert!((end.control_points() - start.control_points()).norm() < 1e-8);
    }

    #[test]
    fn single_iteration_from_zero() {
        // P^(1) = 0 puts every surface point at the origin; the stepped points are
        // -alpha J_f(0)^T t, which is linear in t, so the degree-3 fit is exact.
        let p = scaled_med();
        let mut c = config(12, 1, 21);
        c.record_weights = true;
        let (model, record) = run_surface_gd(&p, &c).unwrap();
        assert_eq!(record.iterations.len(), 1);
        let ts = record.iterations[0].weights.clone().unwrap();
        // J_f(0) rows: (0,-6,-4), (-4,0,-6), (-6,-4,2); alpha^(1) = 1
        let jac0 = [[0.0, -6.0, -4.0], [-4.0, 0.0, -6.0], [-6.0, -4.0, 2.0]];
        for t in &ts {
            let expect: Vec<f64> = (0..3)
                .map(|l| -(0..3).map(|m| t[m] * jac0[m][l]).sum::<f64>())
                .collect();
            let got = model.evaluate(t).unwrap();
            for l in 0..3 {
                assert!((got[l] - expect[l]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn closed_form_update_matches_refit() {
        let p = scaled_med();
        for seed in 0..3 {
            let c = config(30, 10, seed);
            let (a, _) = run_surface_gd(&p, &c).unwrap();
            let (b, _) = run_generic(&p, &gradient_step_rule(c.schedule), &c).unwrap();
            assert!((a.control_points() - b.control_points()).norm() < 1e-8);
        }
    }

    #[test]
    fn trace_is_complete_and_deterministic() {
        let p = scaled_med();
        let c = config(30, 25, 5);
        let (_, mut r1) = run_surface_gd(&p, &c).unwrap();
        let (_, mut r2) = run_surface_gd(&p, &c).unwrap();
        assert_eq!(r1.iterations.len(), 25);
        for it in &r1.iterations {
            assert!(it.lambda_min.is_finite() && it.lambda_min > 0.0);
            assert!(it.ztg_norm.is_finite());
            let n = c.samples as f64;
            assert!(it.ztg_norm <= n * it.max_gradient_norm);
            assert!(it.delta_p_norm <= it.alpha * it.inverse_gram_frobenius * it.ztg_norm * (1.0 + 1e-12));
        }
        r1.wall_clock_secs = None;
        r2.wall_clock_secs = None;
        assert_eq!(r1, r2);
        let json = r1.to_json(serde_json::json!({}));
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["iterations"].as_array().unwrap().len(), 25);
        assert!(v["footer"]["model"]["control_points"].is_array());
    }

    #[test]
    fn perturbation_with_same_weight_is_a_no_op() {
        let p = scaled_med();
        let c = config(30, 12, 3);
        let original = iteration_weights(3, &c, 6, 0);
        let pert = Perturbation {
            iteration: 6,
            index: 4,
            replacement: original[4].clone(),
        };
        let (a, _) = run_surface_gd(&p, &c).unwrap();
        let (b, _) = run_surface_gd_perturbed(&p, &c, &pert).unwrap();
        assert_eq!(a, b);
        let bad = Perturbation { iteration: 13, ..pert };
        assert!(run_surface_gd_perturbed(&p, &c, &bad).is_err());
    }

    #[test]
    fn loss_drops_over_the_run() {
        let p = scaled_med();
        let grid = weight_grid(3, 1000, 17).unwrap();
        for seed in 0..3 {
            let mut c = config(30, 1, seed);
            let (first, _) = run_surface_gd(&p, &c).unwrap();
            c.iterations = 200;
            let (last, _) = run_surface_gd(&p, &c).unwrap();
            let mean = |m: &BezierSimplex| {
                grid.iter()
                    .map(|t| metrics::loss(m, &p, t).unwrap())
                    .sum::<f64>()
                    / grid.len() as f64
            };
            assert!(mean(&last) < mean(&first));
        }
    }

    #[test]
    fn abort_after_exhausting_resamples() {
        // high-degree Bernstein designs are numerically rank deficient
        let p = scaled_med();
        let mut c = config(0, 2, 0);
        c.degree = 40;
        c.samples = MultiIndexSet::new(3, 40).unwrap().len();
        c.resample_retries = 2;
        match run_surface_gd(&p, &c) {
            Err(Error::SolverAbort { iteration, attempts, .. }) => {
                assert_eq!(iteration, 1);
                assert_eq!(attempts, 3);
            }
            other => panic!("expected abort, got {other:?}"),
        }
    }
}
