//! Empirical stability probes for surface-wise gradient descent.
//!
//! The bounds involved hold with high probability over unobservable
//! constants. Here they are instantiated with realized quantities from a run:
//! `eta` is the smallest observed `lambda_min(Z^T Z)`, `zeta = sqrt(|N^M_D|) / eta`,
//! and `mu` is the largest scalarized-gradient norm seen at visited points
//! (a global Lipschitz constant does not exist for these problems on `R^L`).
//! The resulting bound comparison is reported as a flag, not enforced. The
//! per-iteration inequality `||Z^T G||_F <= N U mu_k` is deterministic given
//! the batch and is checked exactly.

use rand::Rng;
use serde::Serialize;

use crate::bezier::BezierSimplex;
use crate::error::{Error, Result};
use crate::metrics;
use crate::problems::Problem;
use crate::rng::{self, tag};
use crate::simplex::{sample_uniform_simplex, sample_weight, weight_grid, WeightVector};
use crate::solver::{
    iteration_weights, run_surface_gd, run_surface_gd_perturbed, Perturbation, RunRecord,
    SolverConfig,
};

/// Bound on `||z(t)||_2` over the simplex.
pub const BASIS_NORM_BOUND: f64 = 1.0;
pub const TEST_GRID_SIZE: usize = 2000;
/// Bump when the construction of the test grid changes.
pub const TEST_GRID_VERSION: u32 = 1;
const TEST_GRID_SEED: u64 = 0x7E57_6121_D000_0001;

/// Fixed weights over which sup-gaps are taken: the largest lattice within
/// half of `TEST_GRID_SIZE` points plus seeded uniform draws up to that size.
pub fn test_grid(objectives: usize) -> Result<Vec<WeightVector>> {
    weight_grid(
        objectives,
        TEST_GRID_SIZE,
        rng::derive_seed(TEST_GRID_SEED, &[tag::TEST_GRID, TEST_GRID_VERSION as u64]),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GapKind {
    /// `|l(P;t) - l(P';t)|` against the analytic Pareto map.
    Loss,
    /// `||b(t|P) - b(t|P')||`, an upper bound on the loss gap, used when no map exists.
    Surface,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbationReport {
    pub k: usize,
    pub samples: usize,
    pub iterations: usize,
    pub repeat: usize,
    pub index: usize,
    pub sup_gap: f64,
    pub gap_kind: GapKind,
    pub frob_gap: f64,
    pub eta_hat: f64,
    pub zeta_hat: f64,
    pub mu_hat: f64,
    pub bound_value: f64,
    /// `bound_value >= frob_gap`; informational.
    pub bound_holds: bool,
}

/// Largest gap between two models over `grid`.
pub fn sup_gap(
    problem: &Problem,
    a: &BezierSimplex,
    b: &BezierSimplex,
    grid: &[WeightVector],
) -> Result<(f64, GapKind)> {
    let mut worst = 0.0f64;
    if problem.has_pareto_map() {
        for t in grid {
            let gap = (metrics::loss(a, problem, t)? - metrics::loss(b, problem, t)?).abs();
            worst = worst.max(gap);
        }
        Ok((worst, GapKind::Loss))
    } else {
        for t in grid {
            let (x, y) = (a.evaluate(t)?, b.evaluate(t)?);
            let d = x.iter().zip(&y).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt();
            worst = worst.max(d);
        }
        Ok((worst, GapKind::Surface))
    }
}

/// Compares a base run against a run with `perturbation` applied.
pub fn compare_perturbed(
    problem: &Problem,
    config: &SolverConfig,
    base: &(BezierSimplex, RunRecord),
    perturbation: &Perturbation,
    repeat: usize,
    grid: &[WeightVector],
) -> Result<PerturbationReport> {
    let (p_model, p_record) = run_surface_gd_perturbed(problem, config, perturbation)?;
    let (b_model, b_record) = base;
    let (sup, gap_kind) = sup_gap(problem, b_model, &p_model, grid)?;
    let frob_gap = (b_model.control_points() - p_model.control_points()).norm();
    let eta_hat = b_record.min_lambda().min(p_record.min_lambda());
    let zeta_hat = (b_model.basis().len() as f64).sqrt() / eta_hat;
    let mu_hat = b_record.max_gradient_norm().max(p_record.max_gradient_norm());
    let n = config.samples as f64;
    let remaining = (config.iterations - perturbation.iteration) as f64;
    let bound_value =
        2.0 * mu_hat * eta_hat * BASIS_NORM_BOUND * (1.0 + (remaining + zeta_hat / eta_hat) * n);
    Ok(PerturbationReport {
        k: perturbation.iteration,
        samples: config.samples,
        iterations: config.iterations,
        repeat,
        index: perturbation.index,
        sup_gap: sup,
        gap_kind,
        frob_gap,
        eta_hat,
        zeta_hat,
        mu_hat,
        bound_value,
        bound_holds: bound_value >= frob_gap,
    })
}

/// The perturbation drawn for `repeat`: a uniformly chosen slot of iteration
/// `k`'s sample, redrawn uniformly on the simplex.
pub fn repeat_perturbation(objectives: usize, config: &SolverConfig, k: usize, repeat: usize) -> Perturbation {
    let mut r = rng::stream(config.seed, &[tag::PERTURB, k as u64, repeat as u64]);
    let index = r.random_range(0..config.samples);
    let replacement = sample_weight(objectives, &mut r);
    Perturbation {
        iteration: k,
        index,
        replacement,
    }
}

/// Runs surface-wise gradient descent once unperturbed and `repeats` times
/// with a single weight of iteration `k` redrawn.
pub fn perturbation_experiment(
    problem: &Problem,
    config: &SolverConfig,
    k: usize,
    repeats: usize,
) -> Result<Vec<PerturbationReport>> {
    if k == 0 || k > config.iterations {
        return Err(Error::Config(format!(
            "perturbed iteration k = {k} must lie in 1..={}",
            config.iterations
        )));
    }
    let base = run_surface_gd(problem, config)?;
    let grid = test_grid(problem.objectives())?;
    let one = |repeat: usize| {
        let pert = repeat_perturbation(problem.objectives(), config, k, repeat);
        compare_perturbed(problem, config, &base, &pert, repeat, &grid)
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..repeats).into_par_iter().map(one).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..repeats).map(one).collect()
    }
}

pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty());
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapReport {
    pub problem: String,
    pub seed: u64,
    pub samples: usize,
    pub iterations: usize,
    pub degree: u32,
    pub holdout: usize,
    /// Mean loss over the final iteration's training weights.
    pub empirical_error: f64,
    /// Mean loss over fresh uniform weights.
    pub holdout_error: f64,
    /// `holdout_error - empirical_error`.
    pub gap: f64,
}

/// Empirical versus held-out loss of a trained model, for errors computed
/// with `loss`.
pub fn gap_of(
    problem: &Problem,
    model: &BezierSimplex,
    training: &[WeightVector],
    holdout: &[WeightVector],
) -> Result<(f64, f64)> {
    let mean = |ts: &[WeightVector]| -> Result<f64> {
        let mut s = 0.0;
        for t in ts {
            s += metrics::loss(model, problem, t)?;
        }
        Ok(s / ts.len() as f64)
    };
    Ok((mean(training)?, mean(holdout)?))
}

pub fn generalization_gap_experiment(
    problem: &Problem,
    config: &SolverConfig,
    holdout: usize,
) -> Result<GapReport> {
    if !problem.has_pareto_map() {
        return Err(Error::UnsupportedMetric(format!(
            "generalization gap needs an analytic Pareto map; {} has none",
            problem.name()
        )));
    }
    if holdout == 0 {
        return Err(Error::Config("holdout size must be at least 1".into()));
    }
    let (model, record) = run_surface_gd(problem, config)?;
    let last = record.iterations.last().expect("K >= 1");
    let training = iteration_weights(problem.objectives(), config, last.k, last.resamples);
    let fresh = sample_uniform_simplex(
        problem.objectives(),
        holdout,
        rng::derive_seed(config.seed, &[tag::HOLDOUT]),
    )?;
    let (empirical_error, holdout_error) = gap_of(problem, &model, &training, &fresh)?;
    Ok(GapReport {
        problem: problem.name().to_string(),
        seed: config.seed,
        samples: config.samples,
        iterations: config.iterations,
        degree: config.degree,
        holdout,
        empirical_error,
        holdout_error,
        gap: holdout_error - empirical_error,
    })
}

/// Independent generalization-gap trials with seeds `derive_seed(root, [TRIAL, i])`.
pub fn generalization_gap_trials(
    problem: &Problem,
    config: &SolverConfig,
    holdout: usize,
    trials: usize,
    root_seed: u64,
) -> Result<Vec<GapReport>> {
    let one = |i: usize| {
        let c = SolverConfig {
            seed: trial_seed(root_seed, i),
            ..config.clone()
        };
        generalization_gap_experiment(problem, &c, holdout)
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..trials).into_par_iter().map(one).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..trials).map(one).collect()
    }
}

/// Seed of trial `index` under `root`. Adding trials never changes earlier seeds.
pub fn trial_seed(root: u64, index: usize) -> u64 {
    rng::derive_seed(root, &[tag::TRIAL, index as u64])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaSummary {
    pub iterations: usize,
    pub samples: usize,
    pub min_lambda: f64,
    pub median_lambda: f64,
    pub max_ztg_norm: f64,
    pub max_gradient_norm: f64,
    /// `||Z^T G||_F <= N U mu_k` on every iteration.
    pub ztg_bound_holds: bool,
    /// `||z(t)||_2 <= 1` for every sampled weight.
    pub basis_norm_holds: bool,
    /// `|sum_i z_i(t) - 1| < 1e-12` for every sampled weight.
    pub partition_holds: bool,
    pub all_lambda_positive: bool,
    /// Iterations where `||P^(k+1) - P^(k)||_F` exceeds `alpha ||(Z^T Z)^{-1}||_F ||Z^T G||_F`.
    pub step_bound_violations: usize,
}

pub fn lemma_quantities(record: &RunRecord) -> LemmaSummary {
    let n = record.samples as f64;
    let lambdas: Vec<f64> = record.iterations.iter().map(|r| r.lambda_min).collect();
    let it = &record.iterations;
    LemmaSummary {
        iterations: it.len(),
        samples: record.samples,
        min_lambda: record.min_lambda(),
        median_lambda: median(&lambdas),
        max_ztg_norm: it.iter().map(|r| r.ztg_norm).fold(0.0, f64::max),
        max_gradient_norm: record.max_gradient_norm(),
        ztg_bound_holds: it
            .iter()
            .all(|r| r.ztg_norm <= n * BASIS_NORM_BOUND * r.max_gradient_norm),
        basis_norm_holds: it.iter().all(|r| r.max_basis_norm <= BASIS_NORM_BOUND),
        partition_holds: it.iter().all(|r| r.max_partition_error < 1e-12),
        all_lambda_positive: lambdas.iter().all(|&l| l > 0.0),
        step_bound_violations: it
            .iter()
            .filter(|r| r.delta_p_norm > r.alpha * r.inverse_gram_frobenius * r.ztg_norm * (1.0 + 1e-12))
            .count(),
    }
}
