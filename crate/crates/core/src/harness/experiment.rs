use std::fmt::Write as _;

use serde::Serialize;

use super::config::{ExperimentConfig, MetricKind};
use super::output::{float, opt_float, provenance_line};
use crate::bezier::BezierSimplex;
use crate::diagnostics::trial_seed;
use crate::error::Result;
use crate::metrics::{self, PointSet};
use crate::problems::Problem;
use crate::rng::{derive_seed, tag};
use crate::solver::run_surface_gd;
use crate::sweep::{self, ValidationSet};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRow {
    /// Setting size: `N` for the proposed method, `p` for the baseline.
    pub size: usize,
    pub trial: usize,
    pub seed: u64,
    pub mse: Option<f64>,
    pub gd: Option<f64>,
    pub igd: Option<f64>,
    pub error: Option<String>,
}

impl TrialRow {
    pub fn ok(&self) -> bool {
        self.error.is_none()
    }

    pub fn metric(&self, kind: MetricKind) -> Option<f64> {
        match kind {
            MetricKind::Mse => self.mse,
            MetricKind::Gd => self.gd,
            MetricKind::Igd => self.igd,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub size: usize,
    pub metric: MetricKind,
    pub mean: f64,
    /// Sample standard deviation; 0 for a single trial.
    pub sd: f64,
    pub trials: usize,
    pub failed: usize,
    pub single_trial: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub method: String,
    pub problem: String,
    pub rows: Vec<TrialRow>,
    pub aggregates: Vec<Aggregate>,
    pub warnings: Vec<String>,
    /// Non-converged sweep points in the GD/IGD reference set.
    pub validation_non_converged: Option<usize>,
    pub validation_points: Option<usize>,
}

/// Shared per-experiment inputs of the metric evaluation.
pub struct MetricContext<'a> {
    pub problem: &'a Problem,
    pub config: &'a ExperimentConfig,
    pub validation: Option<ValidationSet>,
}

impl<'a> MetricContext<'a> {
    pub fn new(problem: &'a Problem, config: &'a ExperimentConfig) -> Result<Self> {
        let needs_reference = config
            .metrics
            .iter()
            .any(|m| matches!(m, MetricKind::Gd | MetricKind::Igd));
        let validation = if needs_reference {
            Some(sweep::validation_set(problem, config.validation_size)?)
        } else {
            None
        };
        Ok(MetricContext {
            problem,
            config,
            validation,
        })
    }

    /// Requested metrics of `model`, with sampling seeds derived from `seed`.
    pub fn evaluate(&self, model: &BezierSimplex, size: usize, trial: usize, seed: u64) -> Result<TrialRow> {
        let mut row = TrialRow {
            size,
            trial,
            seed,
            mse: None,
            gd: None,
            igd: None,
            error: None,
        };
        let mut surface: Option<PointSet> = None;
        for kind in &self.config.metrics {
            match kind {
                MetricKind::Mse => {
                    row.mse = Some(metrics::mse(
                        model,
                        self.problem,
                        self.config.mse_samples,
                        derive_seed(seed, &[tag::MSE]),
                    )?)
                }
                MetricKind::Gd | MetricKind::Igd => {
                    let reference = &self.validation.as_ref().expect("reference built").points;
                    if surface.is_none() {
                        surface = Some(PointSet::from_model(
                            model,
                            self.config.surface_samples,
                            derive_seed(seed, &[tag::SURFACE_SAMPLE]),
                        )?);
                    }
                    let x = surface.as_ref().unwrap();
                    if *kind == MetricKind::Gd {
                        row.gd = Some(metrics::gd(x, reference)?);
                    } else {
                        row.igd = Some(metrics::igd(x, reference)?);
                    }
                }
            }
        }
        Ok(row)
    }
}

pub(crate) fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    #[cfg(feature = "parallel")]
    {
        let threads = threads.or_else(|| {
            std::env::var("BEZIER_MOPT_THREADS")
                .ok()
                .and_then(|v| v.parse().ok())
                .filter(|&n: &usize| n > 0)
        });
        match threads {
            Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
                Ok(pool) => pool.install(f),
                Err(_) => f(),
            },
            None => f(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        f()
    }
}

pub(crate) fn map_ordered<T: Send, F>(jobs: Vec<(usize, usize)>, f: F) -> Vec<T>
where
    F: Fn(usize, usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        jobs.into_par_iter().map(|(a, b)| f(a, b)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        jobs.into_iter().map(|(a, b)| f(a, b)).collect()
    }
}

/// Runs `trials` seeded surface-wise gradient-descent runs per sample size and
/// evaluates the requested metrics. Trial `i` uses seed `trial_seed(root, i)`
/// for every sample size.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let problem = config.validate()?;
    with_pool(config.threads, || {
        let ctx = MetricContext::new(&problem, config)?;
        let jobs: Vec<(usize, usize)> = config
            .samples
            .iter()
            .flat_map(|&n| (0..config.trials).map(move |i| (n, i)))
            .collect();
        let rows = map_ordered(jobs, |n, i| {
            let seed = trial_seed(config.root_seed, i);
            let result = run_surface_gd(&problem, &config.solver(n, seed))
                .and_then(|(model, _)| ctx.evaluate(&model, n, i, seed));
            result.unwrap_or_else(|e| TrialRow {
                size: n,
                trial: i,
                seed,
                mse: None,
                gd: None,
                igd: None,
                error: Some(e.to_string()),
            })
        });
        Ok(finish(
            "surface-wise gradient descent",
            &problem,
            config,
            &config.samples,
            rows,
            &ctx,
        ))
    })
}

pub(crate) fn finish(
    method: &str,
    problem: &Problem,
    config: &ExperimentConfig,
    sizes: &[usize],
    rows: Vec<TrialRow>,
    ctx: &MetricContext<'_>,
) -> ExperimentReport {
    let (aggregates, warnings) = aggregate(&rows, sizes, &config.metrics);
    ExperimentReport {
        method: method.into(),
        problem: problem.name().into(),
        rows,
        aggregates,
        warnings,
        validation_non_converged: ctx.validation.as_ref().map(|v| v.non_converged),
        validation_points: ctx.validation.as_ref().map(|v| v.points.len()),
    }
}

/// Mean and sample standard deviation per (size, metric), skipping failed trials.
pub fn aggregate(rows: &[TrialRow], sizes: &[usize], kinds: &[MetricKind]) -> (Vec<Aggregate>, Vec<String>) {
    let mut out = Vec::new();
    let mut warnings = Vec::new();
    for &size in sizes {
        let group: Vec<&TrialRow> = rows.iter().filter(|r| r.size == size).collect();
        let failed = group.iter().filter(|r| !r.ok()).count();
        if failed > 0 {
            warnings.push(format!(
                "size {size}: {failed} of {} trials failed and are excluded",
                group.len()
            ));
        }
        for &kind in kinds {
            let vals: Vec<f64> = group.iter().filter_map(|r| r.metric(kind)).collect();
            if vals.is_empty() {
                continue;
            }
            let n = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / n;
            let sd = if vals.len() > 1 {
                (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            out.push(Aggregate {
                size,
                metric: kind,
                mean,
                sd,
                trials: vals.len(),
                failed,
                single_trial: vals.len() == 1,
            });
        }
    }
    (out, warnings)
}

impl ExperimentReport {
    pub fn aggregate_for(&self, size: usize, metric: MetricKind) -> Option<&Aggregate> {
        self.aggregates
            .iter()
            .find(|a| a.size == size && a.metric == metric)
    }

    /// Per-trial CSV. Contents depend only on the configuration.
    pub fn trials_csv(&self, config_echo: &serde_json::Value) -> String {
        let mut out = provenance_line(config_echo);
        out.push_str("method,problem,size,trial,seed,status,mse,gd,igd,error\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                csv_field(&self.method),
                self.problem,
                r.size,
                r.trial,
                r.seed,
                if r.ok() { "ok" } else { "failed" },
                opt_float(r.mse),
                opt_float(r.gd),
                opt_float(r.igd),
                csv_field(r.error.as_deref().unwrap_or("")),
            );
        }
        out
    }

    pub fn aggregate_json(&self, config_echo: &serde_json::Value) -> serde_json::Value {
        serde_json::json!({
            "tool": crate::VERSION,
            "config": config_echo,
            "method": self.method,
            "problem": self.problem,
            "aggregates": self.aggregates,
            "warnings": self.warnings,
            "validation": {
                "points": self.validation_points,
                "non_converged": self.validation_non_converged,
                "construction": "scalarization sweep over a simplex lattice (substitute for an evolutionary reference set)",
            },
            "trials": self.rows,
        })
    }

    /// Human-readable summary table.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for a in &self.aggregates {
            let _ = writeln!(
                out,
                "{:<12} {:<4} size={:<5} {}±{} ({} trials{})",
                self.problem,
                a.metric.name(),
                a.size,
                float(a.mean),
                float(a.sd),
                a.trials,
                if a.single_trial { ", single trial" } else { "" }
            );
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
