use serde::Serialize;

use super::config::ExperimentConfig;
use super::experiment::{finish, map_ordered, with_pool, ExperimentReport, MetricContext, TrialRow};
use crate::bezier::BezierSimplex;
use crate::error::{Error, Result};
use crate::simplex::WeightVector;
use crate::sweep::baseline;

pub const BASELINE_METHOD: &str = "scalarization sweep + single fit (substitute for NSGA-II + fit)";

#[derive(Debug, Clone, Serialize)]
pub struct PopulationFit {
    pub population: usize,
    pub lattice_points: usize,
    pub used_points: usize,
    /// Lattice weights whose scalarized descent did not reach the tolerance.
    pub non_converged: Vec<WeightVector>,
    #[serde(skip)]
    pub model: BezierSimplex,
}

#[derive(Debug, Clone)]
pub struct BaselineOutcome {
    pub report: ExperimentReport,
    pub fits: Vec<PopulationFit>,
    /// Populations whose sweep or fit failed.
    pub errors: Vec<(usize, Error)>,
}

/// Fit-once baseline: one scalarization sweep per lattice size in
/// `config.populations`, followed by a single least-squares fit. The sweep is
/// deterministic, so each size yields one trial.
pub fn run_baseline(config: &ExperimentConfig) -> Result<BaselineOutcome> {
    let problem = config.validate()?;
    with_pool(config.threads, || {
        let ctx = MetricContext::new(&problem, config)?;
        let jobs: Vec<(usize, usize)> = config.populations.iter().map(|&p| (p, 0)).collect();
        let results = map_ordered(jobs, |p, i| {
            let seed = config.root_seed;
            let fit = baseline(&problem, p, config.degree).and_then(|fit| {
                let row = ctx.evaluate(&fit.model, p, i, seed)?;
                Ok((row, fit))
            });
            match fit {
                Ok((row, fit)) => (
                    row,
                    Ok(PopulationFit {
                        population: p,
                        lattice_points: fit.lattice_points,
                        used_points: fit.used_points,
                        non_converged: fit.non_converged,
                        model: fit.model,
                    }),
                ),
                Err(e) => (
                    TrialRow {
                        size: p,
                        trial: i,
                        seed,
                        mse: None,
                        gd: None,
                        igd: None,
                        error: Some(e.to_string()),
                    },
                    Err((p, e)),
                ),
            }
        });
        let mut rows = Vec::new();
        let mut fits = Vec::new();
        let mut errors = Vec::new();
        for (row, fit) in results {
            rows.push(row);
            match fit {
                Ok(f) => fits.push(f),
                Err(e) => errors.push(e),
            }
        }
        Ok(BaselineOutcome {
            report: finish(BASELINE_METHOD, &problem, config, &config.populations, rows, &ctx),
            fits,
            errors,
        })
    })
}
