use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::Problem;
use crate::solver::{InitialControl, SolverConfig, StepSchedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Mse,
    Gd,
    Igd,
}

impl MetricKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "mse" => Ok(MetricKind::Mse),
            "gd" => Ok(MetricKind::Gd),
            "igd" => Ok(MetricKind::Igd),
            other => Err(Error::Config(format!("unknown metric {other:?}"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            MetricKind::Mse => "mse",
            MetricKind::Gd => "gd",
            MetricKind::Igd => "igd",
        }
    }
}

/// Batch-run configuration, loadable from JSON. Unset fields take the values
/// of the reference experimental setup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: String,
    /// Sample sizes `N`, one setting each.
    pub samples: Vec<usize>,
    pub iterations: usize,
    pub degree: u32,
    pub schedule: StepSchedule,
    /// Only `"zero"` is accepted.
    pub initial: String,
    pub resample_retries: usize,
    pub trials: usize,
    pub root_seed: u64,
    pub metrics: Vec<MetricKind>,
    /// Weights per MSE estimate.
    pub mse_samples: usize,
    /// Upper bound on the lattice size of the GD/IGD reference set.
    pub validation_size: usize,
    /// Model points per GD/IGD estimate.
    pub surface_samples: usize,
    /// Baseline lattice sizes.
    pub populations: Vec<usize>,
    /// Worker threads; `None` means all hardware threads.
    pub threads: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            problem: "scaled-med".into(),
            samples: vec![30, 50, 100],
            iterations: 1000,
            degree: 3,
            schedule: StepSchedule::Harmonic,
            initial: "zero".into(),
            resample_retries: 5,
            trials: 20,
            root_seed: 0,
            metrics: vec![MetricKind::Mse],
            mse_samples: 10_000,
            validation_size: 1000,
            surface_samples: 1000,
            populations: vec![30, 50, 100],
            threads: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("config file: {e}")))
    }

    pub fn problem(&self) -> Result<Problem> {
        Problem::from_name(&self.problem)
    }

    /// Solver settings for sample size `samples` and seed `seed`.
    pub fn solver(&self, samples: usize, seed: u64) -> SolverConfig {
        SolverConfig {
            samples,
            iterations: self.iterations,
            degree: self.degree,
            schedule: self.schedule,
            seed,
            initial: InitialControl::Zero,
            resample_retries: self.resample_retries,
            record_weights: false,
        }
    }

    pub fn validate(&self) -> Result<Problem> {
        let problem = self.problem()?;
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.initial != "zero" {
            return Err(Error::Config(format!(
                "unsupported initial control {:?} (only \"zero\")",
                self.initial
            )));
        }
        if self.samples.is_empty() {
            return Err(Error::Config("at least one sample size N is required".into()));
        }
        for &n in &self.samples {
            self.solver(n, 0).validate(&problem)?;
        }
        if self.mse_samples == 0 || self.surface_samples == 0 {
            return Err(Error::Config("metric sample sizes must be positive".into()));
        }
        if self.metrics.contains(&MetricKind::Mse) && !problem.has_pareto_map() {
            return Err(Error::Config(format!(
                "mse needs an analytic Pareto map; {} has none (use gd/igd)",
                problem.name()
            )));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        Ok(problem)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_overrides() {
        let c = ExperimentConfig::from_json(r#"{"problem":"skew-3med","metrics":["gd","igd"],"trials":2}"#).unwrap();
        assert_eq!(c.samples, vec![30, 50, 100]);
        assert_eq!(c.metrics, vec![MetricKind::Gd, MetricKind::Igd]);
        assert!(c.validate().is_ok());
        assert!(ExperimentConfig::from_json(r#"{"bogus":1}"#).is_err());
    }

    #[test]
    fn validation_errors() {
        let mut c = ExperimentConfig::default();
        assert!(c.validate().is_ok());
        c.samples = vec![5];
        assert!(c.validate().unwrap_err().to_string().contains("N >= 10"));
        c = ExperimentConfig { trials: 0, ..Default::default() };
        assert!(c.validate().is_err());
        c = ExperimentConfig { problem: "skew-3mmd".into(), ..Default::default() };
        assert!(c.validate().is_err());
        c = ExperimentConfig { problem: "nope".into(), ..Default::default() };
        assert!(matches!(c.validate(), Err(Error::Config(_))));
    }
}
