use std::path::PathBuf;

use bezier_mopt::harness::{ExperimentConfig, MetricKind};
use bezier_mopt::{Error, Result, StepSchedule};
use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "bezier-mopt", version, about = "Pareto set approximation by iterated Bezier simplex fitting")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run surface-wise gradient descent once and write the model and its trace.
    Solve(SolveArgs),
    /// Seeded multi-trial runs with metric aggregation.
    Experiment(ExperimentArgs),
    /// Scalarization sweep followed by a single Bezier simplex fit.
    Baseline(BaselineArgs),
    /// Evaluate a model at uniformly drawn weights.
    Sample(SampleArgs),
    /// GD, IGD or MSE between a model or point file and a reference.
    Metrics(MetricsArgs),
    /// Stability and lemma diagnostics.
    Diagnostics(DiagnosticsArgs),
}

/// Settings shared by every batch command. Flags override the config file.
#[derive(Args, Debug, Default)]
pub struct ConfigArgs {
    /// JSON config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub problem: Option<String>,
    /// Samples per iteration; a comma-separated list sets several settings.
    #[arg(long = "n", value_delimiter = ',')]
    pub samples: Option<Vec<usize>>,
    /// Iterations K.
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub degree: Option<u32>,
    /// `harmonic` (1/k), `constant:<a>` or a number in (0, 1].
    #[arg(long)]
    pub schedule: Option<String>,
    #[arg(long)]
    pub resample_retries: Option<usize>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Root seed. For `solve` it is the run seed itself.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated list of mse, gd, igd.
    #[arg(long, value_delimiter = ',')]
    pub metrics: Option<Vec<String>>,
    #[arg(long)]
    pub mse_samples: Option<usize>,
    #[arg(long)]
    pub validation_size: Option<usize>,
    #[arg(long)]
    pub surface_samples: Option<usize>,
    /// Baseline lattice sizes.
    #[arg(long, value_delimiter = ',')]
    pub populations: Option<Vec<usize>>,
    /// Worker threads (default: BEZIER_MOPT_THREADS or all cores).
    #[arg(long)]
    pub threads: Option<usize>,
}

impl ConfigArgs {
    /// Config file (or defaults) with flag overrides applied; `k` is a
    /// command-level alias for `--iterations`.
    pub fn resolve(&self, k: Option<usize>) -> Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
                ExperimentConfig::from_json(&text)?
            }
            None => ExperimentConfig::default(),
        };
        if let Some(v) = &self.problem {
            c.problem = v.clone();
        }
        if let Some(v) = &self.samples {
            c.samples = v.clone();
        }
        if let Some(v) = self.iterations.or(k) {
            c.iterations = v;
        }
        if let Some(v) = self.degree {
            c.degree = v;
        }
        if let Some(v) = &self.schedule {
            c.schedule = StepSchedule::parse(v)?;
        }
        if let Some(v) = self.resample_retries {
            c.resample_retries = v;
        }
        if let Some(v) = self.trials {
            c.trials = v;
        }
        if let Some(v) = self.seed {
            c.root_seed = v;
        }
        if let Some(v) = &self.metrics {
            c.metrics = v.iter().map(|m| MetricKind::parse(m)).collect::<Result<_>>()?;
        }
        if let Some(v) = self.mse_samples {
            c.mse_samples = v;
        }
        if let Some(v) = self.validation_size {
            c.validation_size = v;
        }
        if let Some(v) = self.surface_samples {
            c.surface_samples = v;
        }
        if let Some(v) = &self.populations {
            c.populations = v.clone();
        }
        if let Some(v) = self.threads {
            c.threads = Some(v);
        }
        Ok(c)
    }
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Iterations K (same as `--iterations`).
    #[arg(long = "k", conflicts_with = "iterations")]
    pub k: Option<usize>,
    /// Model JSON output.
    #[arg(long)]
    pub out: PathBuf,
    /// Trace JSON output (default: `<out>.trace.json`).
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ExperimentArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Iterations K (same as `--iterations`).
    #[arg(long = "k", conflicts_with = "iterations")]
    pub k: Option<usize>,
    /// Directory for `trials.csv` and `aggregate.json`.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct BaselineArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Iterations K (same as `--iterations`).
    #[arg(long = "k", conflicts_with = "iterations")]
    pub k: Option<usize>,
    /// Directory for the baseline models, `baseline_trials.csv` and `baseline_report.json`.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Also run the proposed method with the same config and report both side by side.
    #[arg(long)]
    pub compare: bool,
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV output (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct MetricsArgs {
    /// Comma-separated list of mse, gd, igd.
    #[arg(long, value_delimiter = ',', default_value = "gd,igd")]
    pub metrics: Vec<String>,
    /// Model JSON; sampled for GD/IGD when `--x` is absent, required for MSE.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Approximation point set (CSV).
    #[arg(long)]
    pub x: Option<PathBuf>,
    /// Reference point set (CSV); default is a scalarization sweep of `--problem`.
    #[arg(long)]
    pub y: Option<PathBuf>,
    #[arg(long)]
    pub problem: Option<String>,
    /// Points sampled from the model, and weights for MSE.
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Lattice bound for the sweep reference.
    #[arg(long, default_value_t = 1000)]
    pub validation_size: usize,
}

#[derive(Args, Debug)]
pub struct DiagnosticsArgs {
    /// perturb, gengap or lemma.
    #[arg(long)]
    pub mode: String,
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Perturbed iterations k (perturb mode); comma-separated.
    #[arg(long = "k", value_delimiter = ',', default_value = "25")]
    pub perturb_k: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    pub repeats: usize,
    /// Held-out weights (gengap mode).
    #[arg(long, default_value_t = 10_000)]
    pub holdout: usize,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}
