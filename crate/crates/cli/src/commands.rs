use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use bezier_mopt::diagnostics::{
    generalization_gap_trials, lemma_quantities, median, perturbation_experiment, trial_seed, TEST_GRID_SIZE,
    TEST_GRID_VERSION,
};
use bezier_mopt::harness::output::{float, provenance_line, read_points_csv, surface_csv};
use bezier_mopt::harness::{run_baseline, run_experiment, ExperimentConfig, ExperimentReport, MetricKind};
use bezier_mopt::metrics::{self, PointSet};
use bezier_mopt::simplex::sample_uniform_simplex;
use bezier_mopt::sweep::validation_set;
use bezier_mopt::{run_surface_gd, BezierSimplex, Error, Problem, Result};
use serde_json::{json, Value};

use crate::args::{BaselineArgs, DiagnosticsArgs, ExperimentArgs, MetricsArgs, SampleArgs, SolveArgs};

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn echo(config: &ExperimentConfig) -> Value {
    serde_json::to_value(config).expect("config serializes")
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json serializes");
    s.push('\n');
    s
}

fn load_model(path: &Path) -> Result<BezierSimplex> {
    BezierSimplex::from_json(&read(path)?)
}

pub fn solve(args: &SolveArgs) -> Result<()> {
    if args.config.samples.as_ref().is_some_and(|s| s.len() != 1) {
        return Err(Error::Config("solve takes a single N".into()));
    }
    let config = args.config.resolve(args.k)?;
    let problem = config.problem()?;
    if config.initial != "zero" {
        return Err(Error::Config(format!("unsupported initial control {:?}", config.initial)));
    }
    let n = *config
        .samples
        .first()
        .ok_or_else(|| Error::Config("N is required".into()))?;
    let solver = config.solver(n, config.root_seed);
    solver.validate(&problem)?;
    let (model, record) = run_surface_gd(&problem, &solver)?;
    let trace_path = args.trace.clone().unwrap_or_else(|| {
        let mut p = args.out.clone().into_os_string();
        p.push(".trace.json");
        PathBuf::from(p)
    });
    let mut model_json = model.to_json();
    model_json.push('\n');
    write(&args.out, &model_json)?;
    let mut echo = echo(&config);
    echo["solve"] = json!({ "samples": n, "seed": config.root_seed });
    let mut trace = record.to_json(echo);
    trace.push('\n');
    write(&trace_path, &trace)?;
    eprintln!(
        "wrote {} and {} ({} iterations, N = {n})",
        args.out.display(),
        trace_path.display(),
        record.iterations.len()
    );
    Ok(())
}

fn write_report(report: &ExperimentReport, config: &ExperimentConfig, dir: &Path, prefix: &str) -> Result<Value> {
    let echo = echo(config);
    write(&dir.join(format!("{prefix}trials.csv")), &report.trials_csv(&echo))?;
    let json = report.aggregate_json(&echo);
    write(
        &dir.join(format!("{prefix}{}", if prefix.is_empty() { "aggregate.json" } else { "report.json" })),
        &pretty(&json),
    )?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    Ok(json)
}

pub fn experiment(args: &ExperimentArgs) -> Result<()> {
    let config = args.config.resolve(args.k)?;
    let report = run_experiment(&config)?;
    write_report(&report, &config, &args.out_dir, "")?;
    print!("{}", report.summary());
    let failed = report.rows.iter().filter(|r| !r.ok()).count();
    if failed == report.rows.len() {
        return Err(Error::Numerical(format!("all {failed} trials failed")));
    }
    Ok(())
}

pub fn baseline(args: &BaselineArgs) -> Result<()> {
    let config = args.config.resolve(args.k)?;
    let outcome = run_baseline(&config)?;
    let mut json = write_report(&outcome.report, &config, &args.out_dir, "baseline_")?;
    for fit in &outcome.fits {
        let mut text = fit.model.to_json();
        text.push('\n');
        write(&args.out_dir.join(format!("baseline_model_p{}.json", fit.population)), &text)?;
    }
    json["fits"] = serde_json::to_value(&outcome.fits).expect("fits serialize");
    print!("{}", outcome.report.summary());
    if args.compare {
        let proposed = run_experiment(&config)?;
        json["comparison"] = comparison(&outcome.report, &proposed);
        print!("{}", proposed.summary());
    }
    write(&args.out_dir.join("baseline_report.json"), &pretty(&json))?;
    match outcome.errors.into_iter().next() {
        Some((_, e)) => Err(e),
        None => Ok(()),
    }
}

/// Baseline and proposed aggregates per metric, side by side.
fn comparison(baseline: &ExperimentReport, proposed: &ExperimentReport) -> Value {
    let rows: Vec<Value> = baseline
        .aggregates
        .iter()
        .map(|a| {
            json!({
                "metric": a.metric,
                "method": "baseline",
                "size": a.size,
                "mean": a.mean,
                "sd": a.sd,
            })
        })
        .chain(proposed.aggregates.iter().map(|a| {
            json!({
                "metric": a.metric,
                "method": "proposed",
                "size": a.size,
                "mean": a.mean,
                "sd": a.sd,
            })
        }))
        .collect();
    json!({
        "baseline_method": baseline.method,
        "proposed_method": proposed.method,
        "rows": rows,
    })
}

pub fn sample(args: &SampleArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let ts = sample_uniform_simplex(model.objectives(), args.n, args.seed)?;
    let config = json!({
        "model": args.model.display().to_string(),
        "n": args.n,
        "seed": args.seed,
    });
    let text = provenance_line(&config) + &surface_csv(&model, &ts)?;
    match &args.out {
        Some(path) => write(path, &text),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(Error::from),
    }
}

pub fn metrics(args: &MetricsArgs) -> Result<()> {
    let kinds: Vec<MetricKind> = args.metrics.iter().map(|m| MetricKind::parse(m)).collect::<Result<_>>()?;
    let problem: Option<Problem> = args.problem.as_deref().map(Problem::from_name).transpose()?;
    let model = args.model.as_deref().map(load_model).transpose()?;
    let mut out = json!({ "tool": bezier_mopt::VERSION });
    let needs_sets = kinds.iter().any(|k| *k != MetricKind::Mse);
    if needs_sets {
        let x = match (&args.x, &model) {
            (Some(path), _) => PointSet::new(path.display().to_string(), read_points_csv(&read(path)?)?)?,
            (None, Some(m)) => PointSet::from_model(m, args.n, args.seed)?,
            (None, None) => return Err(Error::Config("gd/igd need --x or --model".into())),
        };
        let (y, reference) = match (&args.y, &problem) {
            (Some(path), _) => (
                PointSet::new(path.display().to_string(), read_points_csv(&read(path)?)?)?,
                json!({ "file": path.display().to_string() }),
            ),
            (None, Some(p)) => {
                let v = validation_set(p, args.validation_size)?;
                let info = json!({
                    "construction": "scalarization sweep over a simplex lattice (substitute for an evolutionary reference set)",
                    "points": v.points.len(),
                    "non_converged": v.non_converged,
                });
                (v.points, info)
            }
            (None, None) => return Err(Error::Config("gd/igd need --y or --problem".into())),
        };
        out["reference"] = reference;
        out["x_points"] = json!(x.len());
        for k in &kinds {
            match k {
                MetricKind::Gd => out["gd"] = json!(metrics::gd(&x, &y)?),
                MetricKind::Igd => out["igd"] = json!(metrics::igd(&x, &y)?),
                MetricKind::Mse => {}
            }
        }
    }
    if kinds.contains(&MetricKind::Mse) {
        let (Some(m), Some(p)) = (&model, &problem) else {
            return Err(Error::Config("mse needs --model and --problem".into()));
        };
        out["mse"] = json!(metrics::mse(m, p, args.n, args.seed)?);
    }
    print!("{}", pretty(&out));
    Ok(())
}

pub fn diagnostics(args: &DiagnosticsArgs) -> Result<()> {
    let config = args.config.resolve(None)?;
    match args.mode.as_str() {
        "perturb" => perturb(args, &config),
        "gengap" => gengap(args, &config),
        "lemma" => lemma(args, &config),
        other => Err(Error::Config(format!(
            "unknown diagnostics mode {other:?} (perturb, gengap, lemma)"
        ))),
    }
}

fn perturb(args: &DiagnosticsArgs, config: &ExperimentConfig) -> Result<()> {
    let problem = config.problem()?;
    let echo = echo(config);
    let mut csv = provenance_line(&echo);
    csv.push_str("k,N,repeat,sup_gap,frob_gap,bound_value\n");
    let mut reports = Vec::new();
    let mut medians = Vec::new();
    for &n in &config.samples {
        let solver = config.solver(n, config.root_seed);
        solver.validate(&problem)?;
        for &k in &args.perturb_k {
            let rs = perturbation_experiment(&problem, &solver, k, args.repeats)?;
            for r in &rs {
                csv.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    r.k,
                    r.samples,
                    r.repeat,
                    float(r.sup_gap),
                    float(r.frob_gap),
                    float(r.bound_value)
                ));
            }
            if !rs.is_empty() {
                let sup: Vec<f64> = rs.iter().map(|r| r.sup_gap).collect();
                let frob: Vec<f64> = rs.iter().map(|r| r.frob_gap).collect();
                medians.push(json!({
                    "k": k,
                    "N": n,
                    "median_sup_gap": median(&sup),
                    "median_frob_gap": median(&frob),
                    "bound_holds_all": rs.iter().all(|r| r.bound_holds),
                }));
                println!("N={n:<5} k={k:<5} median sup_gap {}", float(median(&sup)));
            }
            reports.extend(rs);
        }
    }
    write(&args.out_dir.join("perturb.csv"), &csv)?;
    let json = json!({
        "tool": bezier_mopt::VERSION,
        "config": echo,
        "repeats": args.repeats,
        "test_grid": { "size": TEST_GRID_SIZE, "version": TEST_GRID_VERSION },
        "note": "bound_value uses realized constants (min lambda_min, empirical gradient norms, U = 1); bound_holds is informational",
        "summary": medians,
        "reports": reports,
    });
    write(&args.out_dir.join("perturb.json"), &pretty(&json))
}

fn gengap(args: &DiagnosticsArgs, config: &ExperimentConfig) -> Result<()> {
    let problem = config.problem()?;
    if config.trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    let mut settings = Vec::new();
    for &n in &config.samples {
        let solver = config.solver(n, config.root_seed);
        solver.validate(&problem)?;
        let trials = generalization_gap_trials(&problem, &solver, args.holdout, config.trials, config.root_seed)
            ?;
        let mean_abs = trials.iter().map(|g| g.gap.abs()).sum::<f64>() / trials.len() as f64;
        let mean = trials.iter().map(|g| g.gap).sum::<f64>() / trials.len() as f64;
        println!("N={n:<5} mean |gap| {}", float(mean_abs));
        settings.push(json!({
            "N": n,
            "mean_abs_gap": mean_abs,
            "mean_gap": mean,
            "trials": trials,
        }));
    }
    let json = json!({
        "tool": bezier_mopt::VERSION,
        "config": echo(config),
        "holdout": args.holdout,
        "settings": settings,
    });
    write(&args.out_dir.join("gengap.json"), &pretty(&json))
}

fn lemma(args: &DiagnosticsArgs, config: &ExperimentConfig) -> Result<()> {
    let problem = config.problem()?;
    let mut runs = Vec::new();
    let mut violated = Vec::new();
    for &n in &config.samples {
        for i in 0..config.trials {
            let seed = trial_seed(config.root_seed, i);
            let solver = config.solver(n, seed);
            let (_, record) = run_surface_gd(&problem, &solver)?;
            let s = lemma_quantities(&record);
            if !(s.ztg_bound_holds && s.basis_norm_holds && s.partition_holds && s.all_lambda_positive) {
                violated.push(format!("N={n} trial={i}"));
            }
            runs.push(json!({ "N": n, "trial": i, "seed": seed, "summary": s }));
        }
    }
    let json = json!({
        "tool": bezier_mopt::VERSION,
        "config": echo(config),
        "runs": runs,
        "violations": violated,
    });
    write(&args.out_dir.join("lemma.json"), &pretty(&json))?;
    println!("{} runs, {} with a violated inequality", runs.len(), violated.len());
    if violated.is_empty() {
        Ok(())
    } else {
        Err(Error::Numerical(format!("lemma checks failed: {}", violated.join(", "))))
    }
}
