mod args;
mod commands;

use std::process::ExitCode;

use bezier_mopt::Error;
use clap::Parser;
use serde_json::json;

use args::{Cli, Command};

fn report(kind: &str, message: &str, code: u8) -> ExitCode {
    let doc = json!({ "error": { "kind": kind, "message": message, "exit_code": code } });
    eprintln!("{doc}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return report("usage", e.to_string().trim_end(), 2),
    };
    let result = match &cli.command {
        Command::Solve(a) => commands::solve(a),
        Command::Experiment(a) => commands::experiment(a),
        Command::Baseline(a) => commands::baseline(a),
        Command::Sample(a) => commands::sample(a),
        Command::Metrics(a) => commands::metrics(a),
        Command::Diagnostics(a) => commands::diagnostics(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(e.kind(), &e.to_string(), exit_code(&e)),
    }
}

fn exit_code(e: &Error) -> u8 {
    if e.is_configuration() {
        2
    } else {
        3
    }
}
