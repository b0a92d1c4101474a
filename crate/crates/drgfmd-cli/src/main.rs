//! Command-line front end: configure, run, verify, and export.
//!
//! Exit codes: 0 success, 1 verification failure, 2 configuration error,
//! 3 runtime abort.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use drgfmd::config::ExperimentConfig;
use drgfmd::lab::{self, suites};
use drgfmd::report;
use drgfmd::solver::SolverError;
use drgfmd::verify;

const EXIT_VERIFY_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(
    name = "drgfmd",
    about = "Distributed gradient-free mirror descent simulation laboratory",
    version
)]
struct Cli {
    /// Override trials.base_seed from the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override trials.count from the configuration.
    #[arg(long, global = true)]
    trials: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a configuration file.
    Run {
        /// Path to a `key = value` configuration document.
        config: PathBuf,
    },
    /// Run every module's property suite and report pass/fail per name.
    Verify,
    /// Run a canned experiment suite.
    Suite {
        /// One of: convergence-consensus, dimension-sweep, delta-sweep,
        /// algorithm-comparison, strongly-convex.
        id: String,
        /// Output directory (default `out`).
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config } => cmd_run(&config, cli.seed, cli.trials),
        Command::Verify => cmd_verify(),
        Command::Suite { id, out } => cmd_suite(&id, &out, cli.seed, cli.trials),
    }
}

fn config_error(message: impl std::fmt::Display) -> ExitCode {
    eprintln!("configuration error: {message}");
    ExitCode::from(EXIT_CONFIG)
}

fn runtime_error(message: impl std::fmt::Display) -> ExitCode {
    eprintln!("runtime error: {message}");
    ExitCode::from(EXIT_RUNTIME)
}

/// Errors surfacing from component construction are configuration
/// mistakes (bad schedules, mismatched variants, disconnected windows);
/// anything after that is a runtime abort.
fn cmd_run(config_path: &PathBuf, seed: Option<u64>, trials: Option<usize>) -> ExitCode {
    let text = match std::fs::read_to_string(config_path) {
        Ok(t) => t,
        Err(e) => return config_error(format!("{}: {e}", config_path.display())),
    };
    let mut config = match ExperimentConfig::parse(&text) {
        Ok(c) => c,
        Err(e) => return config_error(e),
    };
    config.apply_overrides(seed, trials);
    let parts = match config.build() {
        Ok(p) => p,
        Err(e) => return config_error(e),
    };

    let experiment = parts.experiment();
    let summary = match experiment.trial_average(parts.trials) {
        Ok(s) => s,
        Err(e) => return runtime_error(e),
    };
    let overlay = match experiment.bound(parts.trials) {
        Ok(tagged) => match lab::bound_overlay(&summary, &tagged) {
            Ok(m) => Some(m),
            Err(e) => return runtime_error(e),
        },
        // Not every configuration has a matching bound family.
        Err(lab::LabError::Solver(SolverError::UnsupportedBound(_))) => None,
        Err(e) => return runtime_error(e),
    };

    if let Err(e) = std::fs::create_dir_all(&parts.out_dir) {
        return runtime_error(format!("{}: {e}", parts.out_dir.display()));
    }
    let rows = lab::summary_rows_with_fingerprint(
        config.fingerprint(),
        "run",
        &summary,
        overlay.as_ref(),
    );
    let csv_path = parts.out_dir.join("run.csv");
    if let Err(e) = report::write_csv(&csv_path, &rows) {
        return runtime_error(e);
    }
    let svg_path = parts.out_dir.join("run.svg");
    let plots = lab::summary_plots("run", &summary, overlay.as_ref());
    if let Err(e) = report::write_svg(&svg_path, &plots) {
        return runtime_error(e);
    }
    println!(
        "wrote {} and {} ({} trials, fingerprint {:016x})",
        csv_path.display(),
        svg_path.display(),
        summary.n_trials,
        config.fingerprint()
    );
    ExitCode::SUCCESS
}

fn cmd_verify() -> ExitCode {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match verify::run_all(&mut out) {
        Ok(report) => {
            if report.all_ok() {
                println!(
                    "verify: {} passed, {} inconclusive",
                    report.passed.len(),
                    report.inconclusive.len()
                );
                ExitCode::SUCCESS
            } else {
                eprintln!("verify: {} properties failed", report.failed.len());
                ExitCode::from(EXIT_VERIFY_FAILED)
            }
        }
        Err(e) => runtime_error(e),
    }
}

fn cmd_suite(id: &str, out: &PathBuf, seed: Option<u64>, trials: Option<usize>) -> ExitCode {
    let Some(suite) = suites::SuiteId::parse(id) else {
        return config_error(format!(
            "unknown suite `{id}`; expected one of: {}",
            suites::SuiteId::all()
                .iter()
                .map(|s| s.as_str())
                .collect::<Vec<_>>()
                .join(", ")
        ));
    };
    let mut opts = suites::SuiteOptions::default();
    if let Some(s) = seed {
        opts.base_seed = s;
    }
    if let Some(t) = trials {
        opts.trials = t;
    }
    match lab::run_paper_suite(suite, out, opts) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => runtime_error(e),
    }
}
