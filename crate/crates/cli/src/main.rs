//! `minbs`: skew-information MIN and MINBS from the command line.
//!
//! Exit codes: 0 success, 1 audit failure, 2 invalid input, 3 numerical
//! failure.

mod commands;
mod error;
mod report;
mod spec;

use std::io::Write;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use minbs_core::audit::{Check, Ensemble};
use minbs_core::optimizer::OptimizerConfig;

use commands::{ComputeArgs, Measure, Precision, Scenario, SweepArgs, SweepMeasure};
use error::CliError;
use report::{Format, RunReport};
use spec::{ObservableSpec, StateSpec};

#[derive(Parser)]
#[command(name = "minbs", version, about = "Skew-information MIN and MINBS of bilocal states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct Output {
    /// Print the full report as JSON.
    #[arg(long, conflicts_with = "csv")]
    json: bool,
    /// Print CSV rows.
    #[arg(long)]
    csv: bool,
    /// Leave wall-clock timing out of the report.
    #[arg(long)]
    omit_timing: bool,
}

impl Output {
    fn format(self) -> Format {
        match (self.json, self.csv) {
            (true, _) => Format::Json,
            (_, true) => Format::Csv,
            _ => Format::Table,
        }
    }
}

#[derive(Args, Clone, Copy)]
struct Search {
    /// Seed for the optimizer and random families.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = OptimizerConfig::default().restarts)]
    restarts: usize,
    /// Sweep limit per restart.
    #[arg(long, default_value_t = OptimizerConfig::default().max_iterations)]
    max_iterations: usize,
    /// Check every accepted optimizer step.
    #[arg(long)]
    audit_steps: bool,
    #[arg(long, value_enum, default_value_t = Precision::F64)]
    precision: Precision,
}

impl Search {
    fn config(self) -> OptimizerConfig {
        OptimizerConfig {
            seed: self.seed,
            restarts: self.restarts,
            max_iterations: self.max_iterations,
            audit: self.audit_steps,
            ..OptimizerConfig::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one measure.
    Compute {
        #[arg(long, value_enum)]
        measure: Measure,
        /// First source (or the single state).
        #[arg(long)]
        a: String,
        /// Second source.
        #[arg(long)]
        b: Option<String>,
        /// Observable for `skew`: sigma_x, sigma_y, sigma_z, JSON or a file.
        #[arg(long)]
        observable: Option<String>,
        #[command(flatten)]
        search: Search,
        #[command(flatten)]
        output: Output,
    },
    /// Evaluate a measure along one family parameter.
    Sweep {
        /// Family template, e.g. `family=werner` or `family=bell_diagonal,l2=0,l3=0`.
        #[arg(long)]
        family: String,
        #[arg(long)]
        param: String,
        #[arg(long)]
        start: f64,
        #[arg(long)]
        stop: f64,
        #[arg(long, default_value_t = 41)]
        steps: usize,
        #[arg(long, value_enum, default_value_t = SweepMeasure::Minbs)]
        measure: SweepMeasure,
        #[arg(long, value_enum, default_value_t = Scenario::SwappedCopy)]
        scenario: Scenario,
        /// Second source for the pair scenario.
        #[arg(long)]
        b: Option<String>,
        #[command(flatten)]
        search: Search,
        #[command(flatten)]
        output: Output,
    },
    /// Check structural properties on a seeded random ensemble.
    Audit {
        #[arg(long, default_value_t = 100)]
        count: usize,
        /// Source dimensions `m,n,u,v`.
        #[arg(long, default_value = "2,2,2,2")]
        dims: String,
        /// Rank of each random source; full rank if omitted.
        #[arg(long)]
        rank: Option<usize>,
        /// Comma-separated checks; all if omitted.
        #[arg(long)]
        checks: Option<String>,
        #[command(flatten)]
        search: Search,
        #[command(flatten)]
        output: Output,
    },
    /// Check state specs against the density-matrix invariants.
    Validate {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
}

fn parse_dims(text: &str) -> Result<[usize; 4], CliError> {
    let parts: Vec<usize> = text
        .split(',')
        .map(|p| p.trim().parse().map_err(|_| CliError::Invalid(format!("bad dimension '{p}'"))))
        .collect::<Result<_, _>>()?;
    parts.try_into().map_err(|_| CliError::Invalid(format!("expected four dimensions, got '{text}'")))
}

fn parse_checks(text: Option<&str>) -> Result<Vec<Check>, CliError> {
    match text {
        None => Ok(Check::ALL.to_vec()),
        Some(t) => t.split(',').map(|c| c.parse::<Check>().map_err(CliError::from)).collect(),
    }
}

/// Runs `f` at the requested precision.
macro_rules! at_precision {
    ($p:expr, $f:ident ( $($arg:expr),* )) => {
        match $p {
            Precision::F64 => commands::$f::<f64>($($arg),*),
            Precision::F32 => commands::$f::<f32>($($arg),*),
        }
    };
}

fn run(command: Command) -> Result<(RunReport, Output), CliError> {
    let started = Instant::now();
    let (mut report, output, row_ms) = match command {
        Command::Compute { measure, a, b, observable, search, output } => {
            let args = ComputeArgs {
                measure,
                a: StateSpec::parse(&a)?,
                b: b.as_deref().map(StateSpec::parse).transpose()?,
                observable: observable.as_deref().map(ObservableSpec::parse).transpose()?,
                seed: search.seed,
                optimizer: search.config(),
            };
            args.optimizer.validate()?;
            (at_precision!(search.precision, compute(&args, search.precision))?, output, Vec::new())
        }
        Command::Sweep { family, param, start, stop, steps, measure, scenario, b, search, output } => {
            let args = SweepArgs {
                family: StateSpec::parse(&family)?,
                param,
                start,
                stop,
                steps,
                measure,
                scenario,
                b: b.as_deref().map(StateSpec::parse).transpose()?,
                seed: search.seed,
                optimizer: search.config(),
            };
            args.optimizer.validate()?;
            let (report, row_ms) = at_precision!(search.precision, sweep(&args, search.precision))?;
            (report, output, row_ms)
        }
        Command::Audit { count, dims, rank, checks, search, output } => {
            let ensemble = Ensemble { count, dims: parse_dims(&dims)?, rank, seed: search.seed };
            let checks = parse_checks(checks.as_deref())?;
            let config = search.config();
            config.validate()?;
            (at_precision!(search.precision, audit(&ensemble, &checks, config, search.precision))?, output, Vec::new())
        }
        Command::Validate { a, b, seed, output } => {
            let a = StateSpec::parse(&a)?;
            let b = b.as_deref().map(StateSpec::parse).transpose()?;
            let mut specs = vec![("a", &a)];
            if let Some(b) = &b {
                specs.push(("b", b));
            }
            (commands::validate(&specs, seed)?, output, Vec::new())
        }
    };
    report.check_finite()?;
    if !output.omit_timing {
        commands::stamp(&mut report, started, row_ms);
    }
    Ok((report, output))
}

fn emit(report: &RunReport, output: Output) -> Result<(), CliError> {
    let text = report.render(output.format())?;
    let mut stdout = std::io::stdout().lock();
    stdout.write_all(text.as_bytes())?;
    stdout.flush()?;
    Ok(())
}

/// Exit status once the report is out: audits and validations carry their
/// verdict in the payload.
fn verdict(report: &RunReport) -> Result<(), CliError> {
    match &report.payload {
        report::Payload::Audit { checks, .. } => {
            let failed = checks.iter().filter(|c| !c.ok()).count();
            if failed > 0 {
                return Err(CliError::AuditFailed(failed));
            }
        }
        report::Payload::Validate { passed: false, states } => {
            let bad: Vec<&str> = states.iter().filter(|s| !s.failures.is_empty()).map(|s| s.role.as_str()).collect();
            return Err(CliError::Invalid(format!("invalid state(s): {}", bad.join(", "))));
        }
        _ => {}
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let outcome = run(cli.command).and_then(|(report, output)| {
        emit(&report, output)?;
        verdict(&report)
    });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("minbs: {e}");
            if let CliError::InvalidState(r) = &e {
                if let Ok(text) = serde_json::to_string_pretty(r) {
                    eprintln!("{text}");
                }
            }
            ExitCode::from(e.exit_code())
        }
    }
}
