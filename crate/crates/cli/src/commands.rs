//! Subcommand implementations. Each returns a report without timing; the
//! caller stamps the wall clock.

use std::time::Instant;

use log::info;
use minbs_core::audit::{run_audit, Check, Ensemble};
use minbs_core::measures::{bell_diagonal_minbs, min_s, minbs, skew_information, upper_bound_t2, MeasureOptions};
use minbs_core::operator_basis::{bilocal_correlation_matrix, gell_mann_correlation};
use minbs_core::optimizer::OptimizerConfig;
use minbs_core::states::{BilocalInput, DensityMatrix};
use minbs_core::Real;

use crate::error::CliError;
use crate::report::{InputEcho, MeasureRecord, Payload, RunReport, SweepRow, Timing, ValidationEntry};
use crate::spec::{ObservableSpec, StateSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Measure {
    Skew,
    #[value(name = "min_s", alias = "min-s")]
    MinS,
    Minbs,
}

impl Measure {
    fn as_str(self) -> &'static str {
        match self {
            Measure::Skew => "skew",
            Measure::MinS => "min_s",
            Measure::Minbs => "minbs",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SweepMeasure {
    #[value(name = "min_s", alias = "min-s")]
    MinS,
    Minbs,
    /// Bell-measurement closed form for Bell-diagonal families.
    BellClosedForm,
}

impl SweepMeasure {
    fn as_str(self) -> &'static str {
        match self {
            SweepMeasure::MinS => "min_s",
            SweepMeasure::Minbs => "minbs",
            SweepMeasure::BellClosedForm => "bell-closed-form",
        }
    }
}

/// How a swept single-source state becomes a bilocal input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Scenario {
    /// `ρ_BA ⊗ ρ_AB`.
    SwappedCopy,
    /// `ρ_AB ⊗ ρ_AB`.
    Copy,
    /// Swept state as the first source, `--b` as the second.
    Pair,
}

impl Scenario {
    fn as_str(self) -> &'static str {
        match self {
            Scenario::SwappedCopy => "swapped-copy",
            Scenario::Copy => "copy",
            Scenario::Pair => "pair",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Precision {
    F32,
    #[default]
    F64,
}

impl Precision {
    pub fn as_str(self) -> &'static str {
        match self {
            Precision::F32 => "f32",
            Precision::F64 => "f64",
        }
    }
}

pub struct ComputeArgs {
    pub measure: Measure,
    pub a: StateSpec,
    pub b: Option<StateSpec>,
    pub observable: Option<ObservableSpec>,
    pub seed: u64,
    pub optimizer: OptimizerConfig,
}

pub struct SweepArgs {
    pub family: StateSpec,
    pub param: String,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
    pub measure: SweepMeasure,
    pub scenario: Scenario,
    pub b: Option<StateSpec>,
    pub seed: u64,
    pub optimizer: OptimizerConfig,
}

fn options<T: Real>(optimizer: OptimizerConfig) -> MeasureOptions {
    MeasureOptions::for_scalar::<T>().with_optimizer(optimizer)
}

fn echo<T: Real>(role: &str, spec: &StateSpec, rho: &DensityMatrix<T>) -> InputEcho {
    InputEcho { role: role.into(), spec: spec.clone(), dims: rho.dims().to_vec() }
}

fn require<'a>(spec: &'a Option<StateSpec>, what: &str) -> Result<&'a StateSpec, CliError> {
    spec.as_ref().ok_or_else(|| CliError::Invalid(format!("{what} is required")))
}

pub fn compute<T: Real>(args: &ComputeArgs, precision: Precision) -> Result<RunReport, CliError> {
    let opts = options::<T>(args.optimizer);
    let a = args.a.resolve::<T>(args.seed)?;
    let mut inputs = vec![echo("a", &args.a, &a)];
    let record = match args.measure {
        Measure::Skew => {
            if args.b.is_some() {
                return Err(CliError::Invalid("skew takes a single state".into()));
            }
            let k = args
                .observable
                .as_ref()
                .ok_or_else(|| CliError::Invalid("skew requires --observable".into()))?
                .resolve::<T>()?;
            MeasureRecord::direct(args.measure.as_str(), skew_information(&a, &k)?.as_f64())
        }
        Measure::MinS => {
            if args.b.is_some() {
                return Err(CliError::Invalid("min_s takes a single state".into()));
            }
            MeasureRecord::from_result(args.measure.as_str(), &min_s(&a, &opts)?)
        }
        Measure::Minbs => {
            let b_spec = require(&args.b, "--b for minbs")?;
            let b = b_spec.resolve::<T>(args.seed)?;
            inputs.push(echo("b", b_spec, &b));
            let input = BilocalInput::new(a, b)?;
            let r = minbs(&input, &opts)?;
            info!("minbs dispatched to {}", r.method);
            MeasureRecord::from_result(args.measure.as_str(), &r)
        }
    };
    let mut report = RunReport::new("compute", args.seed, precision.as_str(), Payload::Compute { result: record });
    report.inputs = inputs;
    report.optimizer = (args.measure != Measure::Skew).then_some(args.optimizer);
    Ok(report)
}

fn sweep_input<T: Real>(
    scenario: Scenario,
    rho: &DensityMatrix<T>,
    b: Option<&DensityMatrix<T>>,
) -> Result<BilocalInput<T>, CliError> {
    Ok(match scenario {
        Scenario::SwappedCopy => BilocalInput::swapped_copy(rho)?,
        Scenario::Copy => BilocalInput::new(rho.clone(), rho.clone())?,
        Scenario::Pair => BilocalInput::new(rho.clone(), b.expect("checked by caller").clone())?,
    })
}

fn t2_of<T: Real>(input: &BilocalInput<T>) -> Result<f64, CliError> {
    let t = bilocal_correlation_matrix(&gell_mann_correlation(&input.ab)?, &gell_mann_correlation(&input.cd)?);
    let [_, n, u, _] = input.dims();
    Ok(upper_bound_t2(&t.0, n, u)?.as_f64())
}

pub fn grid(start: f64, stop: f64, steps: usize) -> Result<Vec<f64>, CliError> {
    if steps == 0 || !start.is_finite() || !stop.is_finite() {
        return Err(CliError::Invalid("grid needs finite endpoints and at least one step".into()));
    }
    if steps == 1 {
        return Ok(vec![start]);
    }
    let h = (stop - start) / (steps - 1) as f64;
    Ok((0..steps).map(|i| if i + 1 == steps { stop } else { start + h * i as f64 }).collect())
}

/// Returns the report and per-row wall times.
pub fn sweep<T: Real>(args: &SweepArgs, precision: Precision) -> Result<(RunReport, Vec<f64>), CliError> {
    let opts = options::<T>(args.optimizer);
    if args.family.family().is_none() {
        return Err(CliError::Invalid("sweep needs a family spec".into()));
    }
    let b = match args.scenario {
        Scenario::Pair => Some(require(&args.b, "--b for the pair scenario")?.resolve::<T>(args.seed)?),
        _ => None,
    };
    let mut rows = Vec::new();
    let mut row_ms = Vec::new();
    for x in grid(args.start, args.stop, args.steps)? {
        let started = Instant::now();
        let spec = args.family.with_param(&args.param, x)?;
        let rho = spec.resolve::<T>(args.seed)?;
        let row = match args.measure {
            SweepMeasure::MinS => {
                let r = min_s(&rho, &opts)?;
                SweepRow { param: x, value: r.value.as_f64(), method: r.method.as_str().into(), t2_bound: None }
            }
            SweepMeasure::Minbs => {
                let r = minbs(&sweep_input(args.scenario, &rho, b.as_ref())?, &opts)?;
                let t2 = r.bounds.and_then(|b| b.t2_upper).map(Real::as_f64);
                SweepRow { param: x, value: r.value.as_f64(), method: r.method.as_str().into(), t2_bound: t2 }
            }
            SweepMeasure::BellClosedForm => {
                if args.scenario == Scenario::Pair {
                    return Err(CliError::Invalid("bell-closed-form applies to copies of one state".into()));
                }
                let w = spec.bell_weights()?;
                let value = bell_diagonal_minbs(w.map(T::lit))?.as_f64();
                let t2 = t2_of(&sweep_input(args.scenario, &rho, None)?)?;
                SweepRow { param: x, value, method: "bell_closed_form".into(), t2_bound: Some(t2) }
            }
        };
        rows.push(row);
        row_ms.push(started.elapsed().as_secs_f64() * 1e3);
    }
    let payload = Payload::Sweep {
        measure: args.measure.as_str().into(),
        param: args.param.clone(),
        scenario: args.scenario.as_str().into(),
        rows,
    };
    let mut report = RunReport::new("sweep", args.seed, precision.as_str(), payload);
    let rho0 = args.family.with_param(&args.param, args.start)?.resolve::<T>(args.seed)?;
    report.inputs.push(echo("family", &args.family, &rho0));
    if let (Some(spec), Some(b)) = (&args.b, &b) {
        report.inputs.push(echo("b", spec, b));
    }
    report.optimizer = Some(args.optimizer);
    Ok((report, row_ms))
}

pub fn audit<T: Real>(
    ensemble: &Ensemble,
    checks: &[Check],
    optimizer: OptimizerConfig,
    precision: Precision,
) -> Result<RunReport, CliError> {
    let summaries = run_audit::<T>(ensemble, checks, &options::<T>(optimizer))?;
    let passed = summaries.iter().all(|s| s.ok());
    let payload = Payload::Audit { ensemble: *ensemble, passed, checks: summaries };
    let mut report = RunReport::new("audit", ensemble.seed, precision.as_str(), payload);
    report.optimizer = Some(optimizer);
    Ok(report)
}

/// Validation never fails on a bad state; the verdict is in the payload.
pub fn validate(specs: &[(&str, &StateSpec)], seed: u64) -> Result<RunReport, CliError> {
    let mut states = Vec::new();
    let mut inputs = Vec::new();
    for &(role, spec) in specs {
        let report = match spec.resolve::<f64>(seed) {
            Ok(rho) => {
                inputs.push(echo(role, spec, &rho));
                rho.validate()
            }
            Err(CliError::InvalidState(r)) => *r,
            Err(e) => return Err(e),
        };
        let failures = report.failures().into_iter().map(String::from).collect();
        states.push(ValidationEntry { role: role.into(), report, failures });
    }
    let passed = states.iter().all(|s| s.failures.is_empty());
    let mut report = RunReport::new("validate", seed, Precision::F64.as_str(), Payload::Validate { passed, states });
    report.inputs = inputs;
    Ok(report)
}

pub fn stamp(report: &mut RunReport, started: Instant, row_ms: Vec<f64>) {
    report.timing = Some(Timing { wall_ms: started.elapsed().as_secs_f64() * 1e3, row_ms });
}
