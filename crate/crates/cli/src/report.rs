//! Run reports and their three renderings.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use minbs_core::audit::{CheckSummary, Ensemble};
use minbs_core::measures::MeasureResult;
use minbs_core::optimizer::OptimizerConfig;
use minbs_core::states::ValidationReport;
use minbs_core::Real;
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::spec::StateSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Table,
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputEcho {
    pub role: String,
    pub spec: StateSpec,
    pub dims: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureRecord {
    pub measure: String,
    pub value: f64,
    pub method: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t2_upper: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t3_upper: Option<f64>,
    #[serde(default)]
    pub diagnostics: BTreeMap<String, f64>,
    /// Measurement vectors as `[re, im]` entries, one vector per outcome.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measurement: Option<Vec<Vec<[f64; 2]>>>,
}

impl MeasureRecord {
    pub fn from_result<T: Real>(measure: &str, r: &MeasureResult<T>) -> Self {
        let bounds = r.bounds.unwrap_or_default();
        Self {
            measure: measure.to_string(),
            value: r.value.as_f64(),
            method: r.method.as_str().to_string(),
            t2_upper: bounds.t2_upper.map(Real::as_f64),
            t3_upper: bounds.t3_upper.map(Real::as_f64),
            diagnostics: r.diagnostics.clone(),
            measurement: r.optimal_measurement.as_ref().map(|m| {
                m.vectors().iter().map(|v| v.iter().map(|z| [z.re.as_f64(), z.im.as_f64()]).collect()).collect()
            }),
        }
    }

    pub fn direct(measure: &str, value: f64) -> Self {
        Self {
            measure: measure.to_string(),
            value,
            method: "direct".into(),
            t2_upper: None,
            t3_upper: None,
            diagnostics: BTreeMap::new(),
            measurement: None,
        }
    }

    fn numbers(&self) -> impl Iterator<Item = f64> + '_ {
        [self.value]
            .into_iter()
            .chain(self.t2_upper)
            .chain(self.t3_upper)
            .chain(self.diagnostics.values().copied())
            .chain(self.measurement.iter().flatten().flatten().flatten().copied())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub param: f64,
    pub value: f64,
    pub method: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t2_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationEntry {
    pub role: String,
    pub report: ValidationReport,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Payload {
    Compute { result: MeasureRecord },
    Sweep { measure: String, param: String, scenario: String, rows: Vec<SweepRow> },
    Audit { ensemble: Ensemble, passed: bool, checks: Vec<CheckSummary> },
    Validate { passed: bool, states: Vec<ValidationEntry> },
}

/// Wall-clock data; the only part of a report that varies between runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_ms: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub row_ms: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub precision: String,
    pub inputs: Vec<InputEcho>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<OptimizerConfig>,
    pub payload: Payload,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

impl RunReport {
    pub fn new(command: &str, seed: u64, precision: &str, payload: Payload) -> Self {
        Self {
            tool: "minbs".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed,
            precision: precision.into(),
            inputs: Vec::new(),
            optimizer: None,
            payload,
            timing: None,
        }
    }

    /// Fails with a numerical error if any reported number is not finite.
    pub fn check_finite(&self) -> Result<(), CliError> {
        let numbers: Vec<f64> = match &self.payload {
            Payload::Compute { result } => result.numbers().collect(),
            Payload::Sweep { rows, .. } => {
                rows.iter().flat_map(|r| [r.param, r.value].into_iter().chain(r.t2_bound)).collect()
            }
            Payload::Audit { checks, .. } => checks.iter().map(|c| c.worst_slack).collect(),
            Payload::Validate { .. } => Vec::new(),
        };
        match numbers.iter().find(|x| !x.is_finite()) {
            Some(x) => Err(CliError::Numerical(format!("non-finite value {x} in report"))),
            None => Ok(()),
        }
    }

    pub fn render(&self, format: Format) -> Result<String, CliError> {
        Ok(match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(self).map_err(|e| CliError::Numerical(e.to_string()))?;
                s.push('\n');
                s
            }
            Format::Csv => self.csv(),
            Format::Table => self.table(),
        })
    }

    fn csv(&self) -> String {
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        let mut out = String::new();
        match &self.payload {
            Payload::Compute { result } => {
                out.push_str("measure,value,method,t2_bound,t3_bound\n");
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    result.measure,
                    result.value,
                    result.method,
                    opt(result.t2_upper),
                    opt(result.t3_upper)
                );
            }
            Payload::Sweep { rows, .. } => {
                out.push_str("param,value,method,t2_bound,wall_ms\n");
                let row_ms = self.timing.as_ref().map(|t| t.row_ms.as_slice()).unwrap_or_default();
                for (i, r) in rows.iter().enumerate() {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{}",
                        r.param,
                        r.value,
                        r.method,
                        opt(r.t2_bound),
                        opt(row_ms.get(i).copied())
                    );
                }
            }
            Payload::Audit { checks, .. } => {
                out.push_str("check,samples,passed,failed,worst_slack,failing_seeds\n");
                for c in checks {
                    let seeds: Vec<String> = c.failing_seeds.iter().map(u64::to_string).collect();
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{}",
                        c.check,
                        c.samples,
                        c.passed,
                        c.failed,
                        c.worst_slack,
                        seeds.join(" ")
                    );
                }
            }
            Payload::Validate { states, .. } => {
                out.push_str("role,passed,hermiticity_deviation,min_eigenvalue,trace_deviation,failures\n");
                for s in states {
                    let r = &s.report;
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{}",
                        s.role,
                        r.passed(),
                        opt(r.hermiticity_deviation),
                        opt(r.min_eigenvalue),
                        opt(r.trace_deviation),
                        s.failures.join("; ")
                    );
                }
            }
        }
        out
    }

    fn table(&self) -> String {
        let mut out = String::new();
        let _ =
            writeln!(out, "{} {} ({}, seed {}, {})", self.tool, self.command, self.version, self.seed, self.precision);
        for i in &self.inputs {
            let _ = writeln!(out, "  {:<4} {} dims {:?}", i.role, i.spec, i.dims);
        }
        match &self.payload {
            Payload::Compute { result } => {
                let _ = writeln!(out, "{:<28} {}", "measure", result.measure);
                let _ = writeln!(out, "{:<28} {:.12}", "value", result.value);
                let _ = writeln!(out, "{:<28} {}", "method", result.method);
                if let Some(t2) = result.t2_upper {
                    let _ = writeln!(out, "{:<28} {t2:.12}", "t2 upper bound");
                }
                if let Some(t3) = result.t3_upper {
                    let _ = writeln!(out, "{:<28} {t3:.12}", "t3 upper bound");
                }
                for (k, v) in &result.diagnostics {
                    let _ = writeln!(out, "  {k:<26} {v}");
                }
            }
            Payload::Sweep { measure, param, scenario, rows } => {
                let _ = writeln!(out, "{measure} over {param} ({scenario})");
                let _ = writeln!(out, "{:>12} {:>16} {:>16}  method", param, "value", "t2 bound");
                for r in rows {
                    let t2 = r.t2_bound.map(|x| format!("{x:.10}")).unwrap_or_else(|| "-".into());
                    let _ = writeln!(out, "{:>12.6} {:>16.10} {:>16}  {}", r.param, r.value, t2, r.method);
                }
            }
            Payload::Audit { ensemble, passed, checks } => {
                let _ = writeln!(
                    out,
                    "ensemble: {} samples, dims {:?}, rank {}, seed {}",
                    ensemble.count,
                    ensemble.dims,
                    ensemble.rank.map(|r| r.to_string()).unwrap_or_else(|| "full".into()),
                    ensemble.seed
                );
                for c in checks {
                    let status = if c.ok() { "PASS" } else { "FAIL" };
                    let _ = writeln!(
                        out,
                        "  {status} {:<18} {}/{} worst slack {:.3e}",
                        c.check.as_str(),
                        c.passed,
                        c.samples,
                        c.worst_slack
                    );
                    if !c.failing_seeds.is_empty() {
                        let _ = writeln!(out, "       failing seeds {:?}", c.failing_seeds);
                    }
                }
                let _ = writeln!(out, "overall: {}", if *passed { "PASS" } else { "FAIL" });
            }
            Payload::Validate { passed, states } => {
                for s in states {
                    let r = &s.report;
                    let _ = writeln!(
                        out,
                        "  {:<4} {} hermiticity {} min eigenvalue {} trace deviation {}",
                        s.role,
                        if r.passed() { "valid  " } else { "INVALID" },
                        fmt_opt(r.hermiticity_deviation),
                        fmt_opt(r.min_eigenvalue),
                        fmt_opt(r.trace_deviation)
                    );
                    for f in &s.failures {
                        let _ = writeln!(out, "       {f}");
                    }
                }
                let _ = writeln!(out, "overall: {}", if *passed { "valid" } else { "invalid" });
            }
        }
        if let Some(t) = &self.timing {
            let _ = writeln!(out, "wall time {:.1} ms", t.wall_ms);
        }
        out
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.3e}")).unwrap_or_else(|| "-".into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_is_exact() {
        let mut diagnostics = BTreeMap::new();
        diagnostics.insert("restart_best".to_string(), 0.1 + 0.2);
        let record = MeasureRecord {
            measure: "minbs".into(),
            value: 1.0 / 3.0,
            method: "optimizer".into(),
            t2_upper: Some(std::f64::consts::FRAC_1_SQRT_2),
            t3_upper: None,
            diagnostics,
            measurement: Some(vec![vec![[0.6, -0.8], [1e-300, 0.0]]]),
        };
        let mut report = RunReport::new("compute", 7, "f64", Payload::Compute { result: record });
        report.inputs.push(InputEcho {
            role: "a".into(),
            spec: StateSpec::parse("family=werner,v=0.1").unwrap(),
            dims: vec![2, 2],
        });
        report.timing = Some(Timing { wall_ms: 1.5, row_ms: Vec::new() });
        let text = report.render(Format::Json).unwrap();
        let back: RunReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, report);
        assert_eq!(back.render(Format::Json).unwrap(), text);
    }

    #[test]
    fn non_finite_values_are_numerical_failures() {
        let report =
            RunReport::new("compute", 0, "f64", Payload::Compute { result: MeasureRecord::direct("skew", f64::NAN) });
        assert_eq!(report.check_finite().unwrap_err().exit_code(), 3);
    }
}
