//! Seeded ensemble checks of the structural properties of MINBS.
//!
//! Sample `i` of an ensemble with seed `s` is drawn from a generator seeded
//! with `s + i`, so any failing sample can be rerun alone as an ensemble of
//! one with its own seed.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{measurement_value, minbs, minbs_both_nondegenerate, property_vi_check, MeasureOptions};
use crate::optimizer::haar_unitary;
use crate::qmatrix::Matrix;
use crate::scalar::Real;
use crate::states::{
    classical_quantum, quantum_classical, random_density, random_product, BilocalInput, DensityMatrix, QcComponent,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    PropertyI,
    PropertyIi,
    PropertyIv,
    PropertyVi,
    BoundT2,
    Thm4Consistency,
}

impl Check {
    pub const ALL: [Check; 6] = [
        Check::PropertyI,
        Check::PropertyIi,
        Check::PropertyIv,
        Check::PropertyVi,
        Check::BoundT2,
        Check::Thm4Consistency,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Check::PropertyI => "property_i",
            Check::PropertyIi => "property_ii",
            Check::PropertyIv => "property_iv",
            Check::PropertyVi => "property_vi",
            Check::BoundT2 => "bound_t2",
            Check::Thm4Consistency => "thm4_consistency",
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Check {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Check::ALL
            .into_iter()
            .find(|c| c.as_str() == s.trim())
            .ok_or_else(|| Error::OutOfRange(format!("unknown check '{s}'")))
    }
}

/// Random bilocal inputs with sources of dims `(m, n)` and `(u, v)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ensemble {
    pub count: usize,
    pub dims: [usize; 4],
    /// Rank of each random source; `None` means full rank.
    pub rank: Option<usize>,
    pub seed: u64,
}

impl Ensemble {
    pub fn qubits(count: usize, seed: u64) -> Self {
        Self { count, dims: [2, 2, 2, 2], rank: None, seed }
    }

    pub fn sample_seed(&self, index: usize) -> u64 {
        self.seed.wrapping_add(index as u64)
    }

    fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::OutOfRange("ensemble count must be at least 1".into()));
        }
        if self.dims.contains(&0) {
            return Err(Error::OutOfRange("subsystem dimensions must be positive".into()));
        }
        Ok(())
    }
}

/// Pass/fail tally of one check. Slack is the signed margin to the
/// tolerance; negative slack is a failure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub check: Check,
    pub samples: usize,
    pub passed: usize,
    pub failed: usize,
    pub worst_slack: f64,
    pub failing_seeds: Vec<u64>,
}

impl CheckSummary {
    pub fn ok(&self) -> bool {
        self.failed == 0
    }
}

fn random_source<T: Real>(rng: &mut ChaCha8Rng, da: usize, db: usize, rank: Option<usize>) -> Result<DensityMatrix<T>> {
    let d = da * db;
    random_density(d, rank.unwrap_or(d).min(d), rng)?.reshape(vec![da, db])
}

fn random_pair<T: Real>(rng: &mut ChaCha8Rng, e: &Ensemble) -> Result<BilocalInput<T>> {
    let [m, n, u, v] = e.dims;
    BilocalInput::new(random_source(rng, m, n, e.rank)?, random_source(rng, u, v, e.rank)?)
}

fn random_weights(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

fn qc_components<T: Real>(rng: &mut ChaCha8Rng, d_quantum: usize, d_classical: usize) -> Result<Vec<QcComponent<T>>> {
    random_weights(rng, d_classical)
        .into_iter()
        .enumerate()
        .map(|(index, w)| {
            Ok(QcComponent {
                rho_a: random_density(d_quantum, d_quantum, rng)?.matrix().clone(),
                weight: T::lit(w),
                index,
            })
        })
        .collect()
}

/// Slack of one sample.
pub fn check_sample<T: Real>(check: Check, e: &Ensemble, seed: u64, opts: &MeasureOptions) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let [m, n, u, v] = e.dims;
    Ok(match check {
        Check::PropertyI => {
            let input = BilocalInput::new(
                random_product::<T, _>(m, n, &mut rng)?.reshape(vec![m, n])?,
                random_product::<T, _>(u, v, &mut rng)?.reshape(vec![u, v])?,
            )?;
            1e-9 - minbs(&input, opts)?.value.as_f64()
        }
        Check::PropertyIi => {
            let ab = quantum_classical::<T>(&qc_components(&mut rng, m, n)?, n)?;
            let cd = classical_quantum::<T>(&qc_components(&mut rng, v, u)?, u)?;
            1e-9 - minbs(&BilocalInput::new(ab, cd)?, opts)?.value.as_f64()
        }
        Check::PropertyIv => {
            let input = random_pair::<T>(&mut rng, e)?;
            let us: [Matrix<T>; 4] = [
                haar_unitary(m, &mut rng),
                haar_unitary(n, &mut rng),
                haar_unitary(u, &mut rng),
                haar_unitary(v, &mut rng),
            ];
            let before = minbs(&input, opts)?.value.as_f64();
            let after = minbs(&input.conjugate_local(&us)?, opts)?.value.as_f64();
            1e-7 - (before - after).abs()
        }
        Check::PropertyVi => {
            let rho = random_source::<T>(&mut rng, m, n, e.rank)?;
            let r = property_vi_check(&rho, opts)?;
            (r.lhs - r.rhs).as_f64() + 1e-7
        }
        Check::BoundT2 => {
            let r = minbs(&random_pair::<T>(&mut rng, e)?, opts)?;
            let t2 = r.bounds.and_then(|b| b.t2_upper).expect("minbs always reports t2").as_f64();
            t2 + 1e-8 - r.value.as_f64()
        }
        Check::Thm4Consistency => {
            let input = random_pair::<T>(&mut rng, e)?;
            let r = minbs_both_nondegenerate(&input, opts)?;
            let m = r.optimal_measurement.as_ref().expect("closed form reports its measurement");
            let direct = measurement_value(&input, m)?.as_f64();
            let t2 = r.bounds.and_then(|b| b.t2_upper).expect("t2 reported").as_f64();
            (1e-9 - (r.value.as_f64() - direct).abs()).min(t2 + 1e-8 - r.value.as_f64())
        }
    })
}

pub fn run_check<T: Real>(check: Check, e: &Ensemble, opts: &MeasureOptions) -> Result<CheckSummary> {
    e.validate()?;
    let slacks: Vec<(u64, f64)> = (0..e.count)
        .into_par_iter()
        .map(|i| {
            let seed = e.sample_seed(i);
            check_sample::<T>(check, e, seed, opts).map(|s| (seed, s))
        })
        .collect::<Result<_>>()?;
    let failing_seeds: Vec<u64> = slacks.iter().filter(|(_, s)| *s < 0.0).map(|(seed, _)| *seed).collect();
    Ok(CheckSummary {
        check,
        samples: e.count,
        passed: e.count - failing_seeds.len(),
        failed: failing_seeds.len(),
        worst_slack: slacks.iter().map(|(_, s)| *s).fold(f64::INFINITY, f64::min),
        failing_seeds,
    })
}

pub fn run_audit<T: Real>(e: &Ensemble, checks: &[Check], opts: &MeasureOptions) -> Result<Vec<CheckSummary>> {
    checks.iter().map(|&c| run_check::<T>(c, e, opts)).collect()
}
