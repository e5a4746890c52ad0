//! Skew information, skew-information MIN and MINBS.

mod bilocal;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use bilocal::{
    bell_diagonal_h, bell_diagonal_minbs, correlation_objective, measurement_value, minbs, minbs_b_nondegenerate,
    minbs_both_nondegenerate, minbs_pure, property_vi_check, skew_sum, upper_bound_t2, PropertyViCheck,
};

use crate::error::{Error, Result};
use crate::optimizer::InvariantMeasurement;
use crate::optimizer::{invariant_blocks_of, maximize, OptimizerConfig, SandwichObjective};
use crate::qmatrix::{hermitian_eig_with, psd_sqrt_with, Matrix};
use crate::scalar::{Real, Tolerances};
use crate::states::DensityMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    PureClosedForm,
    NondegenerateClosedForm,
    QubitCClosedForm,
    Optimizer,
    BoundOnly,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::PureClosedForm => "pure_closed_form",
            Method::NondegenerateClosedForm => "nondegenerate_closed_form",
            Method::QubitCClosedForm => "qubit_c_closed_form",
            Method::Optimizer => "optimizer",
            Method::BoundOnly => "bound_only",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Bounds<T> {
    pub t2_upper: Option<T>,
    pub t3_upper: Option<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureResult<T> {
    /// In `[0, 1]`.
    pub value: T,
    pub method: Method,
    pub optimal_measurement: Option<InvariantMeasurement<T>>,
    pub bounds: Option<Bounds<T>>,
    pub diagnostics: BTreeMap<String, f64>,
}

/// Clamps `value` to `[0, 1]`, recording clamps above `clamp_warning`.
pub(crate) fn finalize<T: Real>(
    value: T,
    method: Method,
    optimal_measurement: Option<InvariantMeasurement<T>>,
    bounds: Option<Bounds<T>>,
    mut diagnostics: BTreeMap<String, f64>,
    tol: &Tolerances,
) -> MeasureResult<T> {
    let clamped = value.max(T::zero()).min(T::one());
    let moved = (clamped - value).abs().as_f64();
    if moved > tol.clamp_warning {
        log::warn!("measure value {value:e} clamped by {moved:e}");
        diagnostics.insert("clamp_warning".into(), moved);
    }
    MeasureResult { value: clamped, method, optimal_measurement, bounds, diagnostics }
}

/// Tolerances plus optimizer settings shared by the measure entry points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureOptions {
    pub tolerances: Tolerances,
    pub optimizer: OptimizerConfig,
}

impl MeasureOptions {
    /// Defaults tuned for the scalar type `T`.
    pub fn for_scalar<T: Real>() -> Self {
        Self { tolerances: T::tolerances(), optimizer: OptimizerConfig::default() }
    }

    pub fn with_optimizer(mut self, optimizer: OptimizerConfig) -> Self {
        self.optimizer = optimizer;
        self
    }
}

impl Default for MeasureOptions {
    fn default() -> Self {
        Self::for_scalar::<f64>()
    }
}

/// Spectrum of a reduced state with its degeneracy verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalSpectrum<T> {
    /// Nondecreasing.
    pub eigenvalues: Vec<T>,
    pub degenerate: bool,
    pub gap_tolerance: f64,
}

impl<T: Real> MarginalSpectrum<T> {
    /// Degenerate when an adjacent gap is below
    /// `gap_tolerance * max(1, spectral range)`.
    pub fn of(rho: &DensityMatrix<T>, gap_tolerance: f64) -> Result<Self> {
        let eigenvalues = rho.eigen()?.values;
        let mut s = Self { eigenvalues, degenerate: false, gap_tolerance };
        s.degenerate = s.min_gap().is_some_and(|g| g < s.threshold(gap_tolerance));
        Ok(s)
    }

    fn threshold(&self, gap: f64) -> f64 {
        let range = match (self.eigenvalues.first(), self.eigenvalues.last()) {
            (Some(&lo), Some(&hi)) => (hi - lo).as_f64(),
            _ => 0.0,
        };
        gap * range.max(1.0)
    }

    pub fn min_gap(&self) -> Option<f64> {
        self.eigenvalues.windows(2).map(|w| (w[1] - w[0]).as_f64()).reduce(f64::min)
    }

    /// Nondegenerate, but with a gap below `near_gap`.
    pub fn near_degenerate(&self, near_gap: f64) -> bool {
        !self.degenerate && self.min_gap().is_some_and(|g| g < self.threshold(near_gap))
    }
}

/// Wigner-Yanase skew information `tr(ρK²) - tr(√ρ K √ρ K)`.
pub fn skew_information<T: Real>(rho: &DensityMatrix<T>, k: &Matrix<T>) -> Result<T> {
    skew_information_with(rho, k, &T::tolerances())
}

pub fn skew_information_with<T: Real>(rho: &DensityMatrix<T>, k: &Matrix<T>, tol: &Tolerances) -> Result<T> {
    if !k.is_square() || k.rows() != rho.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} observable for a state of dimension {}",
            k.rows(),
            k.cols(),
            rho.dim()
        )));
    }
    let dev = k.hermiticity_deviation().as_f64();
    if dev > tol.hermitian {
        return Err(Error::NotHermitian { deviation: dev });
    }
    let s = psd_sqrt_with(rho.matrix(), tol)?;
    let k2 = k * k;
    let sk = &s * k;
    let value = rho.matrix().trace_product(&k2).re - sk.trace_product(&sk).re;
    if value.as_f64() < -tol.imag_residue {
        return Err(Error::NumericalFailure(format!("negative skew information {value:e}")));
    }
    Ok(value.max(T::zero()))
}

/// Skew-information MIN: maximal `Σ_k I(ρ, Π_k ⊗ I)` over measurements on
/// the first factor that leave `ρ_A` invariant.
pub fn min_s<T: Real>(rho: &DensityMatrix<T>, opts: &MeasureOptions) -> Result<MeasureResult<T>> {
    let tol = &opts.tolerances;
    if rho.dims().len() != 2 {
        return Err(Error::DimensionMismatch("min_s needs a bipartite state".into()));
    }
    let rho_a = rho.marginal(&[0])?;
    let objective = SandwichObjective::local(rho, tol)?;
    let spectrum = MarginalSpectrum::of(&rho_a, tol.degeneracy_gap)?;
    if spectrum.degenerate {
        return maximize(&objective, rho_a.matrix(), tol.degeneracy_gap, &opts.optimizer, tol);
    }
    let structure = invariant_blocks_of(rho_a.matrix(), tol.degeneracy_gap, tol)?;
    let measurement = structure.eigenbasis_measurement();
    let value = T::one() - objective.evaluate(&measurement);
    let mut diagnostics = BTreeMap::new();
    if spectrum.near_degenerate(tol.near_degeneracy_gap) {
        let loose = Tolerances { non_disturbance: tol.near_degeneracy_gap, ..*tol };
        let alt = maximize(&objective, rho_a.matrix(), tol.near_degeneracy_gap, &opts.optimizer, &loose)?;
        diagnostics.insert("closed_form_value".into(), value.as_f64());
        diagnostics.insert("optimizer_value_near_degenerate".into(), alt.value.as_f64());
    }
    Ok(finalize(value, Method::NondegenerateClosedForm, Some(measurement), None, diagnostics, tol))
}

/// Eigenvalues of a symmetric real matrix summed over the `k` smallest.
pub(crate) fn smallest_sum<T: Real>(m: &crate::qmatrix::RealMatrix<T>, k: usize, tol: &Tolerances) -> Result<T> {
    let values = hermitian_eig_with(&m.to_complex(), tol)?.values;
    Ok(values.iter().take(k).copied().sum())
}
