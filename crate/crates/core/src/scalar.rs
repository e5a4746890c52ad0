//! Scalar abstraction shared by every numerical module.
//!
//! All matrix code is written against [`Real`], implemented for `f32` and
//! `f64`. Complex entries are `num_complex::Complex<T>`.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::{Deserialize, Serialize};

/// Real floating-point scalar usable by the library.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + LowerExp + Default + Sum + Send + Sync + 'static
{
    /// Default numerical tolerances for this precision.
    fn tolerances() -> Tolerances;

    /// Converts an `f64` literal. Every `f64` is representable (possibly
    /// rounded) in the supported types, so this never fails.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal conversion")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }
}

impl Real for f64 {
    fn tolerances() -> Tolerances {
        Tolerances::default()
    }
}

impl Real for f32 {
    fn tolerances() -> Tolerances {
        Tolerances {
            hermitian: 1e-5,
            eigen_clamp: 1e-6,
            trace: 1e-5,
            normalization: 1e-5,
            weights: 1e-6,
            imag_residue: 1e-5,
            degeneracy_gap: 1e-4,
            near_degeneracy_gap: 1e-3,
            pure_state: 1e-5,
            measurement: 1e-5,
            non_disturbance: 1e-5,
            clamp_warning: 1e-5,
        }
    }
}

/// Complex scalar over `T`.
pub type C<T> = Complex<T>;

#[inline]
pub(crate) fn c<T: Real>(re: T, im: T) -> C<T> {
    Complex::new(re, im)
}

#[inline]
pub(crate) fn cr<T: Real>(re: T) -> C<T> {
    Complex::new(re, T::zero())
}

/// Numerical tolerances used for validation, clamping and dispatch.
///
/// Stored as `f64` so a single configuration can drive either precision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Max-entry deviation `|H - H^†|` accepted as Hermitian.
    pub hermitian: f64,
    /// Eigenvalues in `[-eigen_clamp, 0)` are treated as zero.
    pub eigen_clamp: f64,
    /// Allowed `|tr ρ - 1|`.
    pub trace: f64,
    /// Allowed deviation of a state-vector norm (or Schmidt weights) from 1.
    pub normalization: f64,
    /// Allowed deviation of probability weights from summing to 1.
    pub weights: f64,
    /// Imaginary residue silently dropped from quantities that are real in
    /// exact arithmetic.
    pub imag_residue: f64,
    /// Adjacent eigenvalue gaps below `degeneracy_gap * max(1, range)` mark a
    /// spectrum as degenerate.
    pub degeneracy_gap: f64,
    /// Gaps below this (but above `degeneracy_gap`) are near-degenerate: the
    /// closed form is used but the optimizer value is reported alongside.
    pub near_degeneracy_gap: f64,
    /// A state with largest eigenvalue `>= 1 - pure_state` is pure.
    pub pure_state: f64,
    /// Orthogonality/completeness tolerance for projective measurements.
    pub measurement: f64,
    /// Allowed `max |Σ_g Π_g ρ Π_g - ρ|` for an invariant measurement.
    pub non_disturbance: f64,
    /// Clamping a measure value by more than this is logged.
    pub clamp_warning: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermitian: 1e-9,
            eigen_clamp: 1e-10,
            trace: 1e-9,
            normalization: 1e-9,
            weights: 1e-12,
            imag_residue: 1e-10,
            degeneracy_gap: 1e-8,
            near_degeneracy_gap: 1e-5,
            pure_state: 1e-9,
            measurement: 1e-10,
            non_disturbance: 1e-9,
            clamp_warning: 1e-8,
        }
    }
}
