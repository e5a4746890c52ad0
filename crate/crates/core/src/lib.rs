//! Measurement-induced nonlocality and nonbilocality based on
//! Wigner-Yanase skew information.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); the
//! aliases below fix the common `f64` instantiation.
//!
//! ```
//! use minbs_core::{measures, states, BilocalInput64};
//!
//! let phi = states::bell::<f64>(states::BellKind::PhiPlus);
//! let input = BilocalInput64::new(phi.clone(), phi).unwrap();
//! let r = measures::minbs(&input, &measures::MeasureOptions::default()).unwrap();
//! assert!((r.value - 0.75).abs() < 1e-12);
//! ```

pub mod audit;
pub mod error;
pub mod measures;
pub mod operator_basis;
pub mod optimizer;
pub mod qmatrix;
pub mod scalar;
pub mod states;

pub use error::{Error, Result};
pub use scalar::{Real, Tolerances, C};

pub type ComplexMatrix64 = qmatrix::Matrix<f64>;
pub type ComplexMatrix32 = qmatrix::Matrix<f32>;
pub type RealMatrix64 = qmatrix::RealMatrix<f64>;
pub type DensityMatrix64 = states::DensityMatrix<f64>;
pub type DensityMatrix32 = states::DensityMatrix<f32>;
pub type BilocalInput64 = states::BilocalInput<f64>;
pub type BilocalInput32 = states::BilocalInput<f32>;
pub type MeasureResult64 = measures::MeasureResult<f64>;
pub type InvariantMeasurement64 = optimizer::InvariantMeasurement<f64>;
