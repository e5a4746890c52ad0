//! Search over von Neumann measurements that leave a reference state
//! invariant.
//!
//! Admissible measurements are parameterized by one unitary per eigenspace
//! block of the reference state. Each restart draws Haar-random block
//! unitaries and refines them by Givens-rotation coordinate descent.

mod blocks;
mod objective;
mod search;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

pub(crate) use blocks::invariant_blocks_of;
pub use blocks::{invariant_blocks, non_disturbance_deviation, Block, BlockStructure, InvariantMeasurement};
pub use objective::{lifted_trace_sum, objective, SandwichObjective};
pub use search::{
    maximize, maximize_min_s, maximize_min_s_with, maximize_minbs, maximize_minbs_with, search, RestartOutcome,
    SearchOutcome,
};

use crate::error::{Error, Result};
use crate::qmatrix::{qr, Matrix};
use crate::scalar::{c, Real};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub restarts: usize,
    /// Maximum number of sweeps over all rotation pairs per restart.
    pub max_iterations: usize,
    /// Angular resolution of the golden-section refinement.
    pub step_tolerance: f64,
    /// A sweep improving the objective by less than this ends the restart.
    pub value_tolerance: f64,
    pub seed: u64,
    /// Grid points per line scan.
    pub grid_points: usize,
    /// Check the measurement invariants after every accepted step.
    pub audit: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            restarts: 32,
            max_iterations: 2000,
            step_tolerance: 1e-10,
            value_tolerance: 1e-12,
            seed: 0,
            grid_points: 64,
            audit: false,
        }
    }
}

impl OptimizerConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::OutOfRange("restarts must be at least 1".into()));
        }
        if self.grid_points < 3 {
            return Err(Error::OutOfRange("grid_points must be at least 3".into()));
        }
        if !(self.step_tolerance > 0.0 && self.value_tolerance >= 0.0) {
            return Err(Error::OutOfRange("tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// Haar-random `k x k` unitary: QR of a complex Gaussian matrix with the
/// diagonal of `R` made real and positive.
pub fn haar_unitary<T: Real, R: Rng + ?Sized>(k: usize, rng: &mut R) -> Matrix<T> {
    let g = Matrix::from_fn(k, k, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(T::lit(re), T::lit(im))
    });
    qr(&g).0
}
