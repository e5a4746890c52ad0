use num_traits::Zero;

use super::InvariantMeasurement;
use crate::error::{Error, Result};
use crate::qmatrix::{kron, psd_sqrt_with, Matrix};
use crate::scalar::{Real, Tolerances, C};
use crate::states::{BilocalInput, DensityMatrix};

/// `Σ_g tr(S Π̃_g S Π̃_g)` with `Π̃_g = I_left ⊗ |g⟩⟨g| ⊗ I_right` and `S`
/// a fixed Hermitian matrix, evaluated one basis vector at a time.
///
/// `S` is cut into `mid x mid` blocks `B_{αβ}` indexed by the outer pair
/// `α = (a, d)`; each vector contributes `Σ_{αβ} |⟨g|B_{αβ}|g⟩|²`.
#[derive(Debug, Clone)]
pub struct SandwichObjective<T> {
    outer: usize,
    mid: usize,
    blocks: Vec<C<T>>,
}

impl<T: Real> SandwichObjective<T> {
    pub fn new(sqrt_rho: &Matrix<T>, left: usize, mid: usize, right: usize) -> Result<Self> {
        let total = left * mid * right;
        if !sqrt_rho.is_square() || sqrt_rho.rows() != total {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix is not {left}*{mid}*{right} square",
                sqrt_rho.rows(),
                sqrt_rho.cols()
            )));
        }
        let outer = left * right;
        let mut blocks = Vec::with_capacity(outer * outer * mid * mid);
        for alpha in 0..outer {
            let (a, d) = (alpha / right, alpha % right);
            for beta in 0..outer {
                let (a2, d2) = (beta / right, beta % right);
                for x in 0..mid {
                    for y in 0..mid {
                        blocks.push(sqrt_rho[((a * mid + x) * right + d, (a2 * mid + y) * right + d2)]);
                    }
                }
            }
        }
        Ok(Self { outer, mid, blocks })
    }

    /// Layout `(m, n·u, v)` with `S = √ρ_AB ⊗ √ρ_CD`.
    pub fn bilocal(input: &BilocalInput<T>, tol: &Tolerances) -> Result<Self> {
        let [m, n, u, v] = input.dims();
        let s = kron(&psd_sqrt_with(input.ab.matrix(), tol)?, &psd_sqrt_with(input.cd.matrix(), tol)?);
        Self::new(&s, m, n * u, v)
    }

    /// Layout `(1, m, n)`: measurement on the first factor of `ρ`.
    pub fn local(rho: &DensityMatrix<T>, tol: &Tolerances) -> Result<Self> {
        let dims = rho.dims();
        if dims.len() != 2 {
            return Err(Error::DimensionMismatch("expected a bipartite state".into()));
        }
        Self::new(&psd_sqrt_with(rho.matrix(), tol)?, 1, dims[0], dims[1])
    }

    pub fn mid(&self) -> usize {
        self.mid
    }

    /// Contribution `Σ_{αβ} |⟨g|B_{αβ}|g⟩|²` of one basis vector.
    pub fn term(&self, g: &[C<T>]) -> T {
        let k = self.mid;
        let sq = k * k;
        let quad = |alpha: usize, beta: usize| {
            let blk = &self.blocks[(alpha * self.outer + beta) * sq..][..sq];
            let mut acc = C::zero();
            for (x, row) in blk.chunks_exact(k).enumerate() {
                let mut w = C::zero();
                for (b, gy) in row.iter().zip(g) {
                    w = w + b * gy;
                }
                acc = acc + g[x].conj() * w;
            }
            acc.norm_sqr()
        };
        let mut diag = T::zero();
        let mut off = T::zero();
        for alpha in 0..self.outer {
            diag = diag + quad(alpha, alpha);
            for beta in alpha + 1..self.outer {
                off = off + quad(alpha, beta);
            }
        }
        // B_{βα} = B_{αβ}^† since S is Hermitian.
        diag + off + off
    }

    pub fn evaluate_vectors(&self, vectors: &[Vec<C<T>>]) -> T {
        vectors.iter().map(|g| self.term(g)).sum()
    }

    pub fn evaluate(&self, measurement: &InvariantMeasurement<T>) -> T {
        self.evaluate_vectors(&measurement.vectors())
    }
}

/// `Σ_g tr(S Π̃_g S Π̃_g)` by explicit lifted projectors and full matrix
/// products.
pub fn lifted_trace_sum<T: Real>(sqrt_rho: &Matrix<T>, left: usize, right: usize, projectors: &[Matrix<T>]) -> T {
    let il = Matrix::identity(left);
    let ir = Matrix::identity(right);
    projectors
        .iter()
        .map(|p| {
            let lifted = kron(&kron(&il, p), &ir);
            let half = sqrt_rho * &lifted;
            half.trace_product(&half).re
        })
        .sum()
}

/// Objective for a four-party state of dims `(m, n, u, v)` with the
/// measurement on the middle `n·u` factor, via the square root of the full
/// matrix.
pub fn objective<T: Real>(rho_full: &DensityMatrix<T>, measurement: &InvariantMeasurement<T>) -> Result<T> {
    let dims = rho_full.dims();
    if dims.len() != 4 || measurement.reference_dim != dims[1] * dims[2] {
        return Err(Error::DimensionMismatch(format!(
            "measurement on dimension {} for a state with dims {dims:?}",
            measurement.reference_dim
        )));
    }
    let s = psd_sqrt_with(rho_full.matrix(), &T::tolerances())?;
    Ok(lifted_trace_sum(&s, dims[0], dims[3], &measurement.projectors()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::{haar_unitary, invariant_blocks};
    use crate::states::{bell, classical_separable, random_density, BellKind};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn full_measurement(u: Matrix<f64>) -> InvariantMeasurement<f64> {
        let rho = DensityMatrix::new(Matrix::identity(u.rows()).scale(1.0 / u.rows() as f64), vec![u.rows()]).unwrap();
        let mut m = invariant_blocks(&rho, 1e-8).unwrap().eigenbasis_measurement();
        let v = m.blocks[0].basis.adjoint();
        m.block_unitaries[0] = &v * &u;
        m
    }

    #[test]
    fn blocked_matches_explicit() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ab = random_density::<f64, _>(4, 4, &mut rng).unwrap().reshape(vec![2, 2]).unwrap();
        let cd = random_density::<f64, _>(6, 3, &mut rng).unwrap().reshape(vec![2, 3]).unwrap();
        let input = BilocalInput::new(ab, cd).unwrap();
        let fast = SandwichObjective::bilocal(&input, &f64::tolerances()).unwrap();
        let m = full_measurement(haar_unitary(4, &mut rng));
        let direct = objective(&input.full_state(), &m).unwrap();
        assert!((fast.evaluate(&m) - direct).abs() < 1e-12, "{} vs {direct}", fast.evaluate(&m));
    }

    #[test]
    fn bell_pair_with_bell_measurement() {
        let input = BilocalInput::new(bell(BellKind::PhiPlus), bell(BellKind::PhiPlus)).unwrap();
        let cols: Vec<Vec<C<f64>>> = BellKind::ALL.iter().map(|k| k.vector()).collect();
        let mut u = Matrix::zeros(4, 4);
        for (j, v) in cols.iter().enumerate() {
            u.set_column(j, v);
        }
        let m = full_measurement(u);
        assert!((objective(&input.full_state(), &m).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn product_with_eigenbasis_is_one() {
        let input = BilocalInput::new(classical_separable(), classical_separable()).unwrap();
        let m = full_measurement(Matrix::identity(4));
        assert!((objective(&input.full_state(), &m).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_wrong_layout() {
        let rho = bell::<f64>(BellKind::PhiPlus);
        let m = full_measurement(Matrix::identity(4));
        assert!(matches!(objective(&rho, &m), Err(Error::DimensionMismatch(_))));
    }
}
