use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator_basis::check_projective_measurement;
use crate::qmatrix::{hermitian_eig_with, Matrix};
use crate::scalar::{Real, Tolerances, C};
use crate::states::DensityMatrix;

/// One eigenspace cluster of a reference state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block<T> {
    /// Mean of the clustered eigenvalues.
    pub eigenvalue: T,
    /// Orthonormal basis of the cluster, one column per eigenvector.
    pub basis: Matrix<T>,
}

impl<T: Real> Block<T> {
    pub fn size(&self) -> usize {
        self.basis.cols()
    }
}

/// Eigenspace decomposition of a reference state, ascending by eigenvalue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockStructure<T> {
    pub dim: usize,
    pub blocks: Vec<Block<T>>,
}

impl<T: Real> BlockStructure<T> {
    pub fn sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(Block::size).collect()
    }

    /// True when every block is one-dimensional, so the eigenbasis is the
    /// only admissible measurement.
    pub fn is_trivial(&self) -> bool {
        self.blocks.iter().all(|b| b.size() == 1)
    }

    /// Smallest gap between adjacent distinct block eigenvalues.
    pub fn min_gap(&self) -> Option<T> {
        self.blocks.windows(2).map(|w| w[1].eigenvalue - w[0].eigenvalue).reduce(T::min)
    }

    /// The eigenbasis measurement (identity block unitaries).
    pub fn eigenbasis_measurement(&self) -> InvariantMeasurement<T> {
        InvariantMeasurement {
            reference_dim: self.dim,
            block_unitaries: self.blocks.iter().map(|b| Matrix::identity(b.size())).collect(),
            blocks: self.blocks.clone(),
        }
    }
}

/// Clusters the spectrum of `rho_ref`: adjacent eigenvalues closer than
/// `gap_tolerance * max(1, spectral range)` share a block.
pub fn invariant_blocks<T: Real>(rho_ref: &DensityMatrix<T>, gap_tolerance: f64) -> Result<BlockStructure<T>> {
    invariant_blocks_of(rho_ref.matrix(), gap_tolerance, &T::tolerances())
}

pub(crate) fn invariant_blocks_of<T: Real>(
    rho_ref: &Matrix<T>,
    gap_tolerance: f64,
    tol: &Tolerances,
) -> Result<BlockStructure<T>> {
    let eig = hermitian_eig_with(rho_ref, tol)?;
    let n = eig.values.len();
    let range = match (eig.values.first(), eig.values.last()) {
        (Some(&lo), Some(&hi)) => (hi - lo).as_f64(),
        _ => 0.0,
    };
    let threshold = gap_tolerance * range.max(1.0);
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        match groups.last_mut() {
            Some(g) if (eig.values[i] - eig.values[i - 1]).as_f64() < threshold => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    let blocks = groups
        .into_iter()
        .map(|g| {
            let mean = g.iter().map(|&i| eig.values[i]).sum::<T>() / T::lit(g.len() as f64);
            Block { eigenvalue: mean, basis: eig.vectors.select_columns(&g) }
        })
        .collect();
    Ok(BlockStructure { dim: n, blocks })
}

/// A rank-1 projective measurement aligned with the eigenspaces of a
/// reference state: block `b` contributes the columns of `V_b U_b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantMeasurement<T> {
    pub reference_dim: usize,
    pub blocks: Vec<Block<T>>,
    pub block_unitaries: Vec<Matrix<T>>,
}

impl<T: Real> InvariantMeasurement<T> {
    /// Builds a measurement from explicit basis vectors, assigning each to
    /// the block that contains it.
    pub fn from_vectors(structure: &BlockStructure<T>, vectors: &[Vec<C<T>>], tol: &Tolerances) -> Result<Self> {
        if vectors.len() != structure.dim || vectors.iter().any(|v| v.len() != structure.dim) {
            return Err(Error::InvalidMeasurement(format!(
                "expected {} vectors of length {}",
                structure.dim, structure.dim
            )));
        }
        let mut members: Vec<Vec<&Vec<C<T>>>> = vec![Vec::new(); structure.blocks.len()];
        for v in vectors {
            let weights: Vec<T> = structure
                .blocks
                .iter()
                .map(|b| (0..b.size()).map(|j| overlap(&b.basis.column_vec(j), v).norm_sqr()).sum())
                .collect();
            let slack = T::lit(tol.non_disturbance.sqrt());
            let home = weights.iter().position(|&w| (T::one() - w).abs() <= slack).ok_or_else(|| {
                Error::InvalidMeasurement("basis vector straddles eigenspaces of the reference state".into())
            })?;
            members[home].push(v);
        }
        let mut block_unitaries = Vec::with_capacity(structure.blocks.len());
        for (b, vs) in structure.blocks.iter().zip(&members) {
            if vs.len() != b.size() {
                return Err(Error::InvalidMeasurement(format!(
                    "block of size {} received {} vectors",
                    b.size(),
                    vs.len()
                )));
            }
            let u = Matrix::from_fn(b.size(), b.size(), |i, j| overlap(&b.basis.column_vec(i), vs[j]));
            block_unitaries.push(u);
        }
        let m = Self { reference_dim: structure.dim, blocks: structure.blocks.clone(), block_unitaries };
        m.check_unitarity(tol)?;
        Ok(m)
    }

    /// Measurement basis as the columns of a `reference_dim` square matrix.
    pub fn basis(&self) -> Matrix<T> {
        let mut out = Matrix::zeros(self.reference_dim, self.reference_dim);
        let mut col = 0;
        for (b, u) in self.blocks.iter().zip(&self.block_unitaries) {
            let rotated = &b.basis * u;
            for j in 0..b.size() {
                out.set_column(col, &rotated.column_vec(j));
                col += 1;
            }
        }
        out
    }

    pub fn vectors(&self) -> Vec<Vec<C<T>>> {
        let b = self.basis();
        (0..self.reference_dim).map(|j| b.column_vec(j)).collect()
    }

    pub fn projectors(&self) -> Vec<Matrix<T>> {
        self.vectors().iter().map(|v| Matrix::projector(v)).collect()
    }

    fn check_unitarity(&self, tol: &Tolerances) -> Result<()> {
        for u in &self.block_unitaries {
            let dev = (&u.adjoint() * u).max_abs_diff(&Matrix::identity(u.rows()));
            if dev.as_f64() > tol.measurement {
                return Err(Error::InvalidMeasurement(format!("block unitary deviates by {dev:e}")));
            }
        }
        Ok(())
    }

    /// Verifies completeness, orthogonality, rank one and
    /// `Σ_g Π_g ρ_ref Π_g = ρ_ref`.
    pub fn check(&self, rho_ref: &Matrix<T>, tol: &Tolerances) -> Result<()> {
        if rho_ref.rows() != self.reference_dim || !rho_ref.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "measurement on dimension {} against a {}x{} reference",
                self.reference_dim,
                rho_ref.rows(),
                rho_ref.cols()
            )));
        }
        let projectors = self.projectors();
        check_projective_measurement(&projectors, self.reference_dim, tol)?;
        let dev = non_disturbance_deviation(&projectors, rho_ref);
        if dev.as_f64() > tol.non_disturbance {
            return Err(Error::InvalidMeasurement(format!("measurement disturbs the reference state by {dev:e}")));
        }
        Ok(())
    }
}

/// `max |Σ_g Π_g ρ Π_g − ρ|`.
pub fn non_disturbance_deviation<T: Real>(projectors: &[Matrix<T>], rho: &Matrix<T>) -> T {
    let mut acc = Matrix::zeros(rho.rows(), rho.cols());
    for p in projectors {
        acc = &acc + &(&(p * rho) * p);
    }
    acc.max_abs_diff(rho)
}

fn overlap<T: Real>(a: &[C<T>], b: &[C<T>]) -> C<T> {
    a.iter().zip(b).fold(C::zero(), |acc, (x, y)| acc + x.conj() * y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::haar_unitary;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn diag_state(d: &[f64]) -> DensityMatrix<f64> {
        DensityMatrix::new(Matrix::diag_real(d), vec![d.len()]).unwrap()
    }

    #[test]
    fn maximally_mixed_is_one_block() {
        let s = invariant_blocks(&diag_state(&[0.25; 4]), 1e-8).unwrap();
        assert_eq!(s.sizes(), vec![4]);
    }

    #[test]
    fn nondegenerate_gives_singletons() {
        let s = invariant_blocks(&diag_state(&[0.5, 0.3, 0.15, 0.05]), 1e-8).unwrap();
        assert_eq!(s.sizes(), vec![1, 1, 1, 1]);
        assert!(s.is_trivial());
        assert!((s.min_gap().unwrap() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn pairwise_degeneracy() {
        let s = invariant_blocks(&diag_state(&[0.4, 0.4, 0.1, 0.1]), 1e-8).unwrap();
        assert_eq!(s.sizes(), vec![2, 2]);
        assert!((s.blocks[0].eigenvalue - 0.1).abs() < 1e-15);
    }

    #[test]
    fn rotated_blocks_do_not_disturb() {
        let rho = diag_state(&[0.4, 0.4, 0.1, 0.1]);
        let s = invariant_blocks(&rho, 1e-8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut m = s.eigenbasis_measurement();
        m.block_unitaries = vec![haar_unitary(2, &mut rng), haar_unitary(2, &mut rng)];
        m.check(rho.matrix(), &f64::tolerances()).unwrap();
    }

    #[test]
    fn straddling_vector_is_rejected() {
        let rho = diag_state(&[0.7, 0.3]);
        let s = invariant_blocks(&rho, 1e-8).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = vec![C::new(h, 0.0), C::new(h, 0.0)];
        let minus = vec![C::new(h, 0.0), C::new(-h, 0.0)];
        assert!(InvariantMeasurement::from_vectors(&s, &[plus, minus], &f64::tolerances()).is_err());
    }

    #[test]
    fn from_vectors_round_trip() {
        let rho = diag_state(&[0.4, 0.4, 0.2]);
        let s = invariant_blocks(&rho, 1e-8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut m = s.eigenbasis_measurement();
        m.block_unitaries[1] = haar_unitary(2, &mut rng);
        let again = InvariantMeasurement::from_vectors(&s, &m.vectors(), &f64::tolerances()).unwrap();
        assert!(again.basis().max_abs_diff(&m.basis()) < 1e-12);
    }
}
