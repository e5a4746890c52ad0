use num_traits::Zero;

use super::{complete_basis, hermitian_eig, kron_vec, Matrix};
use crate::error::{Error, Result};
use crate::scalar::{Real, Tolerances, C};

/// `|ψ⟩ = Σ_i c_i |l_i⟩ ⊗ |r_i⟩` with `c` nonincreasing and nonnegative.
///
/// `left` and `right` are full unitaries; only their first
/// `coefficients.len()` columns pair up with coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtDecomposition<T> {
    pub coefficients: Vec<T>,
    pub left: Matrix<T>,
    pub right: Matrix<T>,
}

impl<T: Real> SchmidtDecomposition<T> {
    pub fn reconstruct(&self) -> Vec<C<T>> {
        let n = self.left.rows() * self.right.rows();
        let mut out = vec![C::zero(); n];
        for (i, &c) in self.coefficients.iter().enumerate() {
            let term = kron_vec(&self.left.column_vec(i), &self.right.column_vec(i));
            for (o, t) in out.iter_mut().zip(term) {
                *o = *o + t * c;
            }
        }
        out
    }
}

pub fn schmidt<T: Real>(psi: &[C<T>], dim_left: usize, dim_right: usize) -> Result<SchmidtDecomposition<T>> {
    schmidt_with(psi, dim_left, dim_right, &T::tolerances())
}

pub fn schmidt_with<T: Real>(
    psi: &[C<T>],
    dim_left: usize,
    dim_right: usize,
    tol: &Tolerances,
) -> Result<SchmidtDecomposition<T>> {
    if dim_left * dim_right != psi.len() || dim_left == 0 || dim_right == 0 {
        return Err(Error::DimensionMismatch(format!("vector of length {} is not {dim_left}x{dim_right}", psi.len())));
    }
    let norm_sqr: T = psi.iter().map(|z| z.norm_sqr()).sum();
    if (norm_sqr.sqrt() - T::one()).abs().as_f64() > tol.normalization {
        return Err(Error::NotNormalized { norm_sqr: norm_sqr.as_f64() });
    }
    let coeff = Matrix::from_fn(dim_left, dim_right, |i, j| psi[i * dim_right + j]);
    let reduced = &coeff * &coeff.adjoint();
    let eig = hermitian_eig(&reduced)?;

    let k = dim_left.min(dim_right);
    // Descending order.
    let order: Vec<usize> = (0..dim_left).rev().collect();
    let left = eig.vectors.select_columns(&order);
    let coefficients: Vec<T> = order[..k].iter().map(|&i| eig.values[i].max(T::zero()).sqrt()).collect();

    // r_i = M^T conj(l_i) / c_i for the nonvanishing coefficients.
    let floor = T::lit(1e-12);
    let coeff_t = coeff.transpose();
    let right_vectors: Vec<Vec<C<T>>> = coefficients
        .iter()
        .enumerate()
        .take_while(|(_, &c)| c > floor)
        .map(|(i, &c)| {
            let l: Vec<C<T>> = left.column_vec(i).iter().map(|z| z.conj()).collect();
            coeff_t.apply(&l).into_iter().map(|z| z / c).collect()
        })
        .collect();
    let right = complete_basis(&right_vectors, dim_right);
    Ok(SchmidtDecomposition { coefficients, left, right })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmatrix::is_identity;
    use crate::scalar::{c, cr};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn max_diff(a: &[C<f64>], b: &[C<f64>]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    fn random_state(n: usize, rng: &mut ChaCha8Rng) -> Vec<C<f64>> {
        let v: Vec<C<f64>> = (0..n).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.into_iter().map(|z| z / norm).collect()
    }

    #[test]
    fn bell_coefficients() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let s = schmidt(&[cr(h), cr(0.0), cr(0.0), cr(h)], 2, 2).unwrap();
        assert!((s.coefficients[0] - h).abs() < 1e-15 && (s.coefficients[1] - h).abs() < 1e-15);
    }

    #[test]
    fn product_state_coefficients() {
        let s = schmidt(&[cr(1.0), cr(0.0), cr(0.0), cr(0.0)], 2, 2).unwrap();
        assert_eq!(s.coefficients, vec![1.0, 0.0]);
        assert!(max_diff(&s.reconstruct(), &[cr(1.0), cr(0.0), cr(0.0), cr(0.0)]) < 1e-15);
    }

    #[test]
    fn already_schmidt_form() {
        let (a, b) = (0.8f64.sqrt(), 0.2f64.sqrt());
        let s = schmidt(&[cr(a), cr(0.0), cr(0.0), cr(b)], 2, 2).unwrap();
        assert!((s.coefficients[0] - a).abs() < 1e-14 && (s.coefficients[1] - b).abs() < 1e-14);
    }

    #[test]
    fn random_rectangular_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (dl, dr) in [(2, 2), (2, 3), (3, 2), (3, 3), (4, 2)] {
            let psi = random_state(dl * dr, &mut rng);
            let s = schmidt(&psi, dl, dr).unwrap();
            assert!(max_diff(&s.reconstruct(), &psi) <= 1e-10);
            let sum: f64 = s.coefficients.iter().map(|x| x * x).sum();
            assert!((sum - 1.0).abs() <= 1e-10);
            assert!(s.coefficients.windows(2).all(|w| w[0] >= w[1]));
            assert!(is_identity(&(&s.left.adjoint() * &s.left), 1e-10));
            assert!(is_identity(&(&s.right.adjoint() * &s.right), 1e-10));
        }
    }

    #[test]
    fn rejects_unnormalized() {
        assert!(matches!(schmidt(&[cr(1.0), cr(1.0), cr(0.0), cr(0.0)], 2, 2), Err(Error::NotNormalized { .. })));
    }
}
