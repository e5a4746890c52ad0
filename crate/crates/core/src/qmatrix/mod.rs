//! Dense complex linear algebra used by every other module.

mod eig;
mod matrix;
mod real;
mod schmidt;

#[cfg(test)]
pub(crate) use eig::is_identity;
pub use eig::{hermitian_eig, hermitian_eig_with, psd_sqrt, psd_sqrt_with, EigenSystem};
pub use matrix::Matrix;
pub use real::RealMatrix;
pub use schmidt::{schmidt, schmidt_with, SchmidtDecomposition};

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::scalar::{Real, C};

/// Kronecker product `A ⊗ B`.
pub fn kron<T: Real>(a: &Matrix<T>, b: &Matrix<T>) -> Matrix<T> {
    let (r2, c2) = (b.rows(), b.cols());
    Matrix::from_fn(a.rows() * r2, a.cols() * c2, |i, j| a[(i / r2, j / c2)] * b[(i % r2, j % c2)])
}

/// Kronecker product of state vectors.
pub fn kron_vec<T: Real>(a: &[C<T>], b: &[C<T>]) -> Vec<C<T>> {
    a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect()
}

/// Kronecker product of several factors, left to right.
pub fn kron_all<T: Real>(factors: &[&Matrix<T>]) -> Matrix<T> {
    factors.iter().fold(Matrix::identity(1), |acc, f| kron(&acc, f))
}

/// Mixed-radix digits of `index` for subsystem dimensions `dims`, most
/// significant first.
fn digits(mut index: usize, dims: &[usize], out: &mut [usize]) {
    for (slot, &d) in out.iter_mut().zip(dims).rev() {
        *slot = index % d;
        index /= d;
    }
}

fn compose(digits: &[usize], dims: &[usize]) -> usize {
    digits.iter().zip(dims).fold(0, |acc, (&x, &d)| acc * d + x)
}

/// Traces out every subsystem not listed in `keep`.
///
/// `dims` lists subsystem dimensions in tensor order; the kept subsystems
/// retain their relative order in the result.
pub fn partial_trace<T: Real>(m: &Matrix<T>, dims: &[usize], keep: &[usize]) -> Result<Matrix<T>> {
    let total: usize = dims.iter().product();
    if !m.is_square() || m.rows() != total || dims.iter().any(|&d| d == 0) {
        return Err(Error::DimensionMismatch(format!("dims {dims:?} do not match a {}x{} matrix", m.rows(), m.cols())));
    }
    if keep.iter().any(|&k| k >= dims.len()) || (1..keep.len()).any(|i| keep[..i].contains(&keep[i])) {
        return Err(Error::DimensionMismatch(format!("invalid subsystem selection {keep:?}")));
    }
    let mut keep_sorted = keep.to_vec();
    keep_sorted.sort_unstable();
    let traced: Vec<usize> = (0..dims.len()).filter(|k| !keep_sorted.contains(k)).collect();
    let kept_dims: Vec<usize> = keep_sorted.iter().map(|&k| dims[k]).collect();
    let traced_dims: Vec<usize> = traced.iter().map(|&k| dims[k]).collect();
    let out_dim: usize = kept_dims.iter().product();
    let env_dim: usize = traced_dims.iter().product();

    let n = dims.len();
    let mut kd = vec![0; keep_sorted.len()];
    let mut kd2 = vec![0; keep_sorted.len()];
    let mut td = vec![0; traced.len()];
    let mut full = vec![0; n];
    let mut full2 = vec![0; n];
    let mut out = Matrix::zeros(out_dim, out_dim);
    for i in 0..out_dim {
        digits(i, &kept_dims, &mut kd);
        for j in 0..out_dim {
            digits(j, &kept_dims, &mut kd2);
            let mut acc = C::zero();
            for e in 0..env_dim {
                digits(e, &traced_dims, &mut td);
                for (slot, &k) in keep_sorted.iter().enumerate() {
                    full[k] = kd[slot];
                    full2[k] = kd2[slot];
                }
                for (slot, &k) in traced.iter().enumerate() {
                    full[k] = td[slot];
                    full2[k] = td[slot];
                }
                acc = acc + m[(compose(&full, dims), compose(&full2, dims))];
            }
            out[(i, j)] = acc;
        }
    }
    Ok(out)
}

/// Reorders tensor factors: factor `perm[k]` of the input becomes factor `k`
/// of the output.
pub fn permute_subsystems<T: Real>(m: &Matrix<T>, dims: &[usize], perm: &[usize]) -> Result<Matrix<T>> {
    let total: usize = dims.iter().product();
    if !m.is_square() || m.rows() != total || perm.len() != dims.len() {
        return Err(Error::DimensionMismatch(format!("cannot permute dims {dims:?} by {perm:?}")));
    }
    let mut seen = vec![false; perm.len()];
    for &p in perm {
        if p >= perm.len() || std::mem::replace(&mut seen[p], true) {
            return Err(Error::DimensionMismatch(format!("{perm:?} is not a permutation")));
        }
    }
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let map = |index: usize| {
        let mut nd = vec![0; dims.len()];
        digits(index, &new_dims, &mut nd);
        let mut old = vec![0; dims.len()];
        for (k, &p) in perm.iter().enumerate() {
            old[p] = nd[k];
        }
        compose(&old, dims)
    };
    let lookup: Vec<usize> = (0..total).map(map).collect();
    Ok(Matrix::from_fn(total, total, |i, j| m[(lookup[i], lookup[j])]))
}

/// Orthonormalizes `vectors` in order (modified Gram-Schmidt, two passes)
/// and completes them to a basis of `C^dim` with computational basis vectors.
/// Vectors that become numerically dependent are dropped before completion.
pub fn complete_basis<T: Real>(vectors: &[Vec<C<T>>], dim: usize) -> Matrix<T> {
    let mut basis: Vec<Vec<C<T>>> = Vec::with_capacity(dim);
    let candidates = vectors.iter().cloned().chain((0..dim).map(|k| {
        let mut e = vec![C::zero(); dim];
        e[k] = C::new(T::one(), T::zero());
        e
    }));
    let floor = T::lit(1e-8);
    for mut v in candidates {
        if basis.len() == dim {
            break;
        }
        for _ in 0..2 {
            for b in &basis {
                let overlap = b.iter().zip(&v).fold(C::zero(), |acc, (x, y)| acc + x.conj() * y);
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi = *vi - bi * overlap;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
        if norm > floor {
            basis.push(v.into_iter().map(|z| z / norm).collect());
        }
    }
    let mut m = Matrix::zeros(dim, dim);
    for (j, v) in basis.iter().enumerate() {
        m.set_column(j, v);
    }
    m
}

/// QR decomposition by modified Gram-Schmidt with reorthogonalization.
/// `R` has a real nonnegative diagonal.
pub fn qr<T: Real>(a: &Matrix<T>) -> (Matrix<T>, Matrix<T>) {
    let (rows, cols) = (a.rows(), a.cols());
    let mut q = Matrix::zeros(rows, cols);
    let mut r = Matrix::zeros(cols, cols);
    for j in 0..cols {
        let mut v = a.column_vec(j);
        for _ in 0..2 {
            for k in 0..j {
                let qk = q.column_vec(k);
                let overlap = qk.iter().zip(&v).fold(C::zero(), |acc, (x, y)| acc + x.conj() * y);
                r[(k, j)] = r[(k, j)] + overlap;
                for (vi, qi) in v.iter_mut().zip(&qk) {
                    *vi = *vi - qi * overlap;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
        r[(j, j)] = C::new(norm, T::zero());
        if norm > T::zero() {
            q.set_column(j, &v.into_iter().map(|z| z / norm).collect::<Vec<_>>());
        }
    }
    (q, r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{c, cr};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sx() -> Matrix<f64> {
        Matrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
    }

    fn random_matrix(n: usize, rng: &mut ChaCha8Rng) -> Matrix<f64> {
        Matrix::from_fn(n, n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    fn random_density(n: usize, rng: &mut ChaCha8Rng) -> Matrix<f64> {
        let g = random_matrix(n, rng);
        let r = &g * &g.adjoint();
        let t = r.trace().re;
        r.scale(1.0 / t)
    }

    #[test]
    fn kron_identity_pauli_is_block_diagonal() {
        let k = kron(&Matrix::identity(2), &sx());
        let expected = Matrix::from_real_rows(&[
            &[0.0, 1.0, 0.0, 0.0],
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 1.0],
            &[0.0, 0.0, 1.0, 0.0],
        ]);
        assert_eq!(k, expected);
    }

    #[test]
    fn kron_with_scalar_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_matrix(3, &mut rng);
        assert_eq!(kron(&a, &Matrix::identity(1)), a);
    }

    #[test]
    fn kron_trace_factorizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let a = random_matrix(2, &mut rng);
            let b = random_matrix(2, &mut rng);
            // Oracle: product of directly summed diagonals.
            let ta = a[(0, 0)] + a[(1, 1)];
            let tb = b[(0, 0)] + b[(1, 1)];
            assert!((kron(&a, &b).trace() - ta * tb).norm() < 1e-14);
        }
    }

    #[test]
    fn bell_marginal_is_maximally_mixed() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let phi = [cr(h), cr(0.0), cr(0.0), cr(h)];
        let rho = Matrix::projector(&phi);
        let a = partial_trace(&rho, &[2, 2], &[0]).unwrap();
        assert!(a.max_abs_diff(&Matrix::identity(2).scale(0.5)) < 1e-15);
    }

    #[test]
    fn product_marginals() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ra = random_density(2, &mut rng);
        let rb = random_density(3, &mut rng);
        let ab = kron(&ra, &rb);
        assert!(partial_trace(&ab, &[2, 3], &[0]).unwrap().max_abs_diff(&ra) < 1e-14);
        assert!(partial_trace(&ab, &[2, 3], &[1]).unwrap().max_abs_diff(&rb) < 1e-14);
        // tr_B(A ⊗ B) = A tr(B) for non-normalized B.
        let b = rb.scale(2.5);
        let out = partial_trace(&kron(&ra, &b), &[2, 3], &[0]).unwrap();
        assert!(out.max_abs_diff(&ra.scale(2.5)) < 1e-13);
    }

    #[test]
    fn middle_marginal_of_two_pure_sources() {
        // ρ_BC of |ψ_AB⟩⊗|φ_CD⟩ is diagonal with entries λ_i² μ_j².
        let (l0, l1) = (0.8f64.sqrt(), 0.2f64.sqrt());
        let (m0, m1) = (0.7f64.sqrt(), 0.3f64.sqrt());
        let psi = [cr(l0), cr(0.0), cr(0.0), cr(l1)];
        let phi = [cr(m0), cr(0.0), cr(0.0), cr(m1)];
        let full = Matrix::projector(&kron_vec(&psi, &phi));
        let bc = partial_trace(&full, &[2, 2, 2, 2], &[1, 2]).unwrap();
        let expected = Matrix::diag_real(&[0.8 * 0.7, 0.8 * 0.3, 0.2 * 0.7, 0.2 * 0.3]);
        assert!(bc.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn partial_trace_composes() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rho = random_density(16, &mut rng);
        let dims = [2, 2, 2, 2];
        let at_once = partial_trace(&rho, &dims, &[1, 2]).unwrap();
        let drop_a = partial_trace(&rho, &dims, &[1, 2, 3]).unwrap();
        let then_d = partial_trace(&drop_a, &[2, 2, 2], &[0, 1]).unwrap();
        assert!(at_once.max_abs_diff(&then_d) <= 1e-12);
        assert!((at_once.trace() - rho.trace()).norm() <= 1e-12);
    }

    #[test]
    fn partial_trace_rejects_bad_dims() {
        let rho = Matrix::<f64>::identity(4);
        assert!(matches!(partial_trace(&rho, &[2, 3], &[0]), Err(Error::DimensionMismatch(_))));
        assert!(matches!(partial_trace(&rho, &[2, 2], &[2]), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn swap_of_product_swaps_factors() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ra = random_density(2, &mut rng);
        let rb = random_density(3, &mut rng);
        let swapped = permute_subsystems(&kron(&ra, &rb), &[2, 3], &[1, 0]).unwrap();
        assert!(swapped.max_abs_diff(&kron(&rb, &ra)) < 1e-15);
    }

    #[test]
    fn qr_reconstructs_with_positive_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a = random_matrix(4, &mut rng);
        let (q, r) = qr(&a);
        assert!((&q * &r).max_abs_diff(&a) < 1e-13);
        assert!(is_identity(&(&q.adjoint() * &q), 1e-13));
        for i in 0..4 {
            assert!(r[(i, i)].re > 0.0 && r[(i, i)].im == 0.0);
            for j in 0..i {
                assert_eq!(r[(i, j)], C::zero());
            }
        }
    }

    #[test]
    fn complete_basis_extends_partial_set() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let v = vec![vec![cr(h), cr(h), cr(0.0)]];
        let b = complete_basis(&v, 3);
        assert!(is_identity(&(&b.adjoint() * &b), 1e-14));
        assert!((b[(0, 0)] - cr(h)).norm() < 1e-15);
    }
}
