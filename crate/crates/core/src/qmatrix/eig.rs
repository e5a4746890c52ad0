//! Hermitian eigendecomposition by cyclic complex Jacobi rotations.
//!
//! Jacobi is slower than tridiagonal QR but yields eigenvectors that are
//! orthonormal to working precision, which matters here: measurement bases
//! are read directly off eigenvectors and must be complete.

use num_traits::Zero;

use super::Matrix;
use crate::error::{Error, Result};
use crate::scalar::{cr, Real, Tolerances, C};

const MAX_SWEEPS: usize = 100;

/// Eigenvalues in nondecreasing order with the matching orthonormal
/// eigenvectors as columns of `vectors`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem<T> {
    pub values: Vec<T>,
    pub vectors: Matrix<T>,
}

impl<T: Real> EigenSystem<T> {
    /// `V diag(f(λ)) V^†`.
    pub fn reconstruct_with(&self, f: impl Fn(T) -> T) -> Matrix<T> {
        let n = self.values.len();
        let v = &self.vectors;
        let fv: Vec<T> = self.values.iter().map(|&x| f(x)).collect();
        Matrix::from_fn(n, n, |i, j| {
            let mut acc = C::zero();
            for k in 0..n {
                if fv[k] != T::zero() {
                    acc = acc + v[(i, k)] * v[(j, k)].conj() * fv[k];
                }
            }
            acc
        })
    }

    pub fn reconstruct(&self) -> Matrix<T> {
        self.reconstruct_with(|x| x)
    }

    pub fn eigenvector(&self, k: usize) -> Vec<C<T>> {
        self.vectors.column_vec(k)
    }
}

/// Eigendecomposition of a Hermitian matrix using the default tolerances.
pub fn hermitian_eig<T: Real>(h: &Matrix<T>) -> Result<EigenSystem<T>> {
    hermitian_eig_with(h, &T::tolerances())
}

pub fn hermitian_eig_with<T: Real>(h: &Matrix<T>, tol: &Tolerances) -> Result<EigenSystem<T>> {
    if !h.is_square() {
        return Err(Error::DimensionMismatch(format!("eigendecomposition of a {}x{} matrix", h.rows(), h.cols())));
    }
    if !h.is_finite() {
        return Err(Error::NonFinite);
    }
    let dev = h.hermiticity_deviation();
    if dev.as_f64() > tol.hermitian {
        return Err(Error::NotHermitian { deviation: dev.as_f64() });
    }
    jacobi(h.hermitian_part())
}

fn jacobi<T: Real>(mut a: Matrix<T>) -> Result<EigenSystem<T>> {
    let n = a.rows();
    let mut v = Matrix::identity(n);
    for i in 0..n {
        a[(i, i)] = cr(a[(i, i)].re);
    }
    let scale = a.frobenius_norm();
    if scale == T::zero() || n < 2 {
        return Ok(sorted(a, v));
    }
    let eps = T::epsilon();
    let target = eps * eps * scale * scale;

    for _ in 0..MAX_SWEEPS {
        let off: T = (0..n)
            .flat_map(|p| (0..n).filter(move |&q| q != p).map(move |q| (p, q)))
            .map(|(p, q)| a[(p, q)].norm_sqr())
            .sum();
        if off <= target {
            return Ok(sorted(a, v));
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                rotate(&mut a, &mut v, p, q, eps * scale);
            }
        }
    }
    Err(Error::NumericalFailure(format!("Jacobi eigensolver did not converge in {MAX_SWEEPS} sweeps")))
}

/// Annihilates `a[p][q]` with `J = diag(1, e^{-iφ}) R(θ)` acting on the
/// `(p, q)` plane: `A ← J^† A J`, `V ← V J`.
fn rotate<T: Real>(a: &mut Matrix<T>, v: &mut Matrix<T>, p: usize, q: usize, floor: T) {
    let apq = a[(p, q)];
    let g = apq.norm();
    if g <= floor * T::epsilon() {
        a[(p, q)] = C::zero();
        a[(q, p)] = C::zero();
        return;
    }
    let phase = apq / g; // e^{iφ}
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let theta = (aqq - app) / (g + g);
    let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
    let cs = T::one() / (t * t + T::one()).sqrt();
    let sn = t * cs;

    let jpp = cr(cs);
    let jpq = cr(sn);
    let jqp = phase.conj() * (-sn);
    let jqq = phase.conj() * cs;

    let n = a.rows();
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * jpp + akq * jqp;
        a[(k, q)] = akp * jpq + akq * jqq;
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * jpp + vkq * jqp;
        v[(k, q)] = vkp * jpq + vkq * jqq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = jpp.conj() * apk + jqp.conj() * aqk;
        a[(q, k)] = jpq.conj() * apk + jqq.conj() * aqk;
    }
    a[(p, q)] = C::zero();
    a[(q, p)] = C::zero();
    a[(p, p)] = cr(a[(p, p)].re);
    a[(q, q)] = cr(a[(q, q)].re);
}

fn sorted<T: Real>(a: Matrix<T>, v: Matrix<T>) -> EigenSystem<T> {
    let n = a.rows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.partial_cmp(&a[(j, j)].re).expect("finite eigenvalues"));
    EigenSystem { values: order.iter().map(|&i| a[(i, i)].re).collect(), vectors: v.select_columns(&order) }
}

/// Square root of a Hermitian positive semidefinite matrix.
///
/// Eigenvalues in `[-eigen_clamp, 0)` are clamped to zero; anything lower is
/// rejected with [`Error::NotPsd`]. Eigenvalues below `n·ε·‖ρ‖` are treated
/// as exact zeros.
pub fn psd_sqrt<T: Real>(rho: &Matrix<T>) -> Result<Matrix<T>> {
    psd_sqrt_with(rho, &T::tolerances())
}

pub fn psd_sqrt_with<T: Real>(rho: &Matrix<T>, tol: &Tolerances) -> Result<Matrix<T>> {
    let eig = hermitian_eig_with(rho, tol)?;
    psd_sqrt_from_eig(&eig, tol)
}

fn psd_sqrt_from_eig<T: Real>(eig: &EigenSystem<T>, tol: &Tolerances) -> Result<Matrix<T>> {
    if let Some(&min) = eig.values.first() {
        if min.as_f64() < -tol.eigen_clamp {
            return Err(Error::NotPsd { min_eigenvalue: min.as_f64() });
        }
    }
    // Eigenvalues at rounding level are zero; their square roots would not be.
    let top = eig.values.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let floor = T::epsilon() * T::lit(eig.values.len() as f64) * top;
    Ok(eig.reconstruct_with(|x| if x <= floor { T::zero() } else { x.sqrt() }))
}

/// Whether every entry of `m` lies within `tol` of the identity.
#[cfg(test)]
pub(crate) fn is_identity<T: Real>(m: &Matrix<T>, tol: T) -> bool {
    m.is_square() && m.max_abs_diff(&Matrix::identity(m.rows())) <= tol
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::c;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> Matrix<f64> {
        let g = Matrix::from_fn(n, n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        (&g + &g.adjoint()).scale(0.5)
    }

    #[test]
    fn pauli_z_spectrum() {
        let z = Matrix::<f64>::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]]);
        let e = hermitian_eig(&z).unwrap();
        assert_eq!(e.values, vec![-1.0, 1.0]);
    }

    #[test]
    fn identity_spectrum() {
        let e = hermitian_eig(&Matrix::<f64>::identity(3)).unwrap();
        assert_eq!(e.values, vec![1.0; 3]);
        assert!(is_identity(&(&e.vectors.adjoint() * &e.vectors), 1e-14));
    }

    #[test]
    fn random_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [2, 4, 9, 16] {
            let h = random_hermitian(n, &mut rng);
            let e = hermitian_eig(&h).unwrap();
            let err = e.reconstruct().max_abs_diff(&h);
            assert!(err <= 1e-10 * (1.0 + h.frobenius_norm()), "n={n} err={err}");
            assert!(is_identity(&(&e.vectors.adjoint() * &e.vectors), 1e-10));
            assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn complex_off_diagonal() {
        // σ_y has eigenvalues ±1.
        let y = Matrix::<f64>::from_rows(&[vec![c(0.0, 0.0), c(0.0, -1.0)], vec![c(0.0, 1.0), c(0.0, 0.0)]]).unwrap();
        let e = hermitian_eig(&y).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-14 && (e.values[1] - 1.0).abs() < 1e-14);
        assert!(e.reconstruct().max_abs_diff(&y) < 1e-14);
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = Matrix::<f64>::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!(matches!(hermitian_eig(&m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn sqrt_of_diagonal() {
        let m = Matrix::<f64>::diag_real(&[4.0, 1.0]);
        let s = psd_sqrt(&m).unwrap();
        assert!(s.max_abs_diff(&Matrix::diag_real(&[2.0, 1.0])) < 1e-15);
    }

    #[test]
    fn sqrt_of_projector_is_itself() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let p = Matrix::<f64>::projector(&[c(h, 0.0), c(0.0, h)]);
        assert!(psd_sqrt(&p).unwrap().max_abs_diff(&p) < 1e-14);
    }

    #[test]
    fn sqrt_squares_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = Matrix::from_fn(4, 4, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let rho = &g * &g.adjoint();
        let s = psd_sqrt(&rho).unwrap();
        assert!((&s * &s).max_abs_diff(&rho) < 1e-9);
        assert!(s.hermiticity_deviation() < 1e-12);
        assert!(hermitian_eig(&s).unwrap().values[0] > -1e-12);
    }

    #[test]
    fn sqrt_clamps_dust_and_rejects_negative() {
        let dust = Matrix::<f64>::diag_real(&[1.0, -5e-11]);
        let s = psd_sqrt(&dust).unwrap();
        assert_eq!(s[(1, 1)], c(0.0, 0.0));
        let neg = Matrix::<f64>::diag_real(&[1.0, -1e-6]);
        assert!(matches!(psd_sqrt(&neg), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn f32_eigensystem() {
        let z = Matrix::<f32>::from_real_rows(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let e = hermitian_eig(&z).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-6 && (e.values[1] - 3.0).abs() < 1e-6);
    }
}
