//! Orthonormal Hermitian operator bases and the expansion of `√ρ` in product
//! bases.
//!
//! Composite indices are flattened row-major: the pair `(j, k)` with
//! `k < u²` maps to `j·u² + k`, the same order as `Y_j ⊗ Z_k` in a Kronecker
//! product.

use std::ops::Deref;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::qmatrix::{kron, psd_sqrt_with, Matrix, RealMatrix};
use crate::scalar::{c, cr, Real, Tolerances, C};
use crate::states::DensityMatrix;

/// `{B_0, …, B_{d²-1}}` with `tr(B_i B_j) = δ_ij` and `B_0 = I/√d`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianBasis<T> {
    dim: usize,
    elements: Vec<Matrix<T>>,
}

impl<T: Real> HermitianBasis<T> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn elements(&self) -> &[Matrix<T>] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Gram matrix `tr(B_i B_j)`, real for Hermitian elements.
    pub fn gram(&self) -> RealMatrix<T> {
        let n = self.elements.len();
        RealMatrix::from_fn(n, n, |i, j| self.elements[i].trace_product(&self.elements[j]).re)
    }

    /// Coefficients `tr(A B_i)` of a Hermitian operator.
    pub fn coefficients(&self, a: &Matrix<T>) -> Vec<T> {
        self.elements.iter().map(|b| a.trace_product(b).re).collect()
    }
}

/// Generalized Gell-Mann basis, normalized to `tr(B_i B_j) = δ_ij`.
///
/// Order: `I/√d`; symmetric `(|j⟩⟨k| + |k⟩⟨j|)/√2` for `j < k`;
/// antisymmetric `(-i|j⟩⟨k| + i|k⟩⟨j|)/√2` for `j < k`; diagonal
/// `(Σ_{j<l} |j⟩⟨j| - l|l⟩⟨l|)/√(l(l+1))` for `l = 1..d-1`. For `d = 2`
/// this is `{I, σ_x, σ_y, σ_z}/√2`.
///
/// # Panics
/// If `d == 0`.
pub fn gell_mann_basis<T: Real>(d: usize) -> HermitianBasis<T> {
    assert!(d > 0, "basis dimension must be positive");
    let inv_sqrt2 = T::FRAC_1_SQRT_2();
    let mut elements = Vec::with_capacity(d * d);
    elements.push(Matrix::identity(d).scale(T::one() / T::lit(d as f64).sqrt()));
    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|j| (j + 1..d).map(move |k| (j, k))).collect();
    for &(j, k) in &pairs {
        let mut m = Matrix::zeros(d, d);
        m[(j, k)] = cr(inv_sqrt2);
        m[(k, j)] = cr(inv_sqrt2);
        elements.push(m);
    }
    for &(j, k) in &pairs {
        let mut m = Matrix::zeros(d, d);
        m[(j, k)] = c(T::zero(), -inv_sqrt2);
        m[(k, j)] = c(T::zero(), inv_sqrt2);
        elements.push(m);
    }
    for l in 1..d {
        let norm = T::one() / T::lit((l * (l + 1)) as f64).sqrt();
        let mut m = Matrix::zeros(d, d);
        for j in 0..l {
            m[(j, j)] = cr(norm);
        }
        m[(l, l)] = cr(-T::lit(l as f64) * norm);
        elements.push(m);
    }
    HermitianBasis { dim: d, elements }
}

/// Real matrix of expansion coefficients `t_ij = tr(√ρ (X_i ⊗ Y_j))`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix<T>(pub RealMatrix<T>);

impl<T> Deref for CorrelationMatrix<T> {
    type Target = RealMatrix<T>;
    fn deref(&self) -> &RealMatrix<T> {
        &self.0
    }
}

impl<T: Real> CorrelationMatrix<T> {
    /// `Σ_ij t_ij X_i ⊗ Y_j`.
    pub fn reconstruct(&self, basis_a: &HermitianBasis<T>, basis_b: &HermitianBasis<T>) -> Matrix<T> {
        let d = basis_a.dim() * basis_b.dim();
        let mut out = Matrix::zeros(d, d);
        for (i, x) in basis_a.elements().iter().enumerate() {
            for (j, y) in basis_b.elements().iter().enumerate() {
                let t = self.0[(i, j)];
                if t != T::zero() {
                    out = &out + &kron(x, y).scale(t);
                }
            }
        }
        out
    }
}

/// Drops imaginary residue up to `tol.imag_residue`, erroring beyond it.
fn real_part<T: Real>(z: C<T>, tol: &Tolerances, what: &str) -> Result<T> {
    if z.im.abs().as_f64() > tol.imag_residue {
        return Err(Error::NumericalFailure(format!("{what} has imaginary part {:e}", z.im.as_f64())));
    }
    Ok(z.re)
}

/// Correlation matrix of an arbitrary Hermitian operator `s` on `A ⊗ B`.
pub fn expand_operator<T: Real>(
    s: &Matrix<T>,
    basis_a: &HermitianBasis<T>,
    basis_b: &HermitianBasis<T>,
    tol: &Tolerances,
) -> Result<CorrelationMatrix<T>> {
    let (da, db) = (basis_a.dim(), basis_b.dim());
    if s.rows() != da * db || !s.is_square() {
        return Err(Error::DimensionMismatch(format!("{}x{} operator for bases {da}, {db}", s.rows(), s.cols())));
    }
    let mut t = RealMatrix::zeros(basis_a.len(), basis_b.len());
    for (i, x) in basis_a.elements().iter().enumerate() {
        // P_i[b, b'] = Σ_{a, a'} S[(a, b), (a', b')] X_i[a', a]; t_ij = tr(P_i Y_j).
        let p = Matrix::from_fn(db, db, |b, bp| {
            let mut acc = C::zero();
            for a in 0..da {
                for ap in 0..da {
                    let xv = x[(ap, a)];
                    if !xv.is_zero() {
                        acc = acc + s[(a * db + b, ap * db + bp)] * xv;
                    }
                }
            }
            acc
        });
        for (j, y) in basis_b.elements().iter().enumerate() {
            t[(i, j)] = real_part(y.trace_product(&p), tol, "correlation entry")?;
        }
    }
    Ok(CorrelationMatrix(t))
}

/// `T = (tr(√ρ (X_i ⊗ Y_j)))` for a bipartite state.
pub fn correlation_matrix<T: Real>(
    rho: &DensityMatrix<T>,
    basis_a: &HermitianBasis<T>,
    basis_b: &HermitianBasis<T>,
) -> Result<CorrelationMatrix<T>> {
    let dims = rho.dims();
    if dims.len() != 2 || dims[0] != basis_a.dim() || dims[1] != basis_b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "state dims {dims:?} vs bases ({}, {})",
            basis_a.dim(),
            basis_b.dim()
        )));
    }
    let tol = T::tolerances();
    let s = psd_sqrt_with(rho.matrix(), &tol)?;
    expand_operator(&s, basis_a, basis_b, &tol)
}

/// Correlation matrix in Gell-Mann bases matching the state's dims.
pub fn gell_mann_correlation<T: Real>(rho: &DensityMatrix<T>) -> Result<CorrelationMatrix<T>> {
    let dims = rho.dims();
    if dims.len() != 2 {
        return Err(Error::DimensionMismatch("bipartite state required".into()));
    }
    correlation_matrix(rho, &gell_mann_basis(dims[0]), &gell_mann_basis(dims[1]))
}

/// `T_{bc,ad} = T_ab^t ⊗ T_cd`; entry `(j·u² + k, i·v² + l) = t^ab_ij t^cd_kl`.
pub fn bilocal_correlation_matrix<T: Real>(
    t_ab: &CorrelationMatrix<T>,
    t_cd: &CorrelationMatrix<T>,
) -> CorrelationMatrix<T> {
    CorrelationMatrix(t_ab.transpose().kron(t_cd))
}

/// Checks that `projectors` form a complete set of orthogonal rank-1
/// projectors on a space of dimension `dim`.
pub fn check_projective_measurement<T: Real>(projectors: &[Matrix<T>], dim: usize, tol: &Tolerances) -> Result<()> {
    let eps = tol.measurement;
    if projectors.len() != dim {
        return Err(Error::InvalidMeasurement(format!("{} projectors on dimension {dim}", projectors.len())));
    }
    let mut sum = Matrix::zeros(dim, dim);
    for (g, p) in projectors.iter().enumerate() {
        if p.rows() != dim || !p.is_square() {
            return Err(Error::InvalidMeasurement(format!("projector {g} has wrong shape")));
        }
        if p.hermiticity_deviation().as_f64() > eps {
            return Err(Error::InvalidMeasurement(format!("projector {g} is not Hermitian")));
        }
        if (p.trace() - cr(T::one())).norm().as_f64() > eps {
            return Err(Error::InvalidMeasurement(format!("projector {g} is not rank 1")));
        }
        for (h, q) in projectors.iter().enumerate().skip(g) {
            let overlap = (p * q).max_abs_diff(&if g == h { p.clone() } else { Matrix::zeros(dim, dim) });
            if overlap.as_f64() > eps {
                return Err(Error::InvalidMeasurement(format!("projectors {g}, {h} violate Π_gΠ_h = δ_gh Π_g")));
            }
        }
        sum = &sum + p;
    }
    if sum.max_abs_diff(&Matrix::identity(dim)).as_f64() > eps {
        return Err(Error::InvalidMeasurement("projectors do not sum to the identity".into()));
    }
    Ok(())
}

/// `F = (tr(Π_g (Y_j ⊗ Z_k)))`, an `nu x n²u²` matrix with orthonormal rows.
pub fn measurement_expansion<T: Real>(
    projectors: &[Matrix<T>],
    basis_b: &HermitianBasis<T>,
    basis_c: &HermitianBasis<T>,
) -> Result<RealMatrix<T>> {
    let tol = T::tolerances();
    let dim = basis_b.dim() * basis_c.dim();
    check_projective_measurement(projectors, dim, &tol)?;
    let products: Vec<Matrix<T>> =
        basis_b.elements().iter().flat_map(|y| basis_c.elements().iter().map(move |z| kron(y, z))).collect();
    let mut f = RealMatrix::zeros(dim, products.len());
    for (g, p) in projectors.iter().enumerate() {
        for (jk, yz) in products.iter().enumerate() {
            f[(g, jk)] = real_part(p.trace_product(yz), &tol, "measurement expansion")?;
        }
    }
    Ok(f)
}
