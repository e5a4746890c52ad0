//! Density matrices, the named state families, and seeded random ensembles.
//!
//! Basis conventions: qubit `|0⟩, |1⟩`; two-qubit `|00⟩, |01⟩, |10⟩, |11⟩`.
//! Bell-diagonal weights follow the ordering
//! `(|00⟩+|11⟩, |00⟩-|11⟩, |01⟩+|10⟩, |01⟩-|10⟩)`.

use std::fmt;
use std::str::FromStr;

use num_traits::Zero;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmatrix::{hermitian_eig, kron, partial_trace, permute_subsystems, psd_sqrt_with, EigenSystem, Matrix};
use crate::scalar::{c, cr, Real, Tolerances, C};

/// Outcome of checking a candidate density matrix against every invariant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub dim: usize,
    pub dims: Vec<usize>,
    pub square: bool,
    pub dims_consistent: bool,
    pub finite: bool,
    pub hermiticity_deviation: Option<f64>,
    pub min_eigenvalue: Option<f64>,
    pub trace_deviation: Option<f64>,
    pub hermitian_ok: bool,
    pub psd_ok: bool,
    pub trace_ok: bool,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.failures().is_empty()
    }

    pub fn failures(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if !self.square {
            out.push("not square");
        }
        if !self.dims_consistent {
            out.push("subsystem dims do not match matrix size");
        }
        if !self.finite {
            out.push("non-finite entries");
        }
        if !self.hermitian_ok {
            out.push("not Hermitian");
        }
        if !self.psd_ok {
            out.push("negative eigenvalue");
        }
        if !self.trace_ok {
            out.push("trace differs from 1");
        }
        out
    }

    pub fn summary(&self) -> String {
        if self.passed() {
            "valid".into()
        } else {
            self.failures().join(", ")
        }
    }
}

/// Checks `matrix` against the density-matrix invariants for subsystem
/// dimensions `dims`.
pub fn validate<T: Real>(matrix: &Matrix<T>, dims: &[usize], tol: &Tolerances) -> ValidationReport {
    let square = matrix.is_square();
    let dim = matrix.rows();
    let dims_consistent = square && !dims.is_empty() && dims.iter().product::<usize>() == dim;
    let finite = matrix.is_finite();
    let mut report = ValidationReport {
        dim,
        dims: dims.to_vec(),
        square,
        dims_consistent,
        finite,
        hermiticity_deviation: None,
        min_eigenvalue: None,
        trace_deviation: None,
        hermitian_ok: false,
        psd_ok: false,
        trace_ok: false,
    };
    if !square || !finite {
        return report;
    }
    let dev = matrix.hermiticity_deviation().as_f64();
    report.hermiticity_deviation = Some(dev);
    report.hermitian_ok = dev <= tol.hermitian;
    let trace = matrix.trace();
    let trace_dev = (trace - cr(T::one())).norm().as_f64();
    report.trace_deviation = Some(trace_dev);
    report.trace_ok = trace_dev <= tol.trace;
    // The spectrum of the Hermitian part is meaningful even when the
    // hermiticity check fails, so report it regardless.
    if let Ok(eig) = hermitian_eig(&matrix.hermitian_part()) {
        let min = eig.values.first().map_or(0.0, |v| v.as_f64());
        report.min_eigenvalue = Some(min);
        report.psd_ok = min >= -tol.eigen_clamp;
    }
    report
}

/// Validated density matrix with subsystem-dimension metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix<T> {
    matrix: Matrix<T>,
    dims: Vec<usize>,
    label: Option<String>,
}

impl<T: Real> DensityMatrix<T> {
    pub fn new(matrix: Matrix<T>, dims: Vec<usize>) -> Result<Self> {
        Self::new_with(matrix, dims, &T::tolerances())
    }

    pub fn new_with(matrix: Matrix<T>, dims: Vec<usize>, tol: &Tolerances) -> Result<Self> {
        let report = validate(&matrix, &dims, tol);
        if !report.passed() {
            return Err(Error::InvalidState(Box::new(report)));
        }
        Ok(Self { matrix, dims, label: None })
    }

    /// Skips validation; callers guarantee the invariants by construction.
    pub(crate) fn trusted(matrix: Matrix<T>, dims: Vec<usize>) -> Self {
        debug_assert!(validate(&matrix, &dims, &T::tolerances()).passed());
        Self { matrix, dims, label: None }
    }

    /// `|ψ⟩⟨ψ|` for a normalized state vector.
    pub fn from_pure(psi: &[C<T>], dims: Vec<usize>) -> Result<Self> {
        let norm_sqr: T = psi.iter().map(|z| z.norm_sqr()).sum();
        if (norm_sqr - T::one()).abs().as_f64() > T::tolerances().normalization {
            return Err(Error::NotNormalized { norm_sqr: norm_sqr.as_f64() });
        }
        Self::new(Matrix::projector(psi), dims)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.matrix
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn validate(&self) -> ValidationReport {
        validate(&self.matrix, &self.dims, &T::tolerances())
    }

    /// Reinterprets the subsystem structure; the product must be unchanged.
    pub fn reshape(mut self, dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() || dims.iter().product::<usize>() != self.dim() {
            return Err(Error::DimensionMismatch(format!("dims {dims:?} for dimension {}", self.dim())));
        }
        self.dims = dims;
        Ok(self)
    }

    /// Reduced state on the listed subsystems.
    pub fn marginal(&self, keep: &[usize]) -> Result<Self> {
        let m = partial_trace(&self.matrix, &self.dims, keep)?;
        let mut sorted = keep.to_vec();
        sorted.sort_unstable();
        let dims = sorted.iter().map(|&k| self.dims[k]).collect();
        Ok(Self { matrix: m.hermitian_part(), dims, label: None })
    }

    /// `self ⊗ other`, concatenating subsystem lists.
    pub fn tensor(&self, other: &Self) -> Self {
        let dims = self.dims.iter().chain(&other.dims).copied().collect();
        Self { matrix: kron(&self.matrix, &other.matrix), dims, label: None }
    }

    /// Reorders subsystems; see [`permute_subsystems`].
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        let m = permute_subsystems(&self.matrix, &self.dims, perm)?;
        let dims = perm.iter().map(|&p| self.dims[p]).collect();
        Ok(Self { matrix: m, dims, label: None })
    }

    /// `ρ_AB → ρ_BA` for a bipartite state.
    pub fn swap(&self) -> Result<Self> {
        if self.dims.len() != 2 {
            return Err(Error::DimensionMismatch("swap needs a bipartite state".into()));
        }
        self.permute(&[1, 0])
    }

    /// `(U_1 ⊗ U_2 ⊗ ...) ρ (U_1 ⊗ U_2 ⊗ ...)^†` with one unitary per
    /// subsystem.
    pub fn conjugate_local(&self, unitaries: &[Matrix<T>]) -> Result<Self> {
        if unitaries.len() != self.dims.len() || unitaries.iter().zip(&self.dims).any(|(u, &d)| u.rows() != d) {
            return Err(Error::DimensionMismatch("one unitary per subsystem required".into()));
        }
        let u = unitaries.iter().skip(1).fold(unitaries[0].clone(), |acc, x| kron(&acc, x));
        Ok(Self { matrix: self.matrix.conjugate_by(&u).hermitian_part(), dims: self.dims.clone(), label: None })
    }

    pub fn eigen(&self) -> Result<EigenSystem<T>> {
        hermitian_eig(&self.matrix)
    }

    pub fn sqrt(&self) -> Result<Matrix<T>> {
        psd_sqrt_with(&self.matrix, &T::tolerances())
    }

    pub fn is_pure(&self, tol: &Tolerances) -> Result<bool> {
        let eig = self.eigen()?;
        Ok(eig.values.last().is_some_and(|&v| v.as_f64() >= 1.0 - tol.pure_state))
    }
}

/// Two independent sources: `ρ_AB` on `(m, n)` and `ρ_CD` on `(u, v)`.
/// The joint measurement acts on `B ⊗ C`.
#[derive(Debug, Clone, PartialEq)]
pub struct BilocalInput<T> {
    pub ab: DensityMatrix<T>,
    pub cd: DensityMatrix<T>,
}

impl<T: Real> BilocalInput<T> {
    pub fn new(ab: DensityMatrix<T>, cd: DensityMatrix<T>) -> Result<Self> {
        if ab.dims().len() != 2 || cd.dims().len() != 2 {
            return Err(Error::DimensionMismatch("both sources must be bipartite".into()));
        }
        Ok(Self { ab, cd })
    }

    /// The `ρ_BA ⊗ ρ_AB` layout: the first source is the swapped copy, so
    /// the measurement acts on the two `A` halves.
    pub fn swapped_copy(rho: &DensityMatrix<T>) -> Result<Self> {
        Self::new(rho.swap()?, rho.clone())
    }

    /// `(m, n, u, v)`.
    pub fn dims(&self) -> [usize; 4] {
        [self.ab.dims()[0], self.ab.dims()[1], self.cd.dims()[0], self.cd.dims()[1]]
    }

    /// `ρ_AB ⊗ ρ_CD` on `(m, n, u, v)`.
    pub fn full_state(&self) -> DensityMatrix<T> {
        self.ab.tensor(&self.cd)
    }

    pub fn marginal_b(&self) -> Result<DensityMatrix<T>> {
        self.ab.marginal(&[1])
    }

    pub fn marginal_c(&self) -> Result<DensityMatrix<T>> {
        self.cd.marginal(&[0])
    }

    /// `ρ_BC = ρ_B ⊗ ρ_C`.
    pub fn marginal_bc(&self) -> Result<DensityMatrix<T>> {
        Ok(self.marginal_b()?.tensor(&self.marginal_c()?))
    }

    /// Applies `U_A ⊗ U_B` to the first source and `U_C ⊗ U_D` to the second.
    pub fn conjugate_local(&self, u: &[Matrix<T>; 4]) -> Result<Self> {
        Self::new(
            self.ab.conjugate_local(&[u[0].clone(), u[1].clone()])?,
            self.cd.conjugate_local(&[u[2].clone(), u[3].clone()])?,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BellKind {
    /// `(|00⟩+|11⟩)/√2`
    PhiPlus,
    /// `(|00⟩-|11⟩)/√2`
    PhiMinus,
    /// `(|01⟩+|10⟩)/√2`
    PsiPlus,
    /// `(|01⟩-|10⟩)/√2`
    PsiMinus,
}

impl BellKind {
    pub const ALL: [BellKind; 4] = [BellKind::PhiPlus, BellKind::PhiMinus, BellKind::PsiPlus, BellKind::PsiMinus];

    pub fn vector<T: Real>(self) -> Vec<C<T>> {
        let h = T::FRAC_1_SQRT_2();
        let z = T::zero();
        let v = match self {
            BellKind::PhiPlus => [h, z, z, h],
            BellKind::PhiMinus => [h, z, z, -h],
            BellKind::PsiPlus => [z, h, h, z],
            BellKind::PsiMinus => [z, h, -h, z],
        };
        v.iter().map(|&x| cr(x)).collect()
    }
}

impl fmt::Display for BellKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BellKind::PhiPlus => "phi+",
            BellKind::PhiMinus => "phi-",
            BellKind::PsiPlus => "psi+",
            BellKind::PsiMinus => "psi-",
        })
    }
}

impl FromStr for BellKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_lowercase().as_str() {
            "phi+" | "phi_plus" | "φ+" | "φ⁺" => Ok(BellKind::PhiPlus),
            "phi-" | "phi_minus" | "φ-" | "φ⁻" => Ok(BellKind::PhiMinus),
            "psi+" | "psi_plus" | "ψ+" | "ψ⁺" => Ok(BellKind::PsiPlus),
            "psi-" | "psi_minus" | "ψ-" | "ψ⁻" => Ok(BellKind::PsiMinus),
            other => Err(Error::OutOfRange(format!("unknown Bell state '{other}'"))),
        }
    }
}

pub fn bell<T: Real>(kind: BellKind) -> DensityMatrix<T> {
    DensityMatrix::trusted(Matrix::projector(&kind.vector::<T>()), vec![2, 2]).with_label(format!("bell:{kind}"))
}

/// Bell-diagonal basis in weight order.
const BELL_DIAGONAL_ORDER: [BellKind; 4] =
    [BellKind::PhiPlus, BellKind::PhiMinus, BellKind::PsiPlus, BellKind::PsiMinus];

pub(crate) fn check_weights<T: Real>(weights: &[T], tol: &Tolerances) -> Result<()> {
    if weights.iter().any(|w| !w.is_finite() || *w < T::zero()) {
        return Err(Error::InvalidWeights(format!("negative or non-finite weight in {weights:?}")));
    }
    let sum: T = weights.iter().copied().sum();
    if (sum - T::one()).abs().as_f64() > tol.weights {
        return Err(Error::InvalidWeights(format!("weights sum to {sum}")));
    }
    Ok(())
}

/// `Σ_i λ_i |β_i⟩⟨β_i|` over the Bell basis in weight order.
pub fn bell_diagonal<T: Real>(weights: [T; 4]) -> Result<DensityMatrix<T>> {
    check_weights(&weights, &T::tolerances())?;
    let mut m = Matrix::zeros(4, 4);
    for (kind, &w) in BELL_DIAGONAL_ORDER.iter().zip(&weights) {
        m = &m + &Matrix::projector(&kind.vector::<T>()).scale(w);
    }
    Ok(DensityMatrix::trusted(m, vec![2, 2]).with_label("bell_diagonal"))
}

/// Bell-diagonal weights of the Werner state `v|ψ⁻⟩⟨ψ⁻| + (1-v) I/4`.
pub fn werner_weights<T: Real>(v: T) -> [T; 4] {
    let q = (T::one() - v) / T::lit(4.0);
    [q, q, q, (T::one() + T::lit(3.0) * v) / T::lit(4.0)]
}

/// Werner state `v|ψ⁻⟩⟨ψ⁻| + (1-v) I/4`, `v ∈ [-1/3, 1]`.
pub fn werner<T: Real>(v: T) -> Result<DensityMatrix<T>> {
    let slack = T::lit(T::tolerances().weights);
    if !v.is_finite() || v < -T::one() / T::lit(3.0) - slack || v > T::one() + slack {
        return Err(Error::OutOfRange(format!("Werner parameter {v} outside [-1/3, 1]")));
    }
    let singlet = Matrix::projector(&BellKind::PsiMinus.vector::<T>());
    let m = &singlet.scale(v) + &Matrix::identity(4).scale((T::one() - v) / T::lit(4.0));
    Ok(DensityMatrix::trusted(m.hermitian_part(), vec![2, 2]).with_label("werner"))
}

/// `(|00⟩⟨00| + |11⟩⟨11|)/2`.
pub fn classical_separable<T: Real>() -> DensityMatrix<T> {
    let half = T::lit(0.5);
    DensityMatrix::trusted(Matrix::diag_real(&[half, T::zero(), T::zero(), half]), vec![2, 2])
        .with_label("classical_separable")
}

/// One term `p_k ρ^A_k ⊗ |k⟩⟨k|` of a quantum-classical state.
#[derive(Debug, Clone)]
pub struct QcComponent<T> {
    pub rho_a: Matrix<T>,
    pub weight: T,
    pub index: usize,
}

/// `Σ_k p_k ρ^A_k ⊗ |k_B⟩⟨k_B|` on `(d_A, dim_b)`.
pub fn quantum_classical<T: Real>(components: &[QcComponent<T>], dim_b: usize) -> Result<DensityMatrix<T>> {
    let tol = T::tolerances();
    let first = components.first().ok_or_else(|| Error::InvalidWeights("no components".into()))?;
    let da = first.rho_a.rows();
    let weights: Vec<T> = components.iter().map(|c| c.weight).collect();
    check_weights(&weights, &tol)?;
    let mut m = Matrix::zeros(da * dim_b, da * dim_b);
    for comp in components {
        let report = validate(&comp.rho_a, &[da], &tol);
        if !report.passed() {
            return Err(Error::InvalidState(Box::new(report)));
        }
        if comp.index >= dim_b {
            return Err(Error::DimensionMismatch(format!("basis index {} >= {dim_b}", comp.index)));
        }
        let mut e = vec![C::zero(); dim_b];
        e[comp.index] = C::new(T::one(), T::zero());
        m = &m + &kron(&comp.rho_a, &Matrix::projector(&e)).scale(comp.weight);
    }
    DensityMatrix::new(m, vec![da, dim_b]).map(|d| d.with_label("quantum_classical"))
}

/// Classical-quantum state `Σ_f q_f |f⟩⟨f| ⊗ ρ^D_f`: the mirror image of
/// [`quantum_classical`].
pub fn classical_quantum<T: Real>(components: &[QcComponent<T>], dim_c: usize) -> Result<DensityMatrix<T>> {
    quantum_classical(components, dim_c)?.swap().map(|d| d.with_label("classical_quantum"))
}

/// `Σ_i λ_i |ii⟩` as a density matrix on `(k, k)`, `k = len(λ)`.
pub fn pure_from_schmidt<T: Real>(coefficients: &[T]) -> Result<DensityMatrix<T>> {
    let k = coefficients.len();
    let norm_sqr: T = coefficients.iter().map(|&x| x * x).sum();
    if k == 0
        || coefficients.iter().any(|&x| x < T::zero())
        || (norm_sqr - T::one()).abs().as_f64() > T::tolerances().weights
    {
        return Err(Error::NotNormalized { norm_sqr: norm_sqr.as_f64() });
    }
    let mut psi = vec![C::zero(); k * k];
    for (i, &l) in coefficients.iter().enumerate() {
        psi[i * k + i] = cr(l);
    }
    Ok(DensityMatrix::trusted(Matrix::projector(&psi), vec![k, k]).with_label("pure_schmidt"))
}

/// Ginibre-induced random state `G G^† / tr(G G^†)` with `G` a `d x rank`
/// matrix of standard complex Gaussians drawn row-major (real part, then
/// imaginary part).
pub fn random_density<T: Real, R: Rng + ?Sized>(d: usize, rank: usize, rng: &mut R) -> Result<DensityMatrix<T>> {
    if d == 0 || rank == 0 || rank > d {
        return Err(Error::OutOfRange(format!("rank {rank} for dimension {d}")));
    }
    let g = Matrix::from_fn(d, rank, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(T::lit(re), T::lit(im))
    });
    let gg = &g * &g.adjoint();
    let t = gg.trace().re;
    Ok(DensityMatrix::trusted(gg.scale(T::one() / t).hermitian_part(), vec![d]).with_label("random"))
}

/// Random product state `ρ_A ⊗ ρ_B` on `(da, db)`.
pub fn random_product<T: Real, R: Rng + ?Sized>(da: usize, db: usize, rng: &mut R) -> Result<DensityMatrix<T>> {
    let a = random_density(da, da, rng)?;
    let b = random_density(db, db, rng)?;
    Ok(a.tensor(&b))
}

/// Real-part diagonal of a matrix; used for classical marginals.
pub fn diagonal<T: Real>(m: &Matrix<T>) -> Vec<T> {
    (0..m.rows()).map(|i| m[(i, i)].re).collect()
}

#[allow(clippy::float_cmp)]
#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::haar_unitary;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn half_identity() -> Matrix<f64> {
        Matrix::identity(2).scale(0.5)
    }

    #[test]
    fn validate_cases() {
        assert!(validate(&half_identity(), &[2], &Tolerances::default()).passed());
        let bad = Matrix::<f64>::diag_real(&[1.5, -0.5]);
        let r = validate(&bad, &[2], &Tolerances::default());
        assert!(!r.passed() && !r.psd_ok && r.trace_ok);
        assert!(bell_diagonal([0.3, 0.3, 0.2, 0.2]).unwrap().validate().passed());
        let r = validate(&half_identity(), &[3], &Tolerances::default());
        assert!(!r.dims_consistent);
    }

    #[test]
    fn bell_states_have_mixed_marginals() {
        for kind in BellKind::ALL {
            let rho = bell::<f64>(kind);
            assert!(rho.validate().passed());
            for k in 0..2 {
                assert!(rho.marginal(&[k]).unwrap().matrix().max_abs_diff(&half_identity()) < 1e-15);
            }
        }
        let phi = bell::<f64>(BellKind::PhiPlus);
        let expected = Matrix::from_real_rows(&[
            &[0.5, 0.0, 0.0, 0.5],
            &[0.0, 0.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 0.0],
            &[0.5, 0.0, 0.0, 0.5],
        ]);
        assert!(phi.matrix().max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn bell_diagonal_corners_and_centre() {
        let pure = bell_diagonal([1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(pure.matrix().max_abs_diff(bell::<f64>(BellKind::PhiPlus).matrix()) < 1e-15);
        let mixed = bell_diagonal([0.25; 4]).unwrap();
        assert!(mixed.matrix().max_abs_diff(&Matrix::identity(4).scale(0.25)) < 1e-15);
        let cs = bell_diagonal([0.5, 0.5, 0.0, 0.0]).unwrap();
        assert!(cs.matrix().max_abs_diff(classical_separable::<f64>().matrix()) < 1e-15);
    }

    #[test]
    fn bell_diagonal_rejects_bad_weights() {
        assert!(matches!(bell_diagonal([0.5, 0.5, 0.1, -0.1]), Err(Error::InvalidWeights(_))));
        assert!(matches!(bell_diagonal([0.5, 0.5, 0.1, 0.0]), Err(Error::InvalidWeights(_))));
    }

    #[test]
    fn werner_matches_bell_diagonal() {
        assert!(werner(1.0).unwrap().matrix().max_abs_diff(bell::<f64>(BellKind::PsiMinus).matrix()) < 1e-15);
        assert!(werner(0.0).unwrap().matrix().max_abs_diff(&Matrix::identity(4).scale(0.25)) < 1e-15);
        let half = bell_diagonal([0.125, 0.125, 0.125, 0.625]).unwrap();
        assert!(werner(0.5).unwrap().matrix().max_abs_diff(half.matrix()) <= 1e-12);
        for i in 0..=20 {
            let v = -1.0 / 3.0 + (4.0 / 3.0) * i as f64 / 20.0;
            let w = werner(v).unwrap();
            assert!(w.matrix().max_abs_diff(bell_diagonal(werner_weights(v)).unwrap().matrix()) <= 1e-12);
            assert!(w.validate().passed());
        }
        assert!(matches!(werner(1.1), Err(Error::OutOfRange(_))));
        assert!(matches!(werner(-0.5), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn quantum_classical_cases() {
        let rho_a = Matrix::<f64>::diag_real(&[0.3, 0.7]);
        let single = quantum_classical(&[QcComponent { rho_a: rho_a.clone(), weight: 1.0, index: 0 }], 2).unwrap();
        let expected = kron(&rho_a, &Matrix::diag_real(&[1.0, 0.0]));
        assert!(single.matrix().max_abs_diff(&expected) < 1e-15);

        let comps: Vec<_> = (0..2)
            .map(|k| {
                let mut d = [0.0; 2];
                d[k] = 1.0;
                QcComponent { rho_a: Matrix::diag_real(&d), weight: 0.5, index: k }
            })
            .collect();
        let ex2 = quantum_classical(&comps, 2).unwrap();
        assert!(ex2.matrix().max_abs_diff(classical_separable::<f64>().matrix()) < 1e-15);

        let comps = [
            QcComponent { rho_a: Matrix::diag_real(&[1.0, 0.0]), weight: 0.2, index: 0 },
            QcComponent { rho_a: half_identity(), weight: 0.8, index: 1 },
        ];
        let qc = quantum_classical(&comps, 2).unwrap();
        let rb = qc.marginal(&[1]).unwrap();
        assert!(rb.matrix().max_abs_diff(&Matrix::diag_real(&[0.2, 0.8])) < 1e-15);
        // Commutes with I ⊗ |k⟩⟨k|.
        for k in 0..2 {
            let mut e = [C::zero(); 2];
            e[k] = cr(1.0);
            let p = kron(&Matrix::identity(2), &Matrix::projector(&e));
            let comm = &(qc.matrix() * &p) - &(&p * qc.matrix());
            assert!(comm.max_abs() < 1e-15);
        }
        assert!(matches!(
            quantum_classical(&[QcComponent { rho_a: half_identity(), weight: 0.9, index: 0 }], 2),
            Err(Error::InvalidWeights(_))
        ));
    }

    #[test]
    fn random_density_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let pure: DensityMatrix<f64> = random_density(4, 1, &mut rng).unwrap();
        assert!(pure.is_pure(&Tolerances::default()).unwrap());
        let full: DensityMatrix<f64> = random_density(2, 2, &mut rng).unwrap();
        let e = full.eigen().unwrap().values;
        assert!((e[1] - e[0]).abs() > 1e-8);
        let a: DensityMatrix<f64> = random_density(4, 3, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b: DensityMatrix<f64> = random_density(4, 3, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
        assert!(a.validate().passed());
        assert!(random_density::<f64, _>(2, 3, &mut rng).is_err());
    }

    #[test]
    fn pure_from_schmidt_cases() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let phi = pure_from_schmidt(&[h, h]).unwrap();
        assert!(phi.matrix().max_abs_diff(bell::<f64>(BellKind::PhiPlus).matrix()) < 1e-15);
        let zero = pure_from_schmidt(&[1.0, 0.0]).unwrap();
        assert_eq!(zero.matrix()[(0, 0)], cr(1.0));
        let s = pure_from_schmidt(&[0.9f64.sqrt(), 0.1f64.sqrt()]).unwrap();
        let e = s.marginal(&[0]).unwrap().eigen().unwrap().values;
        assert!((e[0] - 0.1).abs() < 1e-14 && (e[1] - 0.9).abs() < 1e-14);
        assert!(matches!(pure_from_schmidt(&[0.5, 0.5]), Err(Error::NotNormalized { .. })));
    }

    #[test]
    fn local_conjugation_preserves_validity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rho: DensityMatrix<f64> = random_density(4, 4, &mut rng).unwrap().reshape(vec![2, 2]).unwrap();
        let u = [haar_unitary(2, &mut rng), haar_unitary(2, &mut rng)];
        let out = rho.conjugate_local(&u).unwrap();
        assert!(out.validate().passed());
        let e1 = rho.eigen().unwrap().values;
        let e2 = out.eigen().unwrap().values;
        assert!(e1.iter().zip(&e2).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn bell_kind_parsing() {
        assert_eq!("phi+".parse::<BellKind>().unwrap(), BellKind::PhiPlus);
        assert_eq!("Ψ⁻".parse::<BellKind>().unwrap(), BellKind::PsiMinus);
        assert!("chi".parse::<BellKind>().is_err());
    }
}
