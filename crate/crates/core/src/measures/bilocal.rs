use std::collections::BTreeMap;

use num_traits::Zero;

use super::{
    finalize, skew_information_with, smallest_sum, Bounds, MarginalSpectrum, MeasureOptions, MeasureResult, Method,
};
use crate::error::{Error, Result};
use crate::operator_basis::{
    bilocal_correlation_matrix, gell_mann_basis, gell_mann_correlation, measurement_expansion, CorrelationMatrix,
    HermitianBasis,
};
use crate::optimizer::{
    invariant_blocks_of, maximize, objective, BlockStructure, InvariantMeasurement, SandwichObjective,
};
use crate::qmatrix::{hermitian_eig_with, kron_all, kron_vec, schmidt_with, EigenSystem, Matrix, RealMatrix};
use crate::scalar::{cr, Real, Tolerances, C};
use crate::states::{check_weights, BilocalInput, DensityMatrix};

/// `1 - (Σ_i λ_i⁴)(Σ_j μ_j⁴)` for pure sources with Schmidt coefficients
/// `λ` and `μ`.
pub fn minbs_pure<T: Real>(lambda: &[T], mu: &[T]) -> Result<T> {
    let tol = T::tolerances();
    for coeffs in [lambda, mu] {
        let norm_sqr: T = coeffs.iter().map(|&x| x * x).sum();
        if (norm_sqr - T::one()).abs().as_f64() > tol.normalization {
            return Err(Error::NotNormalized { norm_sqr: norm_sqr.as_f64() });
        }
    }
    let quartic = |c: &[T]| c.iter().map(|&x| (x * x) * (x * x)).sum::<T>();
    Ok(T::one() - quartic(lambda) * quartic(mu))
}

/// `1 - (sum of the n·u smallest eigenvalues of T Tᵗ)`.
pub fn upper_bound_t2<T: Real>(t_bcad: &RealMatrix<T>, n: usize, u: usize) -> Result<T> {
    if t_bcad.rows() != n * n * u * u {
        return Err(Error::DimensionMismatch(format!(
            "correlation matrix has {} rows, expected {}",
            t_bcad.rows(),
            n * n * u * u
        )));
    }
    Ok(T::one() - smallest_sum(&t_bcad.gram(), n * u, &T::tolerances())?)
}

/// `tr(F T Tᵗ Fᵗ)` with `F` the expansion of `projectors` in the
/// Gell-Mann product basis of `B ⊗ C`.
pub fn correlation_objective<T: Real>(
    t_bcad: &RealMatrix<T>,
    projectors: &[Matrix<T>],
    n: usize,
    u: usize,
) -> Result<T> {
    let f = measurement_expansion(projectors, &gell_mann_basis(n), &gell_mann_basis(u))?;
    Ok(t_bcad.gram().sandwich_trace(&f))
}

/// `1 - objective` for an explicit measurement on `B ⊗ C`, using the
/// square root of the full four-party state.
pub fn measurement_value<T: Real>(input: &BilocalInput<T>, measurement: &InvariantMeasurement<T>) -> Result<T> {
    Ok(T::one() - objective(&input.full_state(), measurement)?)
}

/// `Σ_g I(ρ_AB ⊗ ρ_CD, I_m ⊗ Π_g ⊗ I_v)`.
pub fn skew_sum<T: Real>(input: &BilocalInput<T>, projectors: &[Matrix<T>]) -> Result<T> {
    let [m, n, u, v] = input.dims();
    let full = input.full_state();
    let tol = T::tolerances();
    let (im, iv) = (Matrix::identity(m), Matrix::identity(v));
    let mut total = T::zero();
    for p in projectors {
        if p.rows() != n * u {
            return Err(Error::DimensionMismatch(format!("projector of size {} on B⊗C of size {}", p.rows(), n * u)));
        }
        total = total + skew_information_with(&full, &kron_all(&[&im, p, &iv]), &tol)?;
    }
    Ok(total)
}

/// `h_0..h_3` of a Bell-diagonal state, sign convention as in
/// `h_2 = -√λ_1 + √λ_2 + √λ_3 - √λ_4`.
pub fn bell_diagonal_h<T: Real>(weights: [T; 4]) -> Result<[T; 4]> {
    check_weights(&weights, &T::tolerances())?;
    let [a, b, c, d] = weights.map(|w| w.sqrt());
    Ok([a + b + c + d, a - b + c - d, -a + b + c - d, a + b - c - d])
}

/// `1 - (h_0⁴ + h_1⁴ + h_2⁴ + h_3⁴)/16` for the swapped-copy input of a
/// Bell-diagonal state.
///
/// This is the value of the Bell-basis measurement on the two middle
/// qubits. It is exact on part of the simplex only; see the crate README.
pub fn bell_diagonal_minbs<T: Real>(weights: [T; 4]) -> Result<T> {
    let h = bell_diagonal_h(weights)?;
    let s: T = h.iter().map(|&x| (x * x) * (x * x)).sum();
    Ok(T::one() - s / T::lit(16.0))
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PropertyViCheck<T> {
    /// MINBS of the swapped-copy input.
    pub lhs: T,
    /// Skew-information MIN of the state.
    pub rhs: T,
    pub holds: bool,
}

/// Compares MINBS of `ρ_BA ⊗ ρ_AB` with the skew-information MIN of `ρ_AB`.
pub fn property_vi_check<T: Real>(rho: &DensityMatrix<T>, opts: &MeasureOptions) -> Result<PropertyViCheck<T>> {
    let lhs = minbs(&BilocalInput::swapped_copy(rho)?, opts)?.value;
    let rhs = super::min_s(rho, opts)?.value;
    Ok(PropertyViCheck { lhs, rhs, holds: lhs.as_f64() >= rhs.as_f64() - 1e-7 })
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Side {
    B,
    C,
}

/// Everything the closed forms need, computed once.
struct Context<T> {
    dims: [usize; 4],
    t_ab: CorrelationMatrix<T>,
    t_cd: CorrelationMatrix<T>,
    eig_b: EigenSystem<T>,
    eig_c: EigenSystem<T>,
    spec_b: MarginalSpectrum<T>,
    spec_c: MarginalSpectrum<T>,
    rho_bc: DensityMatrix<T>,
    structure: BlockStructure<T>,
    /// The invariant set of `ρ_BC` is exactly the product-form set: no
    /// accidental coincidences `λ_s μ_t = λ_s' μ_t'` merge blocks.
    product_form: bool,
}

impl<T: Real> Context<T> {
    fn new(input: &BilocalInput<T>, tol: &Tolerances) -> Result<Self> {
        let rho_b = input.marginal_b()?;
        let rho_c = input.marginal_c()?;
        let gap = tol.degeneracy_gap;
        let rho_bc = rho_b.tensor(&rho_c);
        let structure = invariant_blocks_of(rho_bc.matrix(), gap, tol)?;
        let blocks_b = invariant_blocks_of(rho_b.matrix(), gap, tol)?.blocks.len();
        let blocks_c = invariant_blocks_of(rho_c.matrix(), gap, tol)?.blocks.len();
        Ok(Self {
            dims: input.dims(),
            t_ab: gell_mann_correlation(&input.ab)?,
            t_cd: gell_mann_correlation(&input.cd)?,
            eig_b: hermitian_eig_with(rho_b.matrix(), tol)?,
            eig_c: hermitian_eig_with(rho_c.matrix(), tol)?,
            spec_b: MarginalSpectrum::of(&rho_b, gap)?,
            spec_c: MarginalSpectrum::of(&rho_c, gap)?,
            product_form: structure.blocks.len() == blocks_b * blocks_c,
            rho_bc,
            structure,
        })
    }

    fn t2(&self) -> Result<T> {
        let [_, n, u, _] = self.dims;
        upper_bound_t2(&bilocal_correlation_matrix(&self.t_ab, &self.t_cd), n, u)
    }

    /// Rows indexed by the measured subsystem's basis: `T_abᵗ` or `T_cd`.
    fn side_matrix(&self, side: Side) -> RealMatrix<T> {
        match side {
            Side::B => self.t_ab.transpose(),
            Side::C => self.t_cd.0.clone(),
        }
    }

    fn dim(&self, side: Side) -> usize {
        match side {
            Side::B => self.dims[1],
            Side::C => self.dims[2],
        }
    }

    fn spectrum(&self, side: Side) -> &MarginalSpectrum<T> {
        match side {
            Side::B => &self.spec_b,
            Side::C => &self.spec_c,
        }
    }

    /// `tr(P S Sᵗ Pᵗ)` with `p_sj = ⟨s|Y_j|s⟩` over the marginal eigenbasis.
    fn eigenbasis_factor(&self, side: Side) -> T {
        let (eig, d) = match side {
            Side::B => (&self.eig_b, self.dims[1]),
            Side::C => (&self.eig_c, self.dims[2]),
        };
        let vectors: Vec<Vec<C<T>>> = (0..d).map(|s| eig.eigenvector(s)).collect();
        vector_factor(&vectors, &gell_mann_basis(d), &self.side_matrix(side))
    }

    /// `‖r‖² + λ_min(R Rᵗ)` for a qubit side, with the minimizing Bloch
    /// direction.
    fn qubit_minimum(&self, side: Side, tol: &Tolerances) -> Result<(T, [T; 3])> {
        let s = self.side_matrix(side);
        let r = s.row(0);
        let rest = s.row_block(1, 4);
        let eig = hermitian_eig_with(&rest.gram().to_complex(), tol)?;
        let dir = eig.eigenvector(0);
        // Strip the arbitrary global phase of the real eigenvector.
        let pivot = dir.iter().copied().fold(C::zero(), |a, z| if z.norm() > a.norm() { z } else { a });
        let phase = pivot.conj() / pivot.norm();
        let c: Vec<T> = dir.iter().map(|z| (z * phase).re).collect();
        let norm_r: T = r.iter().map(|&x| x * x).sum();
        Ok((norm_r + eig.values[0], [c[0], c[1], c[2]]))
    }

    /// `1 - a · (sum of the d smallest eigenvalues of S Sᵗ)` on the free side.
    fn t3(&self, fixed: Side, tol: &Tolerances) -> Result<T> {
        let free = other(fixed);
        let s = self.side_matrix(free);
        Ok(T::one() - self.eigenbasis_factor(fixed) * smallest_sum(&s.gram(), self.dim(free), tol)?)
    }
}

fn other(side: Side) -> Side {
    match side {
        Side::B => Side::C,
        Side::C => Side::B,
    }
}

/// `Σ_s ‖p_s S‖²` with `p_sj = ⟨g_s|Y_j|g_s⟩`.
fn vector_factor<T: Real>(vectors: &[Vec<C<T>>], basis: &HermitianBasis<T>, side: &RealMatrix<T>) -> T {
    let mut total = T::zero();
    for g in vectors {
        let p: Vec<T> = basis.elements().iter().map(|y| y.expectation(g).re).collect();
        for col in 0..side.cols() {
            let x: T = p.iter().enumerate().map(|(j, &pj)| pj * side[(j, col)]).sum();
            total = total + x * x;
        }
    }
    total
}

/// Eigenvectors of `(I + c·σ)/2` ordered `(+, -)`.
fn bloch_pair<T: Real>(c: [T; 3], tol: &Tolerances) -> Result<[Vec<C<T>>; 2]> {
    let half = T::lit(0.5);
    let p = Matrix::from_rows(&[
        vec![cr(half * (T::one() + c[2])), C::new(half * c[0], -half * c[1])],
        vec![C::new(half * c[0], half * c[1]), cr(half * (T::one() - c[2]))],
    ])?;
    let eig = hermitian_eig_with(&p, tol)?;
    Ok([eig.eigenvector(1), eig.eigenvector(0)])
}

/// Closed form with `fixed` measured in its marginal eigenbasis.
fn one_sided<T: Real>(
    input: &BilocalInput<T>,
    ctx: &Context<T>,
    fixed: Side,
    opts: &MeasureOptions,
) -> Result<MeasureResult<T>> {
    let tol = &opts.tolerances;
    let free = other(fixed);
    let a = ctx.eigenbasis_factor(fixed);
    let t3 = ctx.t3(fixed, tol)?;
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert(
        match fixed {
            Side::B => "fixed_factor_b",
            Side::C => "fixed_factor_c",
        }
        .into(),
        a.as_f64(),
    );
    if !ctx.product_form {
        diagnostics.insert("bc_extra_degeneracy".into(), 1.0);
    }
    let bounds = Some(Bounds { t2_upper: Some(ctx.t2()?), t3_upper: Some(t3) });

    if !ctx.spectrum(free).degenerate {
        let value = T::one() - a * ctx.eigenbasis_factor(free);
        let m = ctx.structure.eigenbasis_measurement();
        return Ok(finalize(value, Method::NondegenerateClosedForm, Some(m), bounds, diagnostics, tol));
    }
    if ctx.dim(free) == 2 {
        let (factor, dir) = ctx.qubit_minimum(free, tol)?;
        let value = T::one() - a * factor;
        let pair = bloch_pair(dir, tol)?;
        let d_fixed = ctx.dim(fixed);
        let eig_fixed = match fixed {
            Side::B => &ctx.eig_b,
            Side::C => &ctx.eig_c,
        };
        let mut vectors = Vec::with_capacity(2 * d_fixed);
        for s in 0..d_fixed {
            let e = eig_fixed.eigenvector(s);
            for q in &pair {
                vectors.push(match fixed {
                    Side::B => kron_vec(&e, q),
                    Side::C => kron_vec(q, &e),
                });
            }
        }
        let m = InvariantMeasurement::from_vectors(&ctx.structure, &vectors, tol).ok();
        diagnostics.insert("qubit_factor".into(), factor.as_f64());
        return Ok(finalize(value, Method::QubitCClosedForm, m, bounds, diagnostics, tol));
    }
    let objective = SandwichObjective::bilocal(input, tol)?;
    let mut r = maximize(&objective, ctx.rho_bc.matrix(), tol.degeneracy_gap, &opts.optimizer, tol)?;
    r.method = Method::BoundOnly;
    r.bounds = bounds;
    r.diagnostics.extend(diagnostics);
    Ok(r)
}

/// Closed form for a nondegenerate `ρ_B` (roles of `B` and `C` as stated).
///
/// With a qubit `C` and degenerate `ρ_C` the value is exact; with `ρ_C`
/// also nondegenerate it reduces to [`minbs_both_nondegenerate`]; for
/// `u > 2` the exact value comes from the optimizer and `t3_upper` is
/// reported.
pub fn minbs_b_nondegenerate<T: Real>(input: &BilocalInput<T>, opts: &MeasureOptions) -> Result<MeasureResult<T>> {
    let ctx = Context::new(input, &opts.tolerances)?;
    if ctx.spec_b.degenerate {
        return Err(Error::DegenerateMarginal("B"));
    }
    one_sided(input, &ctx, Side::B, opts)
}

/// `1 - tr(B T_abᵗ T_ab Bᵗ) · tr(C T_cd T_cdᵗ Cᵗ)` with `B`, `C` from the
/// marginal eigenbases.
pub fn minbs_both_nondegenerate<T: Real>(input: &BilocalInput<T>, opts: &MeasureOptions) -> Result<MeasureResult<T>> {
    let tol = &opts.tolerances;
    let ctx = Context::new(input, tol)?;
    if ctx.spec_b.degenerate {
        return Err(Error::DegenerateMarginal("B"));
    }
    if ctx.spec_c.degenerate {
        return Err(Error::DegenerateMarginal("C"));
    }
    both_nondegenerate(&ctx, tol)
}

fn both_nondegenerate<T: Real>(ctx: &Context<T>, tol: &Tolerances) -> Result<MeasureResult<T>> {
    let a = ctx.eigenbasis_factor(Side::B);
    let c = ctx.eigenbasis_factor(Side::C);
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("fixed_factor_b".into(), a.as_f64());
    diagnostics.insert("fixed_factor_c".into(), c.as_f64());
    if !ctx.product_form {
        diagnostics.insert("bc_extra_degeneracy".into(), 1.0);
    }
    let bounds = Some(Bounds { t2_upper: Some(ctx.t2()?), t3_upper: Some(ctx.t3(Side::B, tol)?) });
    let m = ctx.structure.eigenbasis_measurement();
    Ok(finalize(T::one() - a * c, Method::NondegenerateClosedForm, Some(m), bounds, diagnostics, tol))
}

fn schmidt_coefficients<T: Real>(rho: &DensityMatrix<T>, tol: &Tolerances) -> Result<Vec<T>> {
    let eig = rho.eigen()?;
    let top = eig.eigenvector(eig.values.len() - 1);
    let norm = top.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
    let psi: Vec<C<T>> = top.into_iter().map(|z| z / norm).collect();
    Ok(schmidt_with(&psi, rho.dims()[0], rho.dims()[1], tol)?.coefficients)
}

/// MINBS of `ρ_AB ⊗ ρ_CD`.
///
/// Dispatch: pure sources use the Schmidt closed form; nondegenerate
/// marginals use the eigenbasis product form; one nondegenerate marginal
/// with a qubit on the other side uses the qubit closed form; everything
/// else goes to the optimizer. Closed forms are used only when the
/// eigenspaces of `ρ_B ⊗ ρ_C` are exactly the products of marginal
/// eigenspaces; otherwise the optimizer runs and the closed-form value is
/// kept in the diagnostics.
pub fn minbs<T: Real>(input: &BilocalInput<T>, opts: &MeasureOptions) -> Result<MeasureResult<T>> {
    let tol = &opts.tolerances;
    let ctx = Context::new(input, tol)?;
    let t2 = ctx.t2()?;

    if input.ab.is_pure(tol)? && input.cd.is_pure(tol)? {
        let lambda = schmidt_coefficients(&input.ab, tol)?;
        let mu = schmidt_coefficients(&input.cd, tol)?;
        let value = minbs_pure(&lambda, &mu)?;
        let bounds = Some(Bounds { t2_upper: Some(t2), t3_upper: None });
        let m = ctx.structure.eigenbasis_measurement();
        return Ok(finalize(value, Method::PureClosedForm, Some(m), bounds, BTreeMap::new(), tol));
    }

    let nondeg_b = !ctx.spec_b.degenerate;
    let nondeg_c = !ctx.spec_c.degenerate;
    let closed = if nondeg_b && nondeg_c {
        Some(both_nondegenerate(&ctx, tol)?)
    } else if nondeg_b && ctx.dims[2] == 2 {
        Some(one_sided(input, &ctx, Side::B, opts)?)
    } else if nondeg_c && ctx.dims[1] == 2 {
        Some(one_sided(input, &ctx, Side::C, opts)?)
    } else {
        None
    };

    let objective = SandwichObjective::bilocal(input, tol)?;
    let mut result = match closed {
        Some(mut r) if ctx.product_form => {
            if near_degenerate(&ctx.structure, tol) {
                let loose = Tolerances { non_disturbance: tol.near_degeneracy_gap, ..*tol };
                let alt = maximize(&objective, ctx.rho_bc.matrix(), tol.near_degeneracy_gap, &opts.optimizer, &loose)?;
                r.diagnostics.insert("closed_form_value".into(), r.value.as_f64());
                r.diagnostics.insert("optimizer_value_near_degenerate".into(), alt.value.as_f64());
            }
            r
        }
        other => {
            let mut r = maximize(&objective, ctx.rho_bc.matrix(), tol.degeneracy_gap, &opts.optimizer, tol)?;
            if let Some(c) = other {
                r.diagnostics.insert("closed_form_value".into(), c.value.as_f64());
            }
            if nondeg_b || nondeg_c {
                let fixed = if nondeg_b { Side::B } else { Side::C };
                r.bounds = Some(Bounds { t2_upper: None, t3_upper: Some(ctx.t3(fixed, tol)?) });
            }
            r
        }
    };
    let mut bounds = result.bounds.unwrap_or_default();
    bounds.t2_upper = Some(t2);
    result.bounds = Some(bounds);
    Ok(result)
}

/// Two distinct eigenvalue blocks of `ρ_BC` lie closer than the
/// near-degeneracy gap.
fn near_degenerate<T: Real>(structure: &BlockStructure<T>, tol: &Tolerances) -> bool {
    structure.min_gap().is_some_and(|g| g.as_f64() < tol.near_degeneracy_gap)
}
