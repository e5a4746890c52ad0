use std::collections::BTreeMap;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::blocks::invariant_blocks_of;
use super::{haar_unitary, BlockStructure, InvariantMeasurement, OptimizerConfig, SandwichObjective};
use crate::error::{Error, Result};
use crate::measures::{finalize, MeasureResult, Method};
use crate::qmatrix::{qr, Matrix};
use crate::scalar::{cr, Real, Tolerances, C};
use crate::states::{BilocalInput, DensityMatrix};

/// Result of one restart.
#[derive(Debug, Clone)]
pub struct RestartOutcome<T> {
    pub restart: usize,
    /// Minimized objective (not the measure value).
    pub objective: T,
    pub measurement: InvariantMeasurement<T>,
    pub sweeps: usize,
    pub accepted_steps: usize,
    /// Objective after each sweep, starting with the initial value.
    pub trace: Vec<T>,
}

#[derive(Debug, Clone)]
pub struct SearchOutcome<T> {
    pub best: RestartOutcome<T>,
    /// Final objective of every restart, in restart order.
    pub restart_objectives: Vec<T>,
    pub restart_sweeps: Vec<usize>,
}

/// Minimizes `objective` over measurements invariant under `structure`.
pub fn search<T: Real>(
    objective: &SandwichObjective<T>,
    structure: &BlockStructure<T>,
    rho_ref: &Matrix<T>,
    config: &OptimizerConfig,
    tol: &Tolerances,
) -> Result<SearchOutcome<T>> {
    config.validate()?;
    if objective.mid() != structure.dim {
        return Err(Error::DimensionMismatch(format!(
            "objective acts on dimension {}, reference on {}",
            objective.mid(),
            structure.dim
        )));
    }
    let outcomes: Vec<RestartOutcome<T>> = if structure.is_trivial() {
        let measurement = structure.eigenbasis_measurement();
        let value = objective.evaluate(&measurement);
        vec![RestartOutcome {
            restart: 0,
            objective: value,
            measurement,
            sweeps: 0,
            accepted_steps: 0,
            trace: vec![value],
        }]
    } else {
        (0..config.restarts)
            .into_par_iter()
            .map(|r| run_restart(objective, structure, rho_ref, config, tol, r))
            .collect::<Result<Vec<_>>>()?
    };
    let restart_objectives: Vec<T> = outcomes.iter().map(|o| o.objective).collect();
    let restart_sweeps: Vec<usize> = outcomes.iter().map(|o| o.sweeps).collect();
    let best = outcomes
        .into_iter()
        .reduce(|best, o| if o.objective < best.objective { o } else { best })
        .expect("at least one restart");
    best.measurement.check(rho_ref, tol)?;
    Ok(SearchOutcome { best, restart_objectives, restart_sweeps })
}

struct State<'a, T> {
    objective: &'a SandwichObjective<T>,
    /// Global measurement vectors, grouped by block.
    vectors: Vec<Vec<Vec<C<T>>>>,
    terms: Vec<Vec<T>>,
}

impl<T: Real> State<'_, T> {
    fn value(&self) -> T {
        self.terms.iter().flatten().copied().sum()
    }

    fn all_vectors(&self) -> Vec<Vec<C<T>>> {
        self.vectors.iter().flatten().cloned().collect()
    }
}

/// `(c g_p + s e^{iφ} g_q, -s e^{-iφ} g_p + c g_q)`.
fn rotate_pair<T: Real>(gp: &[C<T>], gq: &[C<T>], theta: T, phase: C<T>) -> (Vec<C<T>>, Vec<C<T>>) {
    let (s, c) = theta.sin_cos();
    let a: Vec<C<T>> = gp.iter().zip(gq).map(|(x, y)| x * c + y * phase * s).collect();
    let b: Vec<C<T>> = gp.iter().zip(gq).map(|(x, y)| -(x * phase.conj() * s) + y * c).collect();
    (a, b)
}

/// `a0 + a1 cos 2θ + b1 sin 2θ + a2 cos 4θ + b2 sin 4θ`.
struct TrigQuartic<T> {
    coeffs: [T; 5],
}

impl<T: Real> TrigQuartic<T> {
    const SAMPLES: usize = 8;

    /// Exact interpolation from samples at `θ_k = kπ/8`.
    fn fit(samples: &[T]) -> Self {
        let n = T::lit(Self::SAMPLES as f64);
        let two = T::lit(2.0);
        let mut c = [T::zero(); 5];
        for (k, &f) in samples.iter().enumerate() {
            let x = T::PI() * T::lit(k as f64) / T::lit(4.0);
            c[0] = c[0] + f / n;
            c[1] = c[1] + two * f * x.cos() / n;
            c[2] = c[2] + two * f * x.sin() / n;
            c[3] = c[3] + two * f * (x + x).cos() / n;
            c[4] = c[4] + two * f * (x + x).sin() / n;
        }
        Self { coeffs: c }
    }

    fn eval(&self, theta: T) -> T {
        let x = theta + theta;
        let c = &self.coeffs;
        c[0] + c[1] * x.cos() + c[2] * x.sin() + c[3] * (x + x).cos() + c[4] * (x + x).sin()
    }
}

/// Minimizes a periodic 1-D function on `[-π/2, π/2)`: grid scan, then
/// golden-section refinement around the best grid point.
fn scan_minimum<T: Real>(f: impl Fn(T) -> T, grid: usize, step_tolerance: f64) -> T {
    let width = T::PI() / T::lit(grid as f64);
    let start = -T::FRAC_PI_2();
    let mut best = (T::zero(), T::infinity());
    for i in 0..grid {
        let t = start + width * T::lit(i as f64);
        let v = f(t);
        if v < best.1 {
            best = (t, v);
        }
    }
    let inv_phi = T::lit((5f64.sqrt() - 1.0) / 2.0);
    let (mut lo, mut hi) = (best.0 - width, best.0 + width);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    // The bracket cannot shrink below a few ulps of its center.
    let stop = T::lit(step_tolerance).max(T::lit(4.0) * T::epsilon() * (T::one() + best.0.abs()));
    let mut steps = 0;
    while hi - lo > stop && steps < 200 {
        steps += 1;
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    let mid = (lo + hi) / T::lit(2.0);
    if f(mid) < best.1 {
        mid
    } else {
        best.0
    }
}

fn run_restart<T: Real>(
    objective: &SandwichObjective<T>,
    structure: &BlockStructure<T>,
    rho_ref: &Matrix<T>,
    config: &OptimizerConfig,
    tol: &Tolerances,
    restart: usize,
) -> Result<RestartOutcome<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(restart as u64);
    let vectors: Vec<Vec<Vec<C<T>>>> = structure
        .blocks
        .iter()
        .map(|b| {
            let k = b.size();
            let u = if k > 1 { haar_unitary(k, &mut rng) } else { Matrix::identity(1) };
            let rotated = &b.basis * &u;
            (0..k).map(|j| rotated.column_vec(j)).collect()
        })
        .collect();
    let terms = vectors.iter().map(|vs| vs.iter().map(|g| objective.term(g)).collect()).collect();
    let mut state = State { objective, vectors, terms };

    let phases = [cr(T::one()), C::new(T::zero(), T::one())];
    let mut value = state.value();
    let mut trace = vec![value];
    let mut sweeps = 0;
    let mut accepted_steps = 0;
    while sweeps < config.max_iterations {
        sweeps += 1;
        let before = value;
        for b in 0..structure.blocks.len() {
            let k = state.vectors[b].len();
            for p in 0..k {
                for q in p + 1..k {
                    for &phase in &phases {
                        let current = state.terms[b][p] + state.terms[b][q];
                        let (gp, gq) = (&state.vectors[b][p], &state.vectors[b][q]);
                        let pair_value = |theta: T| {
                            let (a, c) = rotate_pair(gp, gq, theta, phase);
                            state.objective.term(&a) + state.objective.term(&c)
                        };
                        let samples: Vec<T> = (0..TrigQuartic::<T>::SAMPLES)
                            .map(|i| pair_value(T::PI() * T::lit(i as f64) / T::lit(8.0)))
                            .collect();
                        let fit = TrigQuartic::fit(&samples);
                        let theta = scan_minimum(|t| fit.eval(t), config.grid_points, config.step_tolerance);
                        let (a, c) = rotate_pair(gp, gq, theta, phase);
                        let (ta, tc) = (objective.term(&a), objective.term(&c));
                        if ta + tc < current {
                            let previous = value;
                            value = value - current + ta + tc;
                            state.vectors[b][p] = a;
                            state.vectors[b][q] = c;
                            state.terms[b][p] = ta;
                            state.terms[b][q] = tc;
                            accepted_steps += 1;
                            if config.audit {
                                audit_step(structure, &state, rho_ref, tol, previous, value)?;
                            }
                        }
                    }
                }
            }
        }
        value = state.value();
        trace.push(value);
        // Improvements below the rounding level of the objective are noise.
        let floor = T::lit(config.value_tolerance).max(T::epsilon() * T::lit(16.0) * value.abs());
        if before - value < floor {
            break;
        }
    }
    let measurement = polish(structure, &state.all_vectors(), tol)?;
    let final_value = objective.evaluate(&measurement);
    Ok(RestartOutcome { restart, objective: final_value, measurement, sweeps, accepted_steps, trace })
}

fn audit_step<T: Real>(
    structure: &BlockStructure<T>,
    state: &State<'_, T>,
    rho_ref: &Matrix<T>,
    tol: &Tolerances,
    previous: T,
    value: T,
) -> Result<()> {
    if value > previous {
        return Err(Error::NumericalFailure(format!("accepted step raised the objective {previous:e} -> {value:e}")));
    }
    InvariantMeasurement::from_vectors(structure, &state.all_vectors(), tol)?.check(rho_ref, tol)
}

/// Recovers block unitaries `V_b^† G_b` and re-orthonormalizes them to
/// remove rounding drift from the accumulated rotations.
fn polish<T: Real>(
    structure: &BlockStructure<T>,
    vectors: &[Vec<C<T>>],
    tol: &Tolerances,
) -> Result<InvariantMeasurement<T>> {
    let mut m = InvariantMeasurement::from_vectors(structure, vectors, tol)?;
    for u in &mut m.block_unitaries {
        *u = qr(u).0;
    }
    Ok(m)
}

/// Runs the search and packages `1 - min objective` with restart
/// diagnostics.
pub fn maximize<T: Real>(
    objective: &SandwichObjective<T>,
    rho_ref: &Matrix<T>,
    gap_tolerance: f64,
    config: &OptimizerConfig,
    tol: &Tolerances,
) -> Result<MeasureResult<T>> {
    let structure = invariant_blocks_of(rho_ref, gap_tolerance, tol)?;
    let outcome = search(objective, &structure, rho_ref, config, tol)?;
    let mut diagnostics = restart_diagnostics(&outcome);
    diagnostics.insert("block_count".into(), structure.blocks.len() as f64);
    diagnostics.insert("largest_block".into(), structure.sizes().into_iter().max().unwrap_or(0) as f64);
    let value = T::one() - outcome.best.objective;
    Ok(finalize(value, Method::Optimizer, Some(outcome.best.measurement), None, diagnostics, tol))
}

fn restart_diagnostics<T: Real>(outcome: &SearchOutcome<T>) -> BTreeMap<String, f64> {
    let mut values: Vec<f64> = outcome.restart_objectives.iter().map(|&o| (T::one() - o).as_f64()).collect();
    values.sort_by(|a, b| b.partial_cmp(a).expect("finite objective"));
    let best = values[0];
    let worst = values[values.len() - 1];
    let median = if values.len() % 2 == 1 {
        values[values.len() / 2]
    } else {
        (values[values.len() / 2 - 1] + values[values.len() / 2]) / 2.0
    };
    let within = values.iter().filter(|&&v| best - v <= 1e-4).count() as f64 / values.len() as f64;
    let mut d = BTreeMap::new();
    d.insert("restarts".into(), values.len() as f64);
    d.insert("restart_best".into(), best);
    d.insert("restart_median".into(), median);
    d.insert("restart_worst".into(), worst);
    d.insert("restart_fraction_within_1e-4".into(), within);
    d.insert("best_restart".into(), outcome.best.restart as f64);
    d.insert("best_sweeps".into(), outcome.best.sweeps as f64);
    d.insert("max_sweeps".into(), outcome.restart_sweeps.iter().copied().max().unwrap_or(0) as f64);
    d
}

/// MINBS over `ρ_BC`-invariant measurements.
pub fn maximize_minbs<T: Real>(input: &BilocalInput<T>, config: &OptimizerConfig) -> Result<MeasureResult<T>> {
    let tol = T::tolerances();
    maximize_minbs_with(input, config, tol.degeneracy_gap, &tol)
}

pub fn maximize_minbs_with<T: Real>(
    input: &BilocalInput<T>,
    config: &OptimizerConfig,
    gap_tolerance: f64,
    tol: &Tolerances,
) -> Result<MeasureResult<T>> {
    let objective = SandwichObjective::bilocal(input, tol)?;
    let rho_bc = input.marginal_bc()?;
    maximize(&objective, rho_bc.matrix(), gap_tolerance, config, tol)
}

/// Skew-information MIN over `ρ_A`-invariant measurements.
pub fn maximize_min_s<T: Real>(rho: &DensityMatrix<T>, config: &OptimizerConfig) -> Result<MeasureResult<T>> {
    let tol = T::tolerances();
    maximize_min_s_with(rho, config, tol.degeneracy_gap, &tol)
}

pub fn maximize_min_s_with<T: Real>(
    rho: &DensityMatrix<T>,
    config: &OptimizerConfig,
    gap_tolerance: f64,
    tol: &Tolerances,
) -> Result<MeasureResult<T>> {
    let objective = SandwichObjective::local(rho, tol)?;
    let rho_a = rho.marginal(&[0])?;
    maximize(&objective, rho_a.matrix(), gap_tolerance, config, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trig_fit_is_exact() {
        let f = |t: f64| {
            0.3 + 0.1 * (2.0 * t).cos() - 0.2 * (2.0 * t).sin() + 0.05 * (4.0 * t).cos() + 0.07 * (4.0 * t).sin()
        };
        let samples: Vec<f64> = (0..8).map(|k| f(std::f64::consts::PI * k as f64 / 8.0)).collect();
        let fit = TrigQuartic::fit(&samples);
        for t in [-1.3, -0.2, 0.0, 0.4, 1.5] {
            assert!((fit.eval(t) - f(t)).abs() < 1e-14);
        }
    }

    #[test]
    fn scan_finds_interior_minimum() {
        let t = scan_minimum(|t: f64| (t - 0.123).powi(2), 64, 1e-10);
        assert!((t - 0.123).abs() < 1e-8);
    }

    #[test]
    fn pair_objective_is_trig_quartic() {
        // The exact-interpolation shortcut relies on this.
        use crate::states::random_density;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rho = random_density::<f64, _>(16, 16, &mut rng).unwrap();
        let s = crate::qmatrix::psd_sqrt(rho.matrix()).unwrap();
        let obj = SandwichObjective::new(&s, 2, 4, 2).unwrap();
        let u = haar_unitary::<f64, _>(4, &mut rng);
        let (gp, gq) = (u.column_vec(0), u.column_vec(2));
        let phase = C::new(0.6, 0.8);
        let f = |t: f64| {
            let (a, b) = rotate_pair(&gp, &gq, t, phase);
            obj.term(&a) + obj.term(&b)
        };
        let samples: Vec<f64> = (0..8).map(|k| f(std::f64::consts::PI * k as f64 / 8.0)).collect();
        let fit = TrigQuartic::fit(&samples);
        for t in [-1.1, -0.37, 0.05, 0.9, 1.4] {
            assert!((fit.eval(t) - f(t)).abs() < 1e-13);
        }
    }
}
