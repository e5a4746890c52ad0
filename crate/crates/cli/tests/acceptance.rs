//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so every line is printed; exits non-zero if any criterion fails.

use std::process::Command;
use std::time::{Duration, Instant};

use minbs_core::audit::{run_check, Check, Ensemble};
use minbs_core::measures::{bell_diagonal_minbs, minbs, minbs_pure, skew_sum, MeasureOptions, Method};
use minbs_core::optimizer::{
    haar_unitary, invariant_blocks, lifted_trace_sum, maximize_minbs, objective, InvariantMeasurement, OptimizerConfig,
};
use minbs_core::qmatrix::{psd_sqrt, Matrix};
use minbs_core::states::{
    bell, bell_diagonal, classical_separable, pure_from_schmidt, random_density, BellKind, BilocalInput, DensityMatrix,
};
use minbs_core::{Real, C};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EXACT: f64 = 1e-15;
const OPTIMIZER_TOL: f64 = 1e-6;
const EXAMPLE1_LIMIT: Duration = Duration::from_secs(10);
const GRID_LIMIT: Duration = Duration::from_secs(600);
const THM4_DIRECT_TOL: f64 = 1e-9;
const BOUND_SLACK: f64 = 1e-8;
const QUBIT_TOL: f64 = 1e-7;
const REDUCTION_TOL: f64 = 1e-10;
const AUDIT_SAMPLES: usize = 100;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn opts() -> MeasureOptions {
    MeasureOptions::default()
}

fn config() -> OptimizerConfig {
    OptimizerConfig::default()
}

fn random_source(rng: &mut ChaCha8Rng, da: usize, db: usize) -> DensityMatrix<f64> {
    random_density::<f64, _>(da * db, da * db, rng).unwrap().reshape(vec![da, db]).unwrap()
}

fn criterion_1() -> Outcome {
    let phi = bell::<f64>(BellKind::PhiPlus);
    let input = BilocalInput::new(phi.clone(), phi).unwrap();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let pure = minbs_pure(&[h, h], &[h, h]).unwrap();
    let dispatched = minbs(&input, &opts()).unwrap();
    let started = Instant::now();
    let searched = maximize_minbs(&input, &config()).unwrap();
    let elapsed = started.elapsed();
    let pass = (pure - 0.75).abs() <= EXACT
        && dispatched.method == Method::PureClosedForm
        && (dispatched.value - 0.75).abs() <= EXACT
        && (searched.value - 0.75).abs() <= OPTIMIZER_TOL
        && elapsed < EXAMPLE1_LIMIT;
    outcome(
        pass,
        format!(
            "closed form {pure:.17} ({}), optimizer {:.12} in {elapsed:.2?} at {} restarts",
            dispatched.method,
            searched.value,
            config().restarts
        ),
    )
}

fn criterion_2() -> Outcome {
    let cs = classical_separable::<f64>();
    let input = BilocalInput::new(cs.clone(), cs).unwrap();
    let r = minbs(&input, &opts()).unwrap();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let plus = [C::new(h, 0.0), C::new(h, 0.0)];
    let minus = [C::new(h, 0.0), C::new(-h, 0.0)];
    let mut vectors = Vec::new();
    for x in [&plus, &minus] {
        for y in [&plus, &minus] {
            vectors.push(minbs_core::qmatrix::kron_vec(x, y));
        }
    }
    let structure = invariant_blocks(&input.marginal_bc().unwrap(), 1e-8).unwrap();
    let m = InvariantMeasurement::from_vectors(&structure, &vectors, &f64::tolerances()).unwrap();
    let hadamard = objective(&input.full_state(), &m).unwrap();
    let pass = r.method == Method::Optimizer
        && structure.blocks.len() == 1
        && (r.value - 0.75).abs() <= OPTIMIZER_TOL
        && (hadamard - 0.25).abs() <= EXACT;
    outcome(pass, format!("optimizer {:.12} ({}), Hadamard-product objective {hadamard:.17}", r.value, r.method))
}

/// 5 x 5 x 5 stick-breaking grid of the weight simplex.
fn simplex_grid() -> Vec<[f64; 4]> {
    let s = [0.0f64, 0.25, 0.5, 0.75, 1.0];
    let mut out = Vec::new();
    for &a in &s {
        for &b in &s {
            for &c in &s {
                let l0 = a;
                let l1 = (1.0 - a) * b;
                let l2 = (1.0 - a) * (1.0 - b) * c;
                let l3 = (1.0 - l0 - l1 - l2).max(0.0);
                out.push([l0, l1, l2, l3]);
            }
        }
    }
    out
}

fn criterion_3() -> Outcome {
    let started = Instant::now();
    let mut mismatches = Vec::new();
    let mut worst = 0.0f64;
    let grid = simplex_grid();
    for w in &grid {
        let rho = bell_diagonal(*w).unwrap();
        let searched = maximize_minbs(&BilocalInput::swapped_copy(&rho).unwrap(), &config()).unwrap().value;
        let closed = bell_diagonal_minbs(*w).unwrap();
        let diff = (searched - closed).abs();
        worst = worst.max(diff);
        if diff > OPTIMIZER_TOL {
            mismatches.push((*w, searched, closed));
        }
    }
    let elapsed = started.elapsed();
    let corner = bell_diagonal_minbs::<f64>([1.0, 0.0, 0.0, 0.0]).unwrap();
    let centre = bell_diagonal_minbs::<f64>([0.25; 4]).unwrap();
    let boundary = (corner - 0.75).abs() <= EXACT && centre.abs() <= EXACT;
    let mut detail = format!(
        "{}/{} grid points within {OPTIMIZER_TOL:e}, worst |optimizer - closed form| {worst:.3e}, {elapsed:.1?}; \
         boundary (1,0,0,0) -> {corner}, uniform -> {centre}",
        grid.len() - mismatches.len(),
        grid.len()
    );
    for (w, s, c) in mismatches.iter().take(3) {
        detail.push_str(&format!("\n      e.g. weights {w:?}: optimizer {s:.10}, closed form {c:.10}"));
    }
    outcome(mismatches.is_empty() && boundary && elapsed < GRID_LIMIT, detail)
}

fn random_schmidt(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| (x / total).sqrt()).collect()
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for i in 0..20 {
        let (ka, kb) = (2 + i % 2, 2 + (i / 2) % 2);
        let (lambda, mu) = (random_schmidt(&mut rng, ka), random_schmidt(&mut rng, kb));
        let closed = minbs_pure(&lambda, &mu).unwrap();
        let input = BilocalInput::new(pure_from_schmidt(&lambda).unwrap(), pure_from_schmidt(&mu).unwrap()).unwrap();
        let searched = maximize_minbs(&input, &config()).unwrap().value;
        worst = worst.max((closed - searched).abs());
    }
    outcome(worst <= OPTIMIZER_TOL, format!("20 Schmidt pairs (dims 2 and 3), worst deviation {worst:.3e}"))
}

fn audit(check: Check, seed: u64) -> minbs_core::audit::CheckSummary {
    run_check::<f64>(check, &Ensemble::qubits(AUDIT_SAMPLES, seed), &opts()).unwrap()
}

fn criterion_5() -> Outcome {
    // The check's slack is min(1e-9 - |closed - direct|, t2 + 1e-8 - closed).
    let s = audit(Check::Thm4Consistency, 5000);
    outcome(
        s.ok() && s.samples == AUDIT_SAMPLES,
        format!(
            "{}/{} pairs agree within {THM4_DIRECT_TOL:e} and respect the bound + {BOUND_SLACK:e}, worst slack {:.3e}",
            s.passed, s.samples, s.worst_slack
        ),
    )
}

/// Random `ρ_AB` and a `ρ_CD` with `ρ_C = I/2`.
fn qubit_c_input(rng: &mut ChaCha8Rng) -> BilocalInput<f64> {
    let ab = random_source(rng, 2, 2);
    let raw: [f64; 4] = std::array::from_fn(|_| rng.random_range(0.05..1.0));
    let total: f64 = raw.iter().sum();
    let us = [haar_unitary(2, rng), haar_unitary(2, rng)];
    let entangled = bell_diagonal(raw.map(|x| x / total)).unwrap().conjugate_local(&us).unwrap();
    let tau = random_density::<f64, _>(2, 2, rng).unwrap();
    let noise = DensityMatrix::new(Matrix::identity(2).scale(0.5), vec![2]).unwrap().tensor(&tau);
    let p: f64 = rng.random_range(0.3..1.0);
    let mixed = &entangled.matrix().scale(p) + &noise.matrix().scale(1.0 - p);
    BilocalInput::new(ab, DensityMatrix::new(mixed, vec![2, 2]).unwrap()).unwrap()
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    let mut wrong_method = 0;
    for _ in 0..50 {
        let input = qubit_c_input(&mut rng);
        let r = minbs(&input, &opts()).unwrap();
        if r.method != Method::QubitCClosedForm {
            wrong_method += 1;
        }
        let searched = maximize_minbs(&input, &config()).unwrap().value;
        worst = worst.max((r.value - searched).abs());
    }
    outcome(
        worst <= QUBIT_TOL && wrong_method == 0,
        format!("50 inputs with nondegenerate ρ_B and qubit C, worst deviation {worst:.3e}, {wrong_method} not routed to the qubit form"),
    )
}

fn criterion_7() -> Outcome {
    let checks = [Check::PropertyI, Check::PropertyIi, Check::PropertyIv, Check::PropertyVi];
    let summaries: Vec<_> = checks.iter().enumerate().map(|(i, &c)| audit(c, 7000 + 1000 * i as u64)).collect();
    let detail = summaries
        .iter()
        .map(|s| format!("{} {}/{} (worst slack {:.2e})", s.check, s.passed, s.samples, s.worst_slack))
        .collect::<Vec<_>>()
        .join(", ");
    outcome(summaries.iter().all(|s| s.ok() && s.samples == AUDIT_SAMPLES), detail)
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for i in 0..100 {
        let (m, v) = (2 + i % 2, 2 + (i / 2) % 2);
        let input = BilocalInput::new(random_source(&mut rng, m, 2), random_source(&mut rng, 2, v)).unwrap();
        let u = haar_unitary::<f64, _>(4, &mut rng);
        let projectors: Vec<Matrix<f64>> = (0..4).map(|k| Matrix::projector(&u.column_vec(k))).collect();
        let skew = skew_sum(&input, &projectors).unwrap();
        let s = psd_sqrt(input.full_state().matrix()).unwrap();
        let traced = 1.0 - lifted_trace_sum(&s, m, v, &projectors);
        worst = worst.max((skew - traced).abs());
    }
    outcome(worst <= REDUCTION_TOL, format!("100 random (state, measurement) pairs, worst deviation {worst:.3e}"))
}

fn run_cli(args: &[&str]) -> (Option<i32>, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_minbs")).args(args).output().expect("run minbs");
    (out.status.code(), out.stdout)
}

fn without_timing(bytes: &[u8]) -> Vec<u8> {
    let mut v: serde_json::Value = serde_json::from_slice(bytes).expect("JSON report");
    v.as_object_mut().expect("object").remove("timing");
    serde_json::to_vec(&v).unwrap()
}

fn criterion_9() -> Outcome {
    let commands: [&[&str]; 3] = [
        &["audit", "--count", "8", "--seed", "3", "--json"],
        &[
            "compute",
            "--measure",
            "minbs",
            "--a",
            "family=bell_diagonal,l0=0.4,l1=0.3,l2=0.2",
            "--b",
            "family=werner,v=0.6",
            "--seed",
            "9",
            "--json",
        ],
        &["compute", "--measure", "min_s", "--a", "family=random,dims=2x2,rank=2", "--seed", "2", "--csv"],
    ];
    let mut failures = Vec::new();
    for args in commands {
        let (code_a, a) = run_cli(args);
        let (code_b, b) = run_cli(args);
        let same = if args.contains(&"--json") { without_timing(&a) == without_timing(&b) } else { a == b };
        let mut omitted = args.to_vec();
        omitted.push("--omit-timing");
        let (_, c) = run_cli(&omitted);
        let (_, d) = run_cli(&omitted);
        if code_a != Some(0) || code_b != Some(0) || !same || c != d {
            failures.push(args.join(" "));
        }
    }
    outcome(failures.is_empty(), format!("{} commands run twice, differing: {failures:?}", commands.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("Bell pair: closed form and optimizer give 3/4", criterion_1),
        ("classical separable pair: optimizer gives 3/4, Hadamard product objective 1/4", criterion_2),
        ("Bell-diagonal grid: optimizer matches the closed form", criterion_3),
        ("pure sources: Schmidt closed form matches optimizer", criterion_4),
        ("nondegenerate marginals: closed form matches direct evaluation, below the bound", criterion_5),
        ("qubit closed form matches optimizer", criterion_6),
        ("property audits i, ii, iv, vi", criterion_7),
        ("skew-sum / trace-sum reduction", criterion_8),
        ("CLI determinism", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!(
            "[{}] criterion {}: {name} ({:.1?})\n      {}",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            started.elapsed(),
            o.detail
        );
    }
    println!("acceptance: {}/{} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
