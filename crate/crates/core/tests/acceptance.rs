//! Acceptance suite. Prints one line per criterion and exits nonzero when any
//! of them fails.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use mixer::bench::{ablation, monte_carlo_gap, precision_recall, GapBenchConfig, Method};
use mixer::oracle::{enumerate_feasible, OracleConfig};
use mixer::problem::{check_cycle_consistency, check_feasible, INCONCLUSIVE};
use mixer::relax::{build_relaxation, frobenius_objective, relaxed_gradient, relaxed_objective};
use mixer::solver::project_row;
use mixer::synth::{derive_seed, generate, multimodal_suite, SynthConfig};
use mixer::{solve, Instance, PenaltyWeight, SolverConfig};
use nalgebra::DMatrix;
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
    /// Every numeric output of the run except wall-clock time.
    values: Vec<f64>,
}

fn solver_config() -> SolverConfig {
    SolverConfig::default()
}

fn noiseless_exactness() -> Outcome {
    let mut rng = common::rng(101);
    let mut values = Vec::new();
    let (mut exact, mut slowest) = (0, 0.0f64);
    for t in 0..50 {
        let config = SynthConfig {
            universe_size: rng.random_range(4..=10),
            num_sets: rng.random_range(3..=6),
            outliers: rng.random_range(0..=4),
            rng_seed: derive_seed(101, 1, t),
            ..SynthConfig::default()
        }
        .noiseless();
        let (inst, truth) = generate(&config).unwrap();
        let t0 = Instant::now();
        let result = solve(&inst, &solver_config()).unwrap();
        slowest = slowest.max(t0.elapsed().as_secs_f64());
        let metrics = precision_recall(&result.clusters(), &truth).unwrap();
        if metrics.precision == 1.0 && metrics.recall == 1.0 && result.frobenius_value == 0.0 {
            exact += 1;
        }
        values.extend([metrics.precision, metrics.recall, result.frobenius_value, inst.num_elements() as f64]);
    }
    Outcome {
        pass: exact == 50 && slowest <= 1.0,
        detail: format!("{exact}/50 exact, slowest solve {:.3} s (limit 1 s)", slowest),
        values,
    }
}

fn optimality_gap() -> Outcome {
    let config = GapBenchConfig {
        synth: SynthConfig { universe_size: 4, num_sets: 3, observe_prob: 0.75, ..SynthConfig::default() },
        outlier_counts: vec![0, 1, 2, 3],
        trials: 50,
        solver: solver_config(),
        oracle: OracleConfig::default(),
        seed: 202,
    };
    let t0 = Instant::now();
    let study = monte_carlo_gap(&config).unwrap();
    let elapsed = t0.elapsed().as_secs_f64();
    let largest_m = study.records.iter().map(|r| r.num_elements).max().unwrap();
    let below = study
        .records
        .iter()
        .filter(|r| r.gap < 0.0 || r.solver_value < r.oracle_value - 1e-9 * r.oracle_value.abs().max(1.0))
        .count();
    let worst_mean = study.rows.iter().map(|r| r.gap_mean).fold(0.0, f64::max);
    let means: Vec<String> = study.rows.iter().map(|r| format!("n_o={} {:.3}%", r.outliers, r.gap_mean)).collect();
    let mut values: Vec<f64> = study.records.iter().flat_map(|r| [r.solver_value, r.oracle_value, r.gap]).collect();
    values.extend(study.rows.iter().map(|r| r.gap_mean));
    Outcome {
        pass: worst_mean <= 5.0 && below == 0 && largest_m <= 12 && elapsed <= 60.0,
        detail: format!(
            "mean gap {} (limit 5%), {below} negative gaps, max m {largest_m}, sweep {elapsed:.1} s (limit 60 s)",
            means.join(", ")
        ),
        values,
    }
}

/// Corpus for the feasibility criterion: synthetic instances across noise
/// levels, uniformly random scores, all-inconclusive and all-flipped cases.
fn feasibility_corpus() -> Vec<Instance> {
    let mut rng = common::rng(303);
    let mut corpus = Vec::new();
    for t in 0..200 {
        let config = SynthConfig {
            universe_size: rng.random_range(3..=10),
            num_sets: rng.random_range(2..=6),
            modality_count: rng.random_range(1..=4),
            observe_prob: rng.random_range(0.4..=1.0),
            outliers: rng.random_range(0..=4),
            noise_sigma: rng.random_range(0.0..0.4),
            inconclusive_rate: rng.random_range(0.0..0.6),
            flip_rate: rng.random_range(0.0..0.3),
            rng_seed: derive_seed(303, 0, t),
            ..SynthConfig::default()
        };
        corpus.push(generate(&config).unwrap().0);
    }
    for _ in 0..150 {
        let sizes = common::random_sizes(&mut rng, 6, 6, 30);
        let l = rng.random_range(1..=4);
        corpus.push(common::random_instance(&mut rng, &sizes, l));
    }
    for _ in 0..75 {
        let sizes = common::random_sizes(&mut rng, 6, 6, 30);
        let l = rng.random_range(1..=4);
        let mut inst = Instance::new(sizes, l).unwrap();
        let m = inst.num_elements();
        for a in 0..m {
            for b in a + 1..m {
                if inst.set_of(a) != inst.set_of(b) {
                    inst.set_score(a, b, vec![INCONCLUSIVE; l]).unwrap();
                }
            }
        }
        corpus.push(inst);
    }
    for t in 0..75 {
        let config = SynthConfig {
            universe_size: rng.random_range(3..=10),
            num_sets: rng.random_range(2..=6),
            modality_count: rng.random_range(1..=4),
            outliers: rng.random_range(0..=3),
            noise_sigma: 0.0,
            inconclusive_rate: 0.0,
            flip_rate: 1.0,
            rng_seed: derive_seed(303, 1, t),
            ..SynthConfig::default()
        };
        corpus.push(generate(&config).unwrap().0);
    }
    corpus
}

fn feasibility_guarantee() -> Outcome {
    let corpus = feasibility_corpus();
    let mut values = Vec::new();
    let (mut bad, mut repaired) = (0usize, 0usize);
    for inst in &corpus {
        let result = solve(inst, &solver_config()).unwrap();
        let u = result.assignment.to_matrix();
        let feasible = check_feasible(&u, inst).unwrap().is_feasible();
        let consistent = check_cycle_consistency(&result.assignment.pairwise()).unwrap();
        if !(feasible && consistent) {
            bad += 1;
        }
        repaired += usize::from(!result.converged);
        values.push(result.frobenius_value);
        values.extend(result.assignment.columns().iter().map(|&c| c as f64));
    }
    let n = corpus.len();
    let rate = 100.0 * repaired as f64 / n as f64;
    Outcome {
        pass: n >= 500 && bad == 0 && rate < 5.0,
        detail: format!("{n} solves, {bad} infeasible or inconsistent, {repaired} repaired ({rate:.1}%, limit 5%)"),
        values,
    }
}

fn expansion_identity() -> Outcome {
    let mut rng = common::rng(404);
    let (mut worst, mut checked) = (0.0f64, 0usize);
    let mut values = Vec::new();
    for _ in 0..20 {
        let sizes = common::random_sizes(&mut rng, 4, 4, 8);
        let l = rng.random_range(1..=4);
        let inst = common::random_instance(&mut rng, &sizes, l);
        let data = build_relaxation(&inst);
        let oracle = OracleConfig { max_elements: 8, ..OracleConfig::default() };
        for assignment in enumerate_feasible(&inst, &oracle).unwrap() {
            let u = assignment.to_matrix();
            let gram = &u * u.transpose();
            let expanded = gram.dot(&data.abar) + data.frob_const;
            let direct = frobenius_objective(&u, &inst).unwrap();
            worst = worst.max((direct - expanded).abs());
            checked += 1;
            values.push(direct);
        }
    }
    Outcome {
        pass: worst <= 1e-10,
        detail: format!("{checked} feasible assignments over 20 instances, max deviation {worst:.2e} (limit 1e-10)"),
        values,
    }
}

fn gradient_check() -> Outcome {
    const H: f64 = 1e-5;
    let mut rng = common::rng(505);
    let (mut worst, mut values) = (0.0f64, Vec::new());
    let triples = 120;
    for t in 0..triples {
        let sizes = common::random_sizes(&mut rng, 5, 5, 15);
        let l = rng.random_range(1..=4);
        let inst = common::random_instance(&mut rng, &sizes, l);
        let data = build_relaxation(&inst);
        let d = PenaltyWeight::new([0.0, 1.0, 10.0][t % 3]).unwrap();
        let m = inst.num_elements();
        let u = DMatrix::from_fn(m, m, |_, _| rng.random_range(1e-3..1.0));
        let grad = relaxed_gradient(&u, &data, d).unwrap();
        let mut numeric = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                let (mut up, mut down) = (u.clone(), u.clone());
                up[(i, j)] += H;
                down[(i, j)] -= H;
                let f = |x: &DMatrix<f64>| relaxed_objective(x, &data, d).unwrap();
                numeric[(i, j)] = (f(&up) - f(&down)) / (2.0 * H);
            }
        }
        let err = (&grad - &numeric).norm() / numeric.norm().max(1e-12);
        worst = worst.max(err);
        values.push(grad.norm());
    }
    Outcome {
        pass: worst <= 1e-6,
        detail: format!("{triples} triples, max relative error {worst:.2e} (limit 1e-6)"),
        values,
    }
}

/// Exact projection onto `{y >= 0, sum(y) <= 1}` by trying every support
/// set with the sum constraint both slack and tight, keeping the nearest
/// feasible candidate.
fn brute_force_projection(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut best = vec![0.0; n];
    let mut best_dist = x.iter().map(|v| v * v).sum::<f64>();
    for mask in 1u32..(1 << n) {
        let support: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
        let tau = (support.iter().map(|&i| x[i]).sum::<f64>() - 1.0) / support.len() as f64;
        for shift in [0.0, tau] {
            let mut y = vec![0.0; n];
            for &i in &support {
                y[i] = x[i] - shift;
            }
            if y.iter().any(|&v| v < 0.0) || y.iter().sum::<f64>() > 1.0 + 1e-12 {
                continue;
            }
            let dist: f64 = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum();
            if dist < best_dist {
                best_dist = dist;
                best = y;
            }
        }
    }
    best
}

fn projection_oracle() -> Outcome {
    let mut rng = common::rng(606);
    let (mut worst, mut values) = (0.0f64, Vec::new());
    for t in 0..1000 {
        let n = rng.random_range(1..=10);
        let x: Vec<f64> = (0..n)
            .map(|_| match t % 5 {
                0 => rng.random_range(-5.0..-1e-3),
                1 => rng.random_range(10.0..1e3),
                2 => rng.random_range(0.0..0.2),
                _ => rng.random_range(-1.0..2.0),
            })
            .collect();
        let got = project_row(&x).unwrap();
        let want = brute_force_projection(&x);
        for (g, w) in got.iter().zip(&want) {
            worst = worst.max((g - w).abs());
        }
        values.extend(got);
    }
    Outcome {
        pass: worst <= 1e-8,
        detail: format!("1000 vectors, max deviation {worst:.2e} (limit 1e-8)"),
        values,
    }
}

fn fusion_improves() -> Outcome {
    let cases = multimodal_suite(707, 30).unwrap();
    let rows = ablation(&cases, &solver_config()).unwrap();
    let fused = rows.iter().find(|r| r.method == Method::Solver && r.modalities == [0, 1, 2, 3]).unwrap();
    let best_single =
        rows.iter().filter(|r| r.modalities.len() == 1).max_by(|a, b| a.f1.total_cmp(&b.f1)).unwrap();
    Outcome {
        pass: fused.f1 > best_single.f1,
        detail: format!(
            "30 seeds, fused F1 {:.4} vs best single {:.4} ({} on modality {})",
            fused.f1,
            best_single.f1,
            best_single.method.name(),
            best_single.modalities[0]
        ),
        values: rows.iter().flat_map(|r| [r.precision, r.recall, r.f1]).collect(),
    }
}

type Criterion = (&'static str, fn() -> Outcome);

const CRITERIA: [Criterion; 7] = [
    ("exactness at zero noise", noiseless_exactness),
    ("optimality gap", optimality_gap),
    ("feasibility guarantee", feasibility_guarantee),
    ("expansion identity", expansion_identity),
    ("gradient check", gradient_check),
    ("projection oracle", projection_oracle),
    ("multimodal fusion", fusion_improves),
];

fn report(index: usize, name: &str, pass: bool, detail: &str) {
    println!("[{}] {index}. {name}: {detail}", if pass { "PASS" } else { "FAIL" });
}

fn main() -> ExitCode {
    let mut all = true;
    let mut first = Vec::new();
    for (i, (name, run)) in CRITERIA.iter().enumerate() {
        let outcome = run();
        report(i + 1, name, outcome.pass, &outcome.detail);
        all &= outcome.pass;
        first.push(outcome.values);
    }
    let mut differing = Vec::new();
    for (i, (name, run)) in CRITERIA.iter().enumerate() {
        let again = run().values;
        let same = again.len() == first[i].len() && again.iter().zip(&first[i]).all(|(a, b)| a.to_bits() == b.to_bits());
        if !same {
            differing.push(*name);
        }
    }
    let count: usize = first.iter().map(Vec::len).sum();
    let detail = if differing.is_empty() {
        format!("second run of 1-7 reproduced all {count} numeric outputs bit for bit")
    } else {
        format!("outputs differ on rerun: {}", differing.join(", "))
    };
    report(8, "determinism", differing.is_empty(), &detail);
    all &= differing.is_empty();
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
