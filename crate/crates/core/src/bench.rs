//! Evaluation: pairwise precision/recall, optimality gap against the exact
//! oracle, and the Monte-Carlo harnesses for the gap table and the
//! incremental-modality ablation.

use std::fmt::Write as _;
use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::{solve_exact, OracleConfig};
use crate::problem::{check_cycle_consistency, ClusterLabeling, Instance, PairwiseTable, INCONCLUSIVE};
use crate::solver::{solve, SolverConfig};
use crate::synth::{derive_seed, generate, GroundTruth, MultimodalCase, SynthConfig, MAX_REDRAWS};

/// Guards the relative gap against a zero optimum.
pub const GAP_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
}

impl MetricsReport {
    fn from_counts(tp: usize, fp: usize, fneg: usize) -> Self {
        // Nothing predicted means nothing wrongly predicted; nothing to find
        // means nothing missed.
        let precision = if tp + fp == 0 { 1.0 } else { tp as f64 / (tp + fp) as f64 };
        let recall = if tp + fneg == 0 { 1.0 } else { tp as f64 / (tp + fneg) as f64 };
        let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
        Self { precision, recall, f1, true_positives: tp, false_positives: fp, false_negatives: fneg }
    }
}

/// Precision and recall of a set of predicted matches over unordered pairs.
pub fn pair_metrics(predicted: &[(usize, usize)], truth: &GroundTruth) -> Result<MetricsReport> {
    let m = truth.labels.len();
    let mut pairs: Vec<(usize, usize)> = predicted.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
    pairs.sort_unstable();
    pairs.dedup();
    if let Some(&(a, b)) = pairs.iter().find(|&&(a, b)| b >= m || a == b) {
        return Err(Error::DimensionMismatch { expected: format!("pairs of distinct elements < {m}"), got: format!("({a}, {b})") });
    }
    let tp = pairs.iter().filter(|&&(a, b)| truth.labels[a] == truth.labels[b]).count();
    let fp = pairs.len() - tp;
    let true_pairs = truth.clusters().matched_pairs().len();
    Ok(MetricsReport::from_counts(tp, fp, true_pairs - tp))
}

pub fn precision_recall(predicted: &ClusterLabeling, truth: &GroundTruth) -> Result<MetricsReport> {
    if predicted.labels.len() != truth.labels.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} labels", truth.labels.len()),
            got: format!("{} labels", predicted.labels.len()),
        });
    }
    pair_metrics(&predicted.matched_pairs(), truth)
}

/// Percent excess of the solver objective over the exact optimum.
pub fn optimality_gap(f_solver: f64, f_oracle: f64) -> Result<f64> {
    if f_solver < f_oracle - GAP_EPS * f_oracle.abs().max(1.0) {
        return Err(Error::Internal(format!("solver value {f_solver} below global optimum {f_oracle}")));
    }
    if f_solver <= f_oracle {
        return Ok(0.0);
    }
    Ok(100.0 * (f_solver - f_oracle) / f_oracle.max(GAP_EPS))
}

/// Percent change of a metric relative to the oracle's; absolute
/// percentage points when the oracle metric is zero.
pub fn relative_change(solver: f64, oracle: f64) -> f64 {
    if oracle > 0.0 {
        100.0 * (solver - oracle) / oracle
    } else {
        100.0 * (solver - oracle)
    }
}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Clone, Debug, PartialEq)]
pub struct GapBenchConfig {
    /// Template for each trial; `outliers` and `rng_seed` are overwritten.
    pub synth: SynthConfig,
    pub outlier_counts: Vec<usize>,
    pub trials: usize,
    pub solver: SolverConfig,
    pub oracle: OracleConfig,
    pub seed: u64,
}

/// One solver-vs-oracle comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub outliers: usize,
    pub trial: usize,
    pub instance_seed: u64,
    pub num_elements: usize,
    pub solver_value: f64,
    pub oracle_value: f64,
    pub gap: f64,
    pub solver_metrics: MetricsReport,
    pub oracle_metrics: MetricsReport,
    pub converged: bool,
    pub solver_ms: f64,
    pub oracle_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub outliers: usize,
    pub gap_mean: f64,
    pub gap_std: f64,
    pub dp_mean: f64,
    pub dp_std: f64,
    pub dr_mean: f64,
    pub dr_std: f64,
    pub runtime_ms: f64,
    pub oracle_runtime_ms: f64,
}

impl TrialRow {
    fn aggregate(outliers: usize, records: &[TrialRecord]) -> Self {
        let col = |f: &dyn Fn(&TrialRecord) -> f64| records.iter().map(f).collect::<Vec<_>>();
        let (gap_mean, gap_std) = mean_std(&col(&|r| r.gap));
        let (dp_mean, dp_std) =
            mean_std(&col(&|r| relative_change(r.solver_metrics.precision, r.oracle_metrics.precision)));
        let (dr_mean, dr_std) = mean_std(&col(&|r| relative_change(r.solver_metrics.recall, r.oracle_metrics.recall)));
        Self {
            outliers,
            gap_mean,
            gap_std,
            dp_mean,
            dp_std,
            dr_mean,
            dr_std,
            runtime_ms: mean_std(&col(&|r| r.solver_ms)).0,
            oracle_runtime_ms: mean_std(&col(&|r| r.oracle_ms)).0,
        }
    }

    /// Same row without wall-clock fields, for reproducibility comparisons.
    pub fn without_timing(&self) -> Self {
        Self { runtime_ms: 0.0, oracle_runtime_ms: 0.0, ..self.clone() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GapStudy {
    pub rows: Vec<TrialRow>,
    pub records: Vec<TrialRecord>,
}

/// Draws a trial instance within the oracle cap, re-drawing with follow-up
/// seeds when the sampled instance is too large.
pub fn draw_trial(template: &SynthConfig, cap: usize, base: u64, stream: u64, trial: usize) -> Result<(Instance, GroundTruth, u64)> {
    for attempt in 0..MAX_REDRAWS as u64 {
        let seed = derive_seed(base, stream, trial as u64 * MAX_REDRAWS as u64 + attempt);
        let (inst, truth) = generate(&SynthConfig { rng_seed: seed, ..template.clone() })?;
        if inst.num_elements() <= cap {
            return Ok((inst, truth, seed));
        }
    }
    Err(Error::InvalidConfig(format!(
        "no instance with at most {cap} elements in {MAX_REDRAWS} draws"
    )))
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleComparison {
    pub solver_value: f64,
    pub oracle_value: f64,
    pub solver_metrics: MetricsReport,
    pub oracle_metrics: MetricsReport,
    pub converged: bool,
    pub solver_ms: f64,
    pub oracle_ms: f64,
}

pub fn compare_with_oracle(
    instance: &Instance,
    truth: &GroundTruth,
    solver: &SolverConfig,
    oracle: &OracleConfig,
) -> Result<OracleComparison> {
    let t0 = Instant::now();
    let sol = solve(instance, solver)?;
    let solver_ms = t0.elapsed().as_secs_f64() * 1e3;
    let t1 = Instant::now();
    let exact = solve_exact(instance, oracle)?;
    let oracle_ms = t1.elapsed().as_secs_f64() * 1e3;
    Ok(OracleComparison {
        solver_value: sol.frobenius_value,
        oracle_value: exact.value,
        solver_metrics: precision_recall(&sol.clusters(), truth)?,
        oracle_metrics: precision_recall(&exact.assignment.clusters(), truth)?,
        converged: sol.converged,
        solver_ms,
        oracle_ms,
    })
}

/// Solver against oracle over seeded trials for each outlier count.
pub fn monte_carlo_gap(config: &GapBenchConfig) -> Result<GapStudy> {
    let mut rows = Vec::new();
    let mut records = Vec::new();
    for &n_o in &config.outlier_counts {
        let template = SynthConfig { outliers: n_o, ..config.synth.clone() };
        let mut row_records = Vec::with_capacity(config.trials);
        for trial in 0..config.trials {
            let (inst, truth, seed) = draw_trial(&template, config.oracle.max_elements, config.seed, n_o as u64, trial)?;
            let c = compare_with_oracle(&inst, &truth, &config.solver, &config.oracle)?;
            row_records.push(TrialRecord {
                outliers: n_o,
                trial,
                instance_seed: seed,
                num_elements: inst.num_elements(),
                solver_value: c.solver_value,
                oracle_value: c.oracle_value,
                gap: optimality_gap(c.solver_value, c.oracle_value)?,
                solver_metrics: c.solver_metrics,
                oracle_metrics: c.oracle_metrics,
                converged: c.converged,
                solver_ms: c.solver_ms,
                oracle_ms: c.oracle_ms,
            });
        }
        rows.push(TrialRow::aggregate(n_o, &row_records));
        records.extend(row_records);
    }
    Ok(GapStudy { rows, records })
}

pub const GAP_CSV_HEADER: &str = "n_o,gap_mean,gap_std,dp_mean,dp_std,dr_mean,dr_std,runtime_ms";

pub fn write_gap_csv<W: Write>(rows: &[TrialRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{GAP_CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.outliers, r.gap_mean, r.gap_std, r.dp_mean, r.dp_std, r.dr_mean, r.dr_std, r.runtime_ms
        )?;
    }
    Ok(())
}

/// Human-readable table; the speedup column is wall-clock information only.
pub fn format_gap_table(rows: &[TrialRow]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:>4}  {:>13}  {:>13}  {:>13}  {:>10}  {:>8}", "n_o", "gap (%)", "p (%)", "r (%)", "runtime ms", "speedup");
    for r in rows {
        let speedup = if r.runtime_ms > 0.0 { r.oracle_runtime_ms / r.runtime_ms } else { f64::NAN };
        let _ = writeln!(
            s,
            "{:>4}  {:>6.2}±{:<6.2}  {:>6.1}±{:<6.1}  {:>6.1}±{:<6.1}  {:>10.2}  {:>7.2}x",
            r.outliers, r.gap_mean, r.gap_std, r.dp_mean, r.dp_std, r.dr_mean, r.dr_std, r.runtime_ms, speedup
        );
    }
    s
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Solver,
    /// Any cross-set pair with mean score above 0.5.
    AllPairs,
    /// As `AllPairs`, restricted to consecutive sets.
    Consecutive,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Solver, Method::AllPairs, Method::Consecutive];

    pub fn name(self) -> &'static str {
        match self {
            Method::Solver => "solver",
            Method::AllPairs => "all_pairs",
            Method::Consecutive => "consecutive",
        }
    }
}

/// Thresholding baselines: match every admissible cross-set pair whose mean
/// score over the modalities exceeds 0.5.
pub fn threshold_matches(instance: &Instance, consecutive_only: bool) -> Vec<(usize, usize)> {
    let m = instance.num_elements();
    let mut pairs = Vec::new();
    for a in 0..m {
        for b in a + 1..m {
            let (i, j) = (instance.set_of(a), instance.set_of(b));
            if i == j || (consecutive_only && j != i + 1) {
                continue;
            }
            let s = instance.score(a, b);
            let mean = s.iter().sum::<f64>() / s.len() as f64;
            if mean > INCONCLUSIVE {
                pairs.push((a, b));
            }
        }
    }
    pairs
}

/// Cycle consistency of a raw match list; tables violating the one-match
/// per row/column precondition count as inconsistent.
pub fn matches_consistent(instance: &Instance, pairs: &[(usize, usize)]) -> Result<bool> {
    let table = PairwiseTable::from_pairs(instance.set_sizes().to_vec(), pairs)?;
    Ok(check_cycle_consistency(&table).unwrap_or(false))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub method: Method,
    pub modalities: Vec<usize>,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub f1_std: f64,
    /// Fraction of outputs that are cycle consistent.
    pub consistent_fraction: f64,
}

/// Modality subsets of the ablation: each single modality, then the growing
/// prefixes `{0, 1}`, `{0, 1, 2}`, ...
pub fn ablation_subsets(modality_count: usize) -> Vec<Vec<usize>> {
    let mut subsets: Vec<Vec<usize>> = (0..modality_count).map(|k| vec![k]).collect();
    subsets.extend((2..=modality_count).map(|j| (0..j).collect()));
    subsets
}

/// Mean metrics of each method on each modality subset.
pub fn ablation(cases: &[MultimodalCase], solver: &SolverConfig) -> Result<Vec<AblationRow>> {
    let l = cases.first().map_or(0, |c| c.fused.modality_count());
    let mut rows = Vec::new();
    for subset in ablation_subsets(l) {
        for method in Method::ALL {
            let mut p = Vec::new();
            let mut r = Vec::new();
            let mut f = Vec::new();
            let mut consistent = 0usize;
            for case in cases {
                let inst = case.fused.select_modalities(&subset)?;
                let (metrics, ok) = match method {
                    Method::Solver => (precision_recall(&solve(&inst, solver)?.clusters(), &case.truth)?, true),
                    Method::AllPairs | Method::Consecutive => {
                        let pairs = threshold_matches(&inst, method == Method::Consecutive);
                        (pair_metrics(&pairs, &case.truth)?, matches_consistent(&inst, &pairs)?)
                    }
                };
                p.push(metrics.precision);
                r.push(metrics.recall);
                f.push(metrics.f1);
                consistent += usize::from(ok);
            }
            let (f1, f1_std) = mean_std(&f);
            rows.push(AblationRow {
                method,
                modalities: subset.clone(),
                precision: mean_std(&p).0,
                recall: mean_std(&r).0,
                f1,
                f1_std,
                consistent_fraction: consistent as f64 / cases.len().max(1) as f64,
            });
        }
    }
    Ok(rows)
}

pub const ABLATION_CSV_HEADER: &str = "method,modalities,precision,recall,f1,f1_std,consistent_fraction";

pub fn write_ablation_csv<W: Write>(rows: &[AblationRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{ABLATION_CSV_HEADER}")?;
    for r in rows {
        let mods: Vec<String> = r.modalities.iter().map(ToString::to_string).collect();
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.method.name(),
            mods.join("+"),
            r.precision,
            r.recall,
            r.f1,
            r.f1_std,
            r.consistent_fraction
        )?;
    }
    Ok(())
}
