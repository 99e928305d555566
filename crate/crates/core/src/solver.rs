//! Projected gradient descent on the relaxed objective, with Armijo
//! backtracking along the projection arc and a geometric continuation
//! schedule on the penalty weight `d`.
//!
//! Each row of `U` lives in the capped simplex `{x >= 0, sum(x) <= 1}`, so the
//! projection is row separable. Once `d` is large enough the stationary
//! points reached are binary and feasible, and the output is read off by
//! snapping entries that are already within `binary_tol` of `{0, 1}`.

use std::cmp::Ordering;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{build_modality_matrices, check_feasible_sizes, Assignment, ClusterLabeling, Instance, ModalityMatrices};
use crate::relax::{build_relaxation_from, frobenius_objective_with, Evaluation, PenaltyWeight, RelaxationData};

/// Backtracking gives up after this many step reductions.
pub const MAX_BACKTRACKS: usize = 60;

/// Scale of the uniform noise in [`initialize`] and between stages.
const PERTURBATION: f64 = 1e-3;

/// Solver parameters. `None` selects a default that scales with the instance:
/// `d_init = 0.01 l`, `d_max = 1e4 l`, `inner_tol = 1e-6 m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub d_init: Option<f64>,
    pub d_growth: f64,
    pub d_max: Option<f64>,
    pub armijo_sigma: f64,
    pub armijo_beta: f64,
    pub step_init: f64,
    pub inner_tol: Option<f64>,
    pub max_inner_iters: usize,
    pub binary_tol: f64,
    pub rng_seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            d_init: None,
            d_growth: 2.0,
            d_max: None,
            armijo_sigma: 1e-4,
            armijo_beta: 0.5,
            step_init: 1.0,
            inner_tol: None,
            max_inner_iters: 1000,
            binary_tol: 1e-3,
            rng_seed: 0,
        }
    }
}

/// A [`SolverConfig`] with instance-dependent defaults filled in.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResolvedConfig {
    pub d_init: f64,
    pub d_growth: f64,
    pub d_max: f64,
    pub armijo_sigma: f64,
    pub armijo_beta: f64,
    pub step_init: f64,
    pub inner_tol: f64,
    pub max_inner_iters: usize,
    pub binary_tol: f64,
    pub rng_seed: u64,
}

impl SolverConfig {
    pub fn resolve(&self, num_elements: usize, modality_count: usize) -> Result<ResolvedConfig> {
        let l = modality_count as f64;
        let r = ResolvedConfig {
            d_init: self.d_init.unwrap_or(0.01 * l),
            d_growth: self.d_growth,
            d_max: self.d_max.unwrap_or(1e4 * l),
            armijo_sigma: self.armijo_sigma,
            armijo_beta: self.armijo_beta,
            step_init: self.step_init,
            inner_tol: self.inner_tol.unwrap_or(1e-6 * num_elements as f64),
            max_inner_iters: self.max_inner_iters,
            binary_tol: self.binary_tol,
            rng_seed: self.rng_seed,
        };
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if !(r.d_init.is_finite() && r.d_init >= 0.0) {
            return bad("d_init must be finite and >= 0");
        }
        if !(r.d_growth.is_finite() && r.d_growth > 1.0) {
            return bad("d_growth must be > 1");
        }
        if !(r.d_max.is_finite() && r.d_max >= r.d_init) {
            return bad("d_max must be finite and >= d_init");
        }
        if !(r.armijo_sigma > 0.0 && r.armijo_sigma < 1.0) {
            return bad("armijo_sigma must lie in (0, 1)");
        }
        if !(r.armijo_beta > 0.0 && r.armijo_beta < 1.0) {
            return bad("armijo_beta must lie in (0, 1)");
        }
        if !(r.step_init.is_finite() && r.step_init > 0.0) {
            return bad("step_init must be > 0");
        }
        if !(r.inner_tol.is_finite() && r.inner_tol >= 0.0) {
            return bad("inner_tol must be finite and >= 0");
        }
        if r.max_inner_iters == 0 {
            return bad("max_inner_iters must be >= 1");
        }
        if !(r.binary_tol > 0.0 && r.binary_tol < 0.5) {
            return bad("binary_tol must lie in (0, 0.5)");
        }
        Ok(r)
    }
}

/// One continuation stage. `objective` is the value the descent minimizes,
/// see [`descent_relaxation`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageRecord {
    pub d: f64,
    pub inner_iterations: usize,
    pub objective: f64,
    pub stationarity: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverResult {
    pub assignment: Assignment,
    /// Relaxed objective of the binary output at the final penalty weight.
    pub relaxed_value: f64,
    pub frobenius_value: f64,
    pub trace: Vec<StageRecord>,
    /// `false` when the continuation ran out before reaching a binary point
    /// and the output came from the repair fallback.
    pub converged: bool,
}

impl SolverResult {
    pub fn clusters(&self) -> ClusterLabeling {
        self.assignment.clusters()
    }
}

/// Euclidean projection onto `{y >= 0, sum(y) <= 1}`.
pub fn project_row(x: &[f64]) -> Result<Vec<f64>> {
    let mut y = x.to_vec();
    project_in_place(&mut y)?;
    Ok(y)
}

fn project_in_place(x: &mut [f64]) -> Result<()> {
    if let Some(v) = x.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("cannot project entry {v}")));
    }
    // Sums within rounding of 1 count as feasible, and the simplex branch
    // below lands within half of that, so projecting twice changes nothing.
    let slack = x.len() as f64 * f64::EPSILON;
    x.iter_mut().for_each(|v| *v = v.max(0.0));
    if x.iter().sum::<f64>() <= 1.0 + slack {
        return Ok(());
    }
    // Sum constraint active: project onto the unit simplex by thresholding.
    let mut sorted = x.to_vec();
    sorted.sort_unstable_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (k, &v) in sorted.iter().enumerate() {
        cumsum += v;
        let t = (cumsum - 1.0) / (k + 1) as f64;
        if v - t > 0.0 {
            tau = t;
        } else {
            break;
        }
    }
    x.iter_mut().for_each(|v| *v = (*v - tau).max(0.0));
    for _ in 0..4 {
        let total: f64 = x.iter().sum();
        if total <= 1.0 + 0.5 * slack {
            break;
        }
        let support = x.iter().filter(|&&v| v > 0.0).count() as f64;
        let shift = (total - 1.0) / support;
        x.iter_mut().for_each(|v| *v = (*v - shift).max(0.0));
    }
    Ok(())
}

/// Row-wise projection onto the feasible set of the relaxation.
pub fn project(u: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let mut out = u.transpose();
    for mut col in out.column_iter_mut() {
        project_in_place(col.as_mut_slice())?;
    }
    Ok(out.transpose())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ArmijoStep {
    pub alpha: f64,
    pub point: DMatrix<f64>,
    pub value: f64,
    pub backtracks: usize,
}

/// Backtracking along the projection arc `U(a) = P(U + a * direction)`.
///
/// Accepts the first `a = step_init * beta^k` with
/// `f(U(a)) <= f(U) + sigma * <grad, U(a) - U>`. Returns `None` when the arc
/// does not move (a stationary point) or no step passes within
/// [`MAX_BACKTRACKS`] reductions.
pub fn armijo_search<F>(
    u: &DMatrix<f64>,
    value: f64,
    grad: &DMatrix<f64>,
    direction: &DMatrix<f64>,
    mut objective: F,
    config: &ResolvedConfig,
) -> Result<Option<ArmijoStep>>
where
    F: FnMut(&DMatrix<f64>) -> f64,
{
    let mut alpha = config.step_init;
    for k in 0..=MAX_BACKTRACKS {
        let point = project(&(u + direction * alpha))?;
        let step = &point - u;
        if step.iter().all(|&v| v == 0.0) {
            return Ok(None);
        }
        let trial = objective(&point);
        if !trial.is_finite() {
            return Err(Error::NonFinite(format!("objective {trial} at step {alpha}")));
        }
        if trial <= value + config.armijo_sigma * grad.dot(&step) {
            return Ok(Some(ArmijoStep { alpha, point, value: trial, backtracks: k }));
        }
        alpha *= config.armijo_beta;
    }
    Ok(None)
}

#[derive(Clone, Debug, PartialEq)]
pub struct InnerOutcome {
    pub u: DMatrix<f64>,
    pub iterations: usize,
    /// Objective at the start point and after every accepted step.
    pub objectives: Vec<f64>,
    /// `||P(U - grad) - U||_F` at the returned point.
    pub stationarity: f64,
}

fn stationarity(u: &DMatrix<f64>, grad: &DMatrix<f64>) -> Result<f64> {
    Ok((project(&(u - grad))? - u).norm())
}

/// Projected gradient descent at a fixed penalty weight.
pub fn pgd_inner(
    u0: &DMatrix<f64>,
    data: &RelaxationData,
    d: PenaltyWeight,
    config: &ResolvedConfig,
) -> Result<InnerOutcome> {
    let d = d.value();
    let mut u = u0.clone();
    let mut value = Evaluation::new(&u, data).objective(d);
    if !value.is_finite() {
        return Err(Error::NonFinite(format!("initial objective {value}")));
    }
    let mut objectives = vec![value];
    let mut iterations = 0;
    loop {
        let grad = Evaluation::new(&u, data).gradient(d);
        let res = stationarity(&u, &grad)?;
        if res <= config.inner_tol || iterations >= config.max_inner_iters {
            return Ok(InnerOutcome { u, iterations, objectives, stationarity: res });
        }
        let direction = -&grad;
        let step = armijo_search(&u, value, &grad, &direction, |p| Evaluation::new(p, data).objective(d), config)?;
        match step {
            Some(step) => {
                u = step.point;
                value = step.value;
                objectives.push(value);
                iterations += 1;
            }
            None => return Ok(InnerOutcome { u, iterations, objectives, stationarity: res }),
        }
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn add_noise(u: &mut DMatrix<f64>, rng: &mut ChaCha8Rng) {
    // Row-major fill keeps the noise layout independent of storage order.
    for r in 0..u.nrows() {
        for c in 0..u.ncols() {
            u[(r, c)] += PERTURBATION * rng.random::<f64>();
        }
    }
}

/// Starting point `P(0.5 I + 1e-3 * noise)`, deterministic in the seed.
pub fn initialize(instance: &Instance, config: &SolverConfig) -> DMatrix<f64> {
    let m = instance.num_elements();
    let mut u = DMatrix::identity(m, m) * 0.5;
    add_noise(&mut u, &mut stream_rng(config.rng_seed, 0));
    project(&u).expect("finite by construction")
}

fn is_binary(u: &DMatrix<f64>, tol: f64) -> bool {
    u.iter().all(|&v| v.abs() <= tol || (v - 1.0).abs() <= tol)
}

fn snap(u: &DMatrix<f64>) -> DMatrix<f64> {
    u.map(|v| if v > 0.5 { 1.0 } else { 0.0 })
}

pub fn solve(instance: &Instance, config: &SolverConfig) -> Result<SolverResult> {
    solve_from(instance, config, initialize(instance, config))
}

/// [`solve`] from a caller-supplied starting point, projected first.
pub fn solve_from(instance: &Instance, config: &SolverConfig, start: DMatrix<f64>) -> Result<SolverResult> {
    let m = instance.num_elements();
    let cfg = config.resolve(m, instance.modality_count())?;
    if start.shape() != (m, m) {
        return Err(Error::DimensionMismatch {
            expected: format!("{m} x {m}"),
            got: format!("{} x {}", start.nrows(), start.ncols()),
        });
    }
    let scores = build_modality_matrices(instance);
    let data = build_relaxation_from(&scores, instance.set_sizes());
    descend(instance, &cfg, &scores, &data, project(&start)?)
}

/// The relaxation the descent runs on: `A_bar` with its diagonal cleared,
/// i.e. the relaxed objective plus `l ||U||_F^2`.
///
/// The two agree up to the constant `l m` on feasible binary points. The
/// diagonal `-l` acts like an extra orthogonality penalty of weight `l`, so
/// with it every vertex is a local minimum with a barrier of `2 l` and the
/// continuation never sees a weak penalty.
pub fn descent_relaxation(data: &RelaxationData) -> RelaxationData {
    let mut out = data.clone();
    out.abar.fill_diagonal(0.0);
    out
}

fn descend(
    instance: &Instance,
    cfg: &ResolvedConfig,
    scores: &ModalityMatrices,
    data: &RelaxationData,
    start: DMatrix<f64>,
) -> Result<SolverResult> {
    let m = instance.num_elements();
    let l = instance.modality_count();
    let surrogate = descent_relaxation(data);
    let mut u = start;
    let mut d = cfg.d_init;
    let mut trace = Vec::new();
    let mut binary = None;
    let mut kicks = stream_rng(cfg.rng_seed, 1);
    loop {
        let inner = pgd_inner(&u, &surrogate, PenaltyWeight::new(d)?, cfg)?;
        trace.push(StageRecord {
            d,
            inner_iterations: inner.iterations,
            objective: *inner.objectives.last().unwrap(),
            stationarity: inner.stationarity,
        });
        u = inner.u;
        if is_binary(&u, cfg.binary_tol) {
            let snapped = snap(&u);
            if check_feasible_sizes(&snapped, instance.set_sizes())?.is_feasible() {
                binary = Some(snapped);
                break;
            }
        }
        // A zero starting weight would never grow.
        let next = if d == 0.0 { 0.01 * l as f64 } else { d * cfg.d_growth };
        if next > cfg.d_max {
            break;
        }
        d = next;
        // Rows spread evenly over otherwise unused columns sit on an exact
        // saddle, since those columns receive identical gradients. A small
        // seeded kick lets the next stage fall off it.
        add_noise(&mut u, &mut kicks);
        u = project(&u)?;
    }

    let converged = binary.is_some();
    let u_bin = match binary {
        Some(u_bin) => u_bin,
        None => repair(&u, data)?.to_matrix_padded(m),
    };
    let assignment = Assignment::from_matrix(&u_bin, instance.set_sizes())
        .map_err(|e| Error::Internal(format!("solver output infeasible: {e}")))?;
    let relaxed_value = Evaluation::new(&u_bin, data).objective(d);
    let frobenius_value = frobenius_objective_with(&u_bin, scores)?;
    if !relaxed_value.is_finite() || !frobenius_value.is_finite() {
        return Err(Error::NonFinite("final objective".into()));
    }
    Ok(SolverResult { assignment, relaxed_value, frobenius_value, trace, converged })
}

impl Assignment {
    /// `m x m` binary matrix with the used columns first.
    fn to_matrix_padded(&self, m: usize) -> DMatrix<f64> {
        let mut u = DMatrix::zeros(self.num_elements(), m);
        for (r, &c) in self.columns().iter().enumerate() {
            u[(r, c)] = 1.0;
        }
        u
    }
}

/// Fallback when continuation ends on a fractional point: every row goes to
/// its largest entry (lowest column on ties), then rows sharing a column with
/// an earlier-kept row of the same set are moved, one at a time, to the
/// admissible cluster with the smallest objective increase.
pub(crate) fn repair(u: &DMatrix<f64>, data: &RelaxationData) -> Result<Assignment> {
    let m = u.nrows();
    let mut labels: Vec<usize> = (0..m)
        .map(|r| {
            let row = u.row(r);
            let mut best = 0;
            for c in 1..row.len() {
                if row[c] > row[best] {
                    best = c;
                }
            }
            best
        })
        .collect();
    let offsets = data.offsets();
    let mut next_label = m;
    for w in offsets.windows(2) {
        let rows: Vec<usize> = (w[0]..w[1]).collect();
        let mut by_label: Vec<(usize, usize)> = rows.iter().map(|&r| (labels[r], r)).collect();
        by_label.sort_unstable();
        for group in by_label.chunk_by(|a, b| a.0 == b.0) {
            if group.len() < 2 {
                continue;
            }
            // Keep the row with the strongest claim on the column.
            let col = group[0].0;
            let keep = group
                .iter()
                .map(|&(_, r)| r)
                .fold(group[0].1, |best, r| if u[(r, col)] > u[(best, col)] { r } else { best });
            for &(_, r) in group.iter().filter(|&&(_, r)| r != keep) {
                let mut candidates: Vec<usize> = labels.clone();
                candidates.sort_unstable();
                candidates.dedup();
                let mut best: Option<(f64, usize)> = None;
                for c in candidates {
                    if rows.iter().any(|&s| s != r && labels[s] == c) {
                        continue;
                    }
                    let delta: f64 =
                        (0..m).filter(|&b| b != r && labels[b] == c).map(|b| 2.0 * data.abar[(r, b)]).sum();
                    if best.is_none_or(|(bd, _)| delta < bd) {
                        best = Some((delta, c));
                    }
                }
                labels[r] = match best {
                    Some((delta, c)) if delta < 0.0 => c,
                    _ => {
                        next_label += 1;
                        next_label
                    }
                };
            }
        }
    }
    let assignment = Assignment::from_clusters(&ClusterLabeling::new(labels), data.set_sizes())?;
    let report = check_feasible_sizes(&assignment.to_matrix(), data.set_sizes())?;
    if !report.is_feasible() {
        return Err(Error::Internal(format!("repair produced an infeasible assignment: {report:?}")));
    }
    Ok(assignment)
}
