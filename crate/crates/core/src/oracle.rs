//! Exact minimisation of the Frobenius objective on small instances.
//!
//! Feasible assignments correspond one-to-one with partitions of the elements
//! in which no block holds two elements of the same set. They are enumerated
//! as restricted growth strings (element `a` gets a label at most one larger
//! than every earlier label) in lexicographic order, pruning any label
//! already used by the element's own set.

use crate::error::{Error, Result};
use crate::problem::{build_modality_matrices, set_index, Assignment, ClusterLabeling, Instance};
use crate::relax::{build_relaxation_from, frobenius_objective_with};

#[derive(Clone, Debug, PartialEq)]
pub struct OracleConfig {
    pub max_elements: usize,
    pub report_all_optima: bool,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { max_elements: 12, report_all_optima: false }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleResult {
    pub assignment: Assignment,
    pub value: f64,
    /// Every optimal assignment in enumeration order, when requested.
    pub all_optima: Vec<Assignment>,
    pub enumerated: u64,
}

fn check_cap(instance: &Instance, config: &OracleConfig) -> Result<()> {
    if config.max_elements < 2 {
        return Err(Error::InvalidConfig("max_elements must be >= 2".into()));
    }
    let m = instance.num_elements();
    if m > config.max_elements {
        return Err(Error::CapExceeded { m, cap: config.max_elements });
    }
    Ok(())
}

/// Number of feasible assignments for the given set sizes, by adding sets
/// one at a time: each new element either joins a distinct existing cluster
/// or opens its own.
pub fn count_feasible(set_sizes: &[usize]) -> u128 {
    let m: usize = set_sizes.iter().sum();
    let mut ways = vec![0u128; m + 1];
    ways[0] = 1;
    for &s in set_sizes {
        let mut next = vec![0u128; m + 1];
        for (k, &w) in ways.iter().enumerate() {
            if w == 0 {
                continue;
            }
            for j in 0..=s.min(k) {
                // choose j elements, inject them into j of the k clusters
                let choose = binomial(s, j);
                let falling: u128 = (0..j).map(|t| (k - t) as u128).product();
                next[k + s - j] += w * choose * falling;
            }
        }
        ways = next;
    }
    ways.iter().sum()
}

fn binomial(n: usize, k: usize) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Lexicographic stream of feasible assignments.
pub struct FeasiblePartitions {
    set_sizes: Vec<usize>,
    sets: Vec<usize>,
    labels: Vec<usize>,
    /// `prefix_clusters[a]` = number of clusters among `labels[..a]`.
    prefix_clusters: Vec<usize>,
    /// `occupied[c * n + i]`: cluster `c` already holds an element of set `i`.
    occupied: Vec<bool>,
    started: bool,
    done: bool,
}

impl FeasiblePartitions {
    fn new(set_sizes: &[usize]) -> Self {
        let m: usize = set_sizes.iter().sum();
        let n = set_sizes.len();
        Self {
            set_sizes: set_sizes.to_vec(),
            sets: set_index(set_sizes),
            labels: vec![0; m],
            prefix_clusters: vec![0; m + 1],
            occupied: vec![false; m * n],
            started: false,
            done: m == 0,
        }
    }

    fn slot(&self, cluster: usize, a: usize) -> usize {
        cluster * self.set_sizes.len() + self.sets[a]
    }

    fn place(&mut self, a: usize, c: usize) {
        self.labels[a] = c;
        let s = self.slot(c, a);
        self.occupied[s] = true;
        self.prefix_clusters[a + 1] = self.prefix_clusters[a].max(c + 1);
    }

    /// Fills positions `from..` with the smallest admissible labels.
    fn fill(&mut self, from: usize) {
        for a in from..self.labels.len() {
            let k = self.prefix_clusters[a];
            let c = (0..=k).find(|&c| c == k || !self.occupied[self.slot(c, a)]).unwrap();
            self.place(a, c);
        }
    }

    fn advance(&mut self) -> bool {
        let mut a = self.labels.len();
        while a > 0 {
            a -= 1;
            let cur = self.labels[a];
            let s = self.slot(cur, a);
            self.occupied[s] = false;
            let k = self.prefix_clusters[a];
            if let Some(c) = (cur + 1..=k).find(|&c| c == k || !self.occupied[self.slot(c, a)]) {
                self.place(a, c);
                self.fill(a + 1);
                return true;
            }
        }
        false
    }
}

impl Iterator for FeasiblePartitions {
    type Item = Assignment;

    fn next(&mut self) -> Option<Assignment> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            self.fill(0);
        } else if !self.advance() {
            self.done = true;
            return None;
        }
        let labels = ClusterLabeling::new(self.labels.clone());
        Some(Assignment::from_clusters(&labels, &self.set_sizes).expect("enumeration respects distinctness"))
    }
}

pub fn enumerate_feasible(instance: &Instance, config: &OracleConfig) -> Result<FeasiblePartitions> {
    check_cap(instance, config)?;
    Ok(FeasiblePartitions::new(instance.set_sizes()))
}

struct Search<'a> {
    abar: &'a nalgebra::DMatrix<f64>,
    sets: Vec<usize>,
    n: usize,
    labels: Vec<usize>,
    members: Vec<Vec<usize>>,
    occupied: Vec<bool>,
    best: Option<(f64, Vec<usize>)>,
    optima: Vec<Vec<usize>>,
    keep_all: bool,
    enumerated: u64,
}

/// Relative slack under which two enumerated values count as a tie.
const TIE_TOL: f64 = 1e-9;

impl Search<'_> {
    fn run(&mut self, a: usize, clusters: usize, cost: f64) {
        if a == self.labels.len() {
            self.enumerated += 1;
            self.record(cost);
            return;
        }
        let set = self.sets[a];
        for c in 0..=clusters {
            if c < clusters && self.occupied[c * self.n + set] {
                continue;
            }
            if c == clusters {
                self.members.push(Vec::new());
            }
            let delta = self.abar[(a, a)] + 2.0 * self.members[c].iter().map(|&b| self.abar[(a, b)]).sum::<f64>();
            self.labels[a] = c;
            self.members[c].push(a);
            self.occupied[c * self.n + set] = true;
            self.run(a + 1, clusters.max(c + 1), cost + delta);
            self.occupied[c * self.n + set] = false;
            self.members[c].pop();
            if c == clusters {
                self.members.pop();
            }
        }
    }

    fn record(&mut self, cost: f64) {
        match &self.best {
            Some((best, _)) if cost >= best - TIE_TOL * best.abs().max(1.0) => {
                if self.keep_all && cost <= best + TIE_TOL * best.abs().max(1.0) {
                    self.optima.push(self.labels.clone());
                }
            }
            _ => {
                self.best = Some((cost, self.labels.clone()));
                self.optima.clear();
                if self.keep_all {
                    self.optima.push(self.labels.clone());
                }
            }
        }
    }
}

/// Globally optimal assignment under the Frobenius objective; ties resolve to
/// the first optimum in enumeration order.
pub fn solve_exact(instance: &Instance, config: &OracleConfig) -> Result<OracleResult> {
    check_cap(instance, config)?;
    let scores = build_modality_matrices(instance);
    let data = build_relaxation_from(&scores, instance.set_sizes());
    let m = instance.num_elements();
    let mut search = Search {
        abar: &data.abar,
        sets: set_index(instance.set_sizes()),
        n: instance.num_sets(),
        labels: vec![0; m],
        members: Vec::with_capacity(m),
        occupied: vec![false; m * instance.num_sets()],
        best: None,
        optima: Vec::new(),
        keep_all: config.report_all_optima,
        enumerated: 0,
    };
    search.run(0, 0, 0.0);
    let (cost, labels) = search.best.take().ok_or_else(|| Error::Internal("no feasible assignment".into()))?;
    let to_assignment = |labels: Vec<usize>| Assignment::from_clusters(&ClusterLabeling::new(labels), instance.set_sizes());
    let assignment = to_assignment(labels)?;
    let value = frobenius_objective_with(&assignment.to_matrix(), &scores)?;
    let expanded = cost + data.frob_const;
    if (value - expanded).abs() > 1e-8 * value.abs().max(1.0) {
        return Err(Error::Internal(format!(
            "expansion mismatch: direct {value}, incremental {expanded}"
        )));
    }
    let all_optima = search.optima.drain(..).map(to_assignment).collect::<Result<Vec<_>>>()?;
    Ok(OracleResult { assignment, value, all_optima, enumerated: search.enumerated })
}
