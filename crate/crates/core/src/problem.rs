//! Problem representation: instances, per-modality score matrices,
//! assignments and the consistency checks that go with them.
//!
//! Elements are indexed globally: the `p`-th element of set `i` has index
//! `m_0 + ... + m_{i-1} + p`. Every matrix in the crate uses this row order.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Score used for an absent cross-set pair ("no information").
pub const INCONCLUSIVE: f64 = 0.5;

/// A multiway, multimodal association problem.
///
/// Scores are stored sparsely for unordered pairs `(a, b)` with `a < b`.
/// Absent pairs default to [`INCONCLUSIVE`] across sets, and to `0` within a
/// set. Self-pairs are implicitly `1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    set_sizes: Vec<usize>,
    offsets: Vec<usize>,
    modality_count: usize,
    scores: BTreeMap<(usize, usize), Vec<f64>>,
}

impl Instance {
    pub fn new(set_sizes: Vec<usize>, modality_count: usize) -> Result<Self> {
        if set_sizes.is_empty() {
            return Err(Error::InvalidInstance("at least one set is required".into()));
        }
        if let Some(i) = set_sizes.iter().position(|&s| s == 0) {
            return Err(Error::InvalidInstance(format!("set {i} is empty")));
        }
        if modality_count == 0 {
            return Err(Error::InvalidInstance("modality count must be at least 1".into()));
        }
        let offsets = offsets_of(&set_sizes);
        Ok(Self { set_sizes, offsets, modality_count, scores: BTreeMap::new() })
    }

    /// Stores the score vector of the unordered pair `{a, b}`.
    pub fn set_score(&mut self, a: usize, b: usize, scores: Vec<f64>) -> Result<()> {
        let m = self.num_elements();
        if a == b {
            return Err(Error::InvalidInstance(format!("self-pair ({a}, {a}) cannot carry a score")));
        }
        if a >= m || b >= m {
            return Err(Error::InvalidInstance(format!(
                "pair ({a}, {b}) out of range for {m} elements"
            )));
        }
        if scores.len() != self.modality_count {
            return Err(Error::InvalidInstance(format!(
                "pair ({a}, {b}) has {} scores, expected {}",
                scores.len(),
                self.modality_count
            )));
        }
        if let Some(s) = scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
            return Err(Error::InvalidInstance(format!(
                "pair ({a}, {b}) has score {s} outside [0, 1]"
            )));
        }
        self.insert_normalized(a, b, scores);
        Ok(())
    }

    /// All-inconclusive cross-set vectors equal the default and are not stored,
    /// so equal instances compare equal regardless of how they were built.
    fn insert_normalized(&mut self, a: usize, b: usize, scores: Vec<f64>) {
        let key = (a.min(b), a.max(b));
        if self.set_of(a) != self.set_of(b) && scores.iter().all(|&s| s == INCONCLUSIVE) {
            self.scores.remove(&key);
        } else {
            self.scores.insert(key, scores);
        }
    }

    pub fn set_sizes(&self) -> &[usize] {
        &self.set_sizes
    }

    pub fn num_sets(&self) -> usize {
        self.set_sizes.len()
    }

    pub fn num_elements(&self) -> usize {
        self.offsets[self.set_sizes.len()]
    }

    pub fn modality_count(&self) -> usize {
        self.modality_count
    }

    /// Global index of the first element of each set, followed by `m`.
    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn global_index(&self, set: usize, position: usize) -> usize {
        self.offsets[set] + position
    }

    pub fn set_of(&self, element: usize) -> usize {
        set_of(&self.offsets, element)
    }

    pub fn set_range(&self, set: usize) -> std::ops::Range<usize> {
        self.offsets[set]..self.offsets[set + 1]
    }

    /// Explicitly stored scores, keyed by `(a, b)` with `a < b`.
    pub fn stored_scores(&self) -> &BTreeMap<(usize, usize), Vec<f64>> {
        &self.scores
    }

    /// Effective score vector of a pair, with defaults applied.
    pub fn score(&self, a: usize, b: usize) -> Vec<f64> {
        let l = self.modality_count;
        if a == b {
            return vec![1.0; l];
        }
        match self.scores.get(&(a.min(b), a.max(b))) {
            Some(s) => s.clone(),
            None if self.set_of(a) == self.set_of(b) => vec![0.0; l],
            None => vec![INCONCLUSIVE; l],
        }
    }

    /// Sub-instance keeping only the listed modalities, in the given order.
    pub fn select_modalities(&self, modalities: &[usize]) -> Result<Instance> {
        if let Some(&k) = modalities.iter().find(|&&k| k >= self.modality_count) {
            return Err(Error::InvalidInstance(format!("modality {k} does not exist")));
        }
        let mut out = Instance::new(self.set_sizes.clone(), modalities.len())?;
        for (&(a, b), s) in &self.scores {
            out.insert_normalized(a, b, modalities.iter().map(|&k| s[k]).collect());
        }
        Ok(out)
    }
}

pub(crate) fn offsets_of(set_sizes: &[usize]) -> Vec<usize> {
    let mut offsets = Vec::with_capacity(set_sizes.len() + 1);
    let mut acc = 0;
    offsets.push(0);
    for &s in set_sizes {
        acc += s;
        offsets.push(acc);
    }
    offsets
}

pub(crate) fn set_of(offsets: &[usize], element: usize) -> usize {
    offsets.partition_point(|&o| o <= element) - 1
}

/// Per-element set index.
pub(crate) fn set_index(set_sizes: &[usize]) -> Vec<usize> {
    set_sizes
        .iter()
        .enumerate()
        .flat_map(|(i, &s)| std::iter::repeat_n(i, s))
        .collect()
}

/// The aggregate association matrix stored as one symmetric `m x m` matrix
/// per modality. Every pairwise block is diagonal, so nothing is lost.
#[derive(Clone, Debug, PartialEq)]
pub struct ModalityMatrices {
    pub mats: Vec<DMatrix<f64>>,
}

impl ModalityMatrices {
    /// Sum over modalities.
    pub fn sum(&self) -> DMatrix<f64> {
        let m = self.mats[0].nrows();
        self.mats.iter().fold(DMatrix::zeros(m, m), |acc, s| acc + s)
    }
}

pub fn build_modality_matrices(instance: &Instance) -> ModalityMatrices {
    let m = instance.num_elements();
    let l = instance.modality_count();
    let sets = set_index(instance.set_sizes());
    let mut mats = vec![DMatrix::zeros(m, m); l];
    for mat in &mut mats {
        for a in 0..m {
            for b in 0..m {
                mat[(a, b)] = if a == b {
                    1.0
                } else if sets[a] == sets[b] {
                    0.0
                } else {
                    INCONCLUSIVE
                };
            }
        }
    }
    for (&(a, b), s) in instance.stored_scores() {
        for (mat, &v) in mats.iter_mut().zip(s) {
            mat[(a, b)] = v;
            mat[(b, a)] = v;
        }
    }
    ModalityMatrices { mats }
}

/// Constraint violations of a candidate `U`. Empty iff feasible.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FeasibilityReport {
    /// Rows whose sum differs from 1, with the offending sum.
    pub row_violations: Vec<(usize, f64)>,
    /// `(set, column, count)` where more than one row of the set uses the column.
    pub distinctness_violations: Vec<(usize, usize, usize)>,
    /// Entries that are neither 0 nor 1.
    pub fractional_entries: Vec<(usize, usize)>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.row_violations.is_empty()
            && self.distinctness_violations.is_empty()
            && self.fractional_entries.is_empty()
    }
}

/// Checks the one-to-one and distinctness constraints of a binary `U`.
pub fn check_feasible(u: &DMatrix<f64>, instance: &Instance) -> Result<FeasibilityReport> {
    check_feasible_sizes(u, instance.set_sizes())
}

pub(crate) fn check_feasible_sizes(u: &DMatrix<f64>, set_sizes: &[usize]) -> Result<FeasibilityReport> {
    let m: usize = set_sizes.iter().sum();
    if u.nrows() != m {
        return Err(Error::DimensionMismatch {
            expected: format!("{m} rows"),
            got: format!("{} rows", u.nrows()),
        });
    }
    let mut report = FeasibilityReport::default();
    for r in 0..u.nrows() {
        for c in 0..u.ncols() {
            let v = u[(r, c)];
            if v != 0.0 && v != 1.0 {
                report.fractional_entries.push((r, c));
            }
        }
        let sum: f64 = u.row(r).sum();
        if sum != 1.0 {
            report.row_violations.push((r, sum));
        }
    }
    let offsets = offsets_of(set_sizes);
    for (i, w) in offsets.windows(2).enumerate() {
        for c in 0..u.ncols() {
            let count = (w[0]..w[1]).filter(|&r| u[(r, c)] != 0.0).count();
            if count > 1 {
                report.distinctness_violations.push((i, c, count));
            }
        }
    }
    Ok(report)
}

/// A feasible binary assignment of elements to universe objects, stored as
/// the column index of the single 1 in every row of `U`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Assignment {
    set_sizes: Vec<usize>,
    columns: Vec<usize>,
    num_columns: usize,
}

impl Assignment {
    /// Validates a binary matrix and drops its all-zero columns.
    pub fn from_matrix(u: &DMatrix<f64>, set_sizes: &[usize]) -> Result<Self> {
        let report = check_feasible_sizes(u, set_sizes)?;
        if !report.is_feasible() {
            return Err(Error::Infeasible(format!("{report:?}")));
        }
        let raw: Vec<usize> = (0..u.nrows())
            .map(|r| (0..u.ncols()).find(|&c| u[(r, c)] == 1.0).expect("feasible row"))
            .collect();
        let mut used = vec![false; u.ncols()];
        raw.iter().for_each(|&c| used[c] = true);
        let mut remap = vec![usize::MAX; u.ncols()];
        let mut next = 0;
        for (c, &keep) in used.iter().enumerate() {
            if keep {
                remap[c] = next;
                next += 1;
            }
        }
        Ok(Self {
            set_sizes: set_sizes.to_vec(),
            columns: raw.iter().map(|&c| remap[c]).collect(),
            num_columns: next,
        })
    }

    /// Builds an assignment from a cluster labeling; fails if two elements of
    /// one set share a label.
    pub fn from_clusters(labels: &ClusterLabeling, set_sizes: &[usize]) -> Result<Self> {
        let m: usize = set_sizes.iter().sum();
        if labels.labels.len() != m {
            return Err(Error::DimensionMismatch {
                expected: format!("{m} labels"),
                got: format!("{} labels", labels.labels.len()),
            });
        }
        let canon = labels.canonical();
        let k = canon.num_clusters();
        let offsets = offsets_of(set_sizes);
        for (i, w) in offsets.windows(2).enumerate() {
            let mut seen = vec![false; k];
            for a in w[0]..w[1] {
                let c = canon.labels[a];
                if seen[c] {
                    return Err(Error::InvalidClustering(format!(
                        "two elements of set {i} share cluster {}",
                        labels.labels[a]
                    )));
                }
                seen[c] = true;
            }
        }
        Ok(Self { set_sizes: set_sizes.to_vec(), columns: canon.labels, num_columns: k })
    }

    pub fn set_sizes(&self) -> &[usize] {
        &self.set_sizes
    }

    pub fn num_elements(&self) -> usize {
        self.columns.len()
    }

    /// Number of universe objects (non-zero columns of `U`).
    pub fn num_columns(&self) -> usize {
        self.num_columns
    }

    /// Column of the single 1 in each row.
    pub fn columns(&self) -> &[usize] {
        &self.columns
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        let mut u = DMatrix::zeros(self.columns.len(), self.num_columns);
        for (r, &c) in self.columns.iter().enumerate() {
            u[(r, c)] = 1.0;
        }
        u
    }

    pub fn clusters(&self) -> ClusterLabeling {
        ClusterLabeling { labels: self.columns.clone() }.canonical()
    }

    /// Binary pairwise matches `P_ij = U_i U_j^T` for all `i != j`.
    pub fn pairwise(&self) -> PairwiseTable {
        let offsets = offsets_of(&self.set_sizes);
        let n = self.set_sizes.len();
        let mut table = PairwiseTable::empty(self.set_sizes.clone());
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let block = DMatrix::from_fn(self.set_sizes[i], self.set_sizes[j], |p, q| {
                    self.columns[offsets[i] + p] == self.columns[offsets[j] + q]
                });
                table.blocks[i][j] = Some(block);
            }
        }
        table
    }
}

/// Convenience wrapper matching the free-function naming of the other checks.
pub fn pairwise_from_assignment(u: &Assignment) -> PairwiseTable {
    u.pairwise()
}

/// Cluster identifier per element.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClusterLabeling {
    pub labels: Vec<usize>,
}

impl ClusterLabeling {
    pub fn new(labels: Vec<usize>) -> Self {
        Self { labels }
    }

    pub fn singletons(m: usize) -> Self {
        Self { labels: (0..m).collect() }
    }

    /// Relabels clusters `0, 1, ...` in order of first appearance.
    pub fn canonical(&self) -> ClusterLabeling {
        let mut map = BTreeMap::new();
        let labels = self
            .labels
            .iter()
            .map(|&l| {
                let next = map.len();
                *map.entry(l).or_insert(next)
            })
            .collect();
        ClusterLabeling { labels }
    }

    pub fn num_clusters(&self) -> usize {
        let mut seen: Vec<usize> = self.labels.clone();
        seen.sort_unstable();
        seen.dedup();
        seen.len()
    }

    /// Members of each cluster, clusters ordered by first appearance.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let canon = self.canonical();
        let mut out = vec![Vec::new(); canon.num_clusters()];
        for (a, &c) in canon.labels.iter().enumerate() {
            out[c].push(a);
        }
        out
    }

    /// Unordered co-clustered pairs `(a, b)` with `a < b`.
    pub fn matched_pairs(&self) -> Vec<(usize, usize)> {
        let mut pairs = Vec::new();
        for cluster in self.clusters() {
            for (x, &a) in cluster.iter().enumerate() {
                for &b in &cluster[x + 1..] {
                    pairs.push((a, b));
                }
            }
        }
        pairs.sort_unstable();
        pairs
    }
}

pub fn clusters_from_assignment(u: &Assignment) -> ClusterLabeling {
    u.clusters()
}

pub fn assignment_from_clusters(labels: &ClusterLabeling, set_sizes: &[usize]) -> Result<Assignment> {
    Assignment::from_clusters(labels, set_sizes)
}

/// Binary pairwise association blocks `P_ij` between every ordered pair of
/// distinct sets.
#[derive(Clone, Debug, PartialEq)]
pub struct PairwiseTable {
    set_sizes: Vec<usize>,
    blocks: Vec<Vec<Option<DMatrix<bool>>>>,
}

impl PairwiseTable {
    pub fn empty(set_sizes: Vec<usize>) -> Self {
        let n = set_sizes.len();
        Self { set_sizes, blocks: vec![vec![None; n]; n] }
    }

    /// Builds a symmetric table from a list of matched global element pairs.
    /// Within-set pairs are rejected.
    pub fn from_pairs(set_sizes: Vec<usize>, pairs: &[(usize, usize)]) -> Result<Self> {
        let offsets = offsets_of(&set_sizes);
        let n = set_sizes.len();
        let m = offsets[n];
        let mut table = Self::empty(set_sizes);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    table.blocks[i][j] =
                        Some(DMatrix::from_element(table.set_sizes[i], table.set_sizes[j], false));
                }
            }
        }
        for &(a, b) in pairs {
            if a >= m || b >= m {
                return Err(Error::InvalidPairwise(format!("pair ({a}, {b}) out of range")));
            }
            let (i, j) = (set_of(&offsets, a), set_of(&offsets, b));
            if i == j {
                return Err(Error::InvalidPairwise(format!("pair ({a}, {b}) lies within set {i}")));
            }
            let (p, q) = (a - offsets[i], b - offsets[j]);
            table.blocks[i][j].as_mut().unwrap()[(p, q)] = true;
            table.blocks[j][i].as_mut().unwrap()[(q, p)] = true;
        }
        Ok(table)
    }

    pub fn set_sizes(&self) -> &[usize] {
        &self.set_sizes
    }

    pub fn get(&self, i: usize, j: usize) -> Option<&DMatrix<bool>> {
        self.blocks.get(i)?.get(j)?.as_ref()
    }

    pub fn set(&mut self, i: usize, j: usize, block: DMatrix<bool>) {
        self.blocks[i][j] = Some(block);
    }
}

struct DisjointSets {
    parent: Vec<usize>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Returns whether a complete table of pairwise matches is cycle consistent:
/// the transitive closure of the matches never joins two elements of one set
/// and adds no match that is not already present.
///
/// Fails on a missing or mis-sized block, on `P_ij != P_ji^T`, and on a block
/// with more than one match in a row or column.
pub fn check_cycle_consistency(table: &PairwiseTable) -> Result<bool> {
    let sizes = &table.set_sizes;
    let n = sizes.len();
    let offsets = offsets_of(sizes);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let block = table
                .get(i, j)
                .ok_or_else(|| Error::InvalidPairwise(format!("block ({i}, {j}) missing")))?;
            if block.shape() != (sizes[i], sizes[j]) {
                return Err(Error::InvalidPairwise(format!(
                    "block ({i}, {j}) has shape {:?}, expected ({}, {})",
                    block.shape(),
                    sizes[i],
                    sizes[j]
                )));
            }
            if i < j {
                let other = table
                    .get(j, i)
                    .ok_or_else(|| Error::InvalidPairwise(format!("block ({j}, {i}) missing")))?;
                if other.transpose() != *block {
                    return Err(Error::InvalidPairwise(format!("block ({i}, {j}) is not the transpose of ({j}, {i})")));
                }
            }
            for p in 0..sizes[i] {
                if block.row(p).iter().filter(|&&x| x).count() > 1 {
                    return Err(Error::InvalidPairwise(format!(
                        "row {p} of block ({i}, {j}) has more than one match"
                    )));
                }
            }
            for q in 0..sizes[j] {
                if block.column(q).iter().filter(|&&x| x).count() > 1 {
                    return Err(Error::InvalidPairwise(format!(
                        "column {q} of block ({i}, {j}) has more than one match"
                    )));
                }
            }
        }
    }

    let m = offsets[n];
    let mut dsu = DisjointSets::new(m);
    let mut matches = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            let block = table.get(i, j).unwrap();
            for p in 0..sizes[i] {
                for q in 0..sizes[j] {
                    if block[(p, q)] {
                        matches += 1;
                        dsu.union(offsets[i] + p, offsets[j] + q);
                    }
                }
            }
        }
    }

    // A consistent relation is an equivalence whose classes hit each set at
    // most once; its match count is then exactly sum C(|class|, 2).
    let mut members: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for a in 0..m {
        members.entry(dsu.find(a)).or_default().push(a);
    }
    let mut closure_pairs = 0usize;
    for class in members.values() {
        let mut sets: Vec<usize> = class.iter().map(|&a| set_of(&offsets, a)).collect();
        sets.sort_unstable();
        if sets.windows(2).any(|w| w[0] == w[1]) {
            return Ok(false);
        }
        closure_pairs += class.len() * (class.len() - 1) / 2;
    }
    Ok(closure_pairs == matches)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_singletons(score: Option<f64>) -> Instance {
        let mut inst = Instance::new(vec![1, 1], 1).unwrap();
        if let Some(s) = score {
            inst.set_score(0, 1, vec![s]).unwrap();
        }
        inst
    }

    #[test]
    fn modality_matrices_defaults() {
        let s = build_modality_matrices(&two_singletons(Some(1.0)));
        assert_eq!(s.mats[0], DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]));

        let s = build_modality_matrices(&two_singletons(None));
        assert_eq!(s.mats[0], DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]));

        let inst = Instance::new(vec![2], 2).unwrap();
        let s = build_modality_matrices(&inst);
        assert_eq!(s.mats.len(), 2);
        for mat in &s.mats {
            assert_eq!(*mat, DMatrix::<f64>::identity(2, 2));
        }
    }

    #[test]
    fn stored_within_set_scores_are_used() {
        let mut inst = Instance::new(vec![2, 1], 1).unwrap();
        inst.set_score(1, 0, vec![0.7]).unwrap();
        let s = build_modality_matrices(&inst);
        assert_eq!(s.mats[0][(0, 1)], 0.7);
        assert_eq!(s.mats[0][(1, 0)], 0.7);
        assert_eq!(inst.score(0, 1), vec![0.7]);
    }

    #[test]
    fn instance_validation() {
        let mut inst = Instance::new(vec![1, 1], 1).unwrap();
        assert!(inst.set_score(0, 1, vec![1.5]).is_err());
        assert!(inst.set_score(0, 0, vec![1.0]).is_err());
        assert!(inst.set_score(0, 2, vec![1.0]).is_err());
        assert!(inst.set_score(0, 1, vec![1.0, 1.0]).is_err());
        assert!(inst.set_score(0, 1, vec![f64::NAN]).is_err());
        assert!(Instance::new(vec![], 1).is_err());
        assert!(Instance::new(vec![1, 0], 1).is_err());
        assert!(Instance::new(vec![1], 0).is_err());
    }

    #[test]
    fn element_indexing() {
        let inst = Instance::new(vec![2, 3, 1], 1).unwrap();
        assert_eq!(inst.num_elements(), 6);
        assert_eq!(inst.global_index(1, 2), 4);
        assert_eq!(inst.global_index(2, 0), 5);
        let sets: Vec<usize> = (0..6).map(|a| inst.set_of(a)).collect();
        assert_eq!(sets, vec![0, 0, 1, 1, 1, 2]);
    }

    #[test]
    fn feasibility_examples() {
        let inst = Instance::new(vec![2, 2], 1).unwrap();
        let eye = DMatrix::<f64>::identity(4, 4);
        assert!(check_feasible(&eye, &inst).unwrap().is_feasible());

        let mut zero_row = eye.clone();
        zero_row[(2, 2)] = 0.0;
        let r = check_feasible(&zero_row, &inst).unwrap();
        assert_eq!(r.row_violations, vec![(2, 0.0)]);

        let mut shared = eye.clone();
        shared[(1, 1)] = 0.0;
        shared[(1, 0)] = 1.0;
        let r = check_feasible(&shared, &inst).unwrap();
        assert_eq!(r.distinctness_violations, vec![(0, 0, 2)]);
        assert!(r.row_violations.is_empty());

        assert!(check_feasible(&DMatrix::<f64>::identity(3, 3), &inst).is_err());
    }

    #[test]
    fn pairwise_examples() {
        let eye = Assignment::from_matrix(&DMatrix::identity(4, 4), &[2, 2]).unwrap();
        let p = eye.pairwise();
        assert!(!p.get(0, 1).unwrap().iter().any(|&x| x));

        let merged = Assignment::from_matrix(&DMatrix::from_element(2, 1, 1.0), &[1, 1]).unwrap();
        assert_eq!(*merged.pairwise().get(0, 1).unwrap(), DMatrix::from_element(1, 1, true));
    }

    #[test]
    fn broken_triangle_is_inconsistent() {
        let t = PairwiseTable::from_pairs(vec![1, 1, 1], &[(0, 1), (1, 2)]).unwrap();
        assert!(!check_cycle_consistency(&t).unwrap());
        let t = PairwiseTable::from_pairs(vec![1, 1, 1], &[(0, 1), (1, 2), (0, 2)]).unwrap();
        assert!(check_cycle_consistency(&t).unwrap());
    }

    #[test]
    fn closure_joining_one_set_is_inconsistent() {
        // 0 and 1 in set 0, both matched to element 2 through different sets.
        let t = PairwiseTable::from_pairs(vec![2, 1, 1], &[(0, 2), (2, 3), (1, 3)]).unwrap();
        assert!(!check_cycle_consistency(&t).unwrap());
    }

    #[test]
    fn double_match_in_row_is_an_error() {
        let t = PairwiseTable::from_pairs(vec![1, 2], &[(0, 1), (0, 2)]).unwrap();
        assert!(check_cycle_consistency(&t).is_err());
    }

    #[test]
    fn asymmetric_table_is_an_error() {
        let mut t = PairwiseTable::from_pairs(vec![1, 1], &[(0, 1)]).unwrap();
        t.set(1, 0, DMatrix::from_element(1, 1, false));
        assert!(check_cycle_consistency(&t).is_err());
    }

    #[test]
    fn cluster_conversions() {
        let eye = Assignment::from_matrix(&DMatrix::identity(3, 3), &[1, 1, 1]).unwrap();
        assert_eq!(eye.clusters().labels, vec![0, 1, 2]);

        let merged = Assignment::from_clusters(&ClusterLabeling::new(vec![0, 0]), &[1, 1]).unwrap();
        assert_eq!(merged.to_matrix(), DMatrix::from_element(2, 1, 1.0));

        assert!(Assignment::from_clusters(&ClusterLabeling::new(vec![4, 4]), &[2]).is_err());
    }

    #[test]
    fn zero_columns_are_dropped() {
        let mut u = DMatrix::zeros(2, 4);
        u[(0, 3)] = 1.0;
        u[(1, 1)] = 1.0;
        let a = Assignment::from_matrix(&u, &[1, 1]).unwrap();
        assert_eq!(a.num_columns(), 2);
        assert_eq!(a.columns(), &[1, 0]);
    }

    #[test]
    fn select_modalities_projects_scores() {
        let mut inst = Instance::new(vec![1, 1], 3).unwrap();
        inst.set_score(0, 1, vec![0.1, 0.2, 0.3]).unwrap();
        let sub = inst.select_modalities(&[2]).unwrap();
        assert_eq!(sub.modality_count(), 1);
        assert_eq!(sub.score(0, 1), vec![0.3]);
        assert!(inst.select_modalities(&[3]).is_err());
    }
}
