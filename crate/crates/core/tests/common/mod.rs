#![allow(dead_code)]

use mixer::problem::ClusterLabeling;
use mixer::Instance;
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random set sizes with at most `max_total` elements in total.
pub fn random_sizes(rng: &mut ChaCha8Rng, max_sets: usize, max_size: usize, max_total: usize) -> Vec<usize> {
    loop {
        let n = rng.random_range(1..=max_sets);
        let sizes: Vec<usize> = (0..n).map(|_| rng.random_range(1..=max_size)).collect();
        if sizes.iter().sum::<usize>() <= max_total {
            return sizes;
        }
    }
}

/// Scores drawn uniformly, with a share of exact 0, 1 and absent pairs.
pub fn random_instance(rng: &mut ChaCha8Rng, sizes: &[usize], l: usize) -> Instance {
    let mut inst = Instance::new(sizes.to_vec(), l).unwrap();
    let m = inst.num_elements();
    for a in 0..m {
        for b in a + 1..m {
            if inst.set_of(a) == inst.set_of(b) || rng.random_bool(0.2) {
                continue;
            }
            let s: Vec<f64> = (0..l)
                .map(|_| match rng.random_range(0..6) {
                    0 => 0.0,
                    1 => 1.0,
                    _ => rng.random::<f64>(),
                })
                .collect();
            inst.set_score(a, b, s).unwrap();
        }
    }
    inst
}

/// A uniformly shuffled feasible clustering: each set sends its elements to
/// distinct clusters of a shared pool.
pub fn random_labels(rng: &mut ChaCha8Rng, sizes: &[usize]) -> ClusterLabeling {
    let m: usize = sizes.iter().sum();
    let largest = *sizes.iter().max().unwrap();
    let pool = rng.random_range(largest..=m);
    let mut labels = Vec::with_capacity(m);
    for &s in sizes {
        let mut ids: Vec<usize> = (0..pool).collect();
        ids.shuffle(rng);
        labels.extend_from_slice(&ids[..s]);
    }
    ClusterLabeling::new(labels)
}

pub fn random_nonnegative(rng: &mut ChaCha8Rng, m: usize, floor: f64) -> DMatrix<f64> {
    DMatrix::from_fn(m, m, |_, _| floor + rng.random::<f64>())
}

/// Same-cluster indicator of a labeling.
pub fn co_membership(labels: &[usize]) -> DMatrix<f64> {
    let m = labels.len();
    DMatrix::from_fn(m, m, |a, b| if labels[a] == labels[b] { 1.0 } else { 0.0 })
}

/// One-hot matrix with column = cluster label.
pub fn one_hot(labels: &[usize]) -> DMatrix<f64> {
    let m = labels.len();
    let mut u = DMatrix::zeros(m, m);
    for (r, &c) in labels.iter().enumerate() {
        u[(r, c)] = 1.0;
    }
    u
}

/// Every set partition of `0..m` as restricted growth strings, without any
/// pruning.
pub fn all_partitions(m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut labels = vec![0; m];
    fn rec(pos: usize, next: usize, labels: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if pos == labels.len() {
            out.push(labels.clone());
            return;
        }
        for c in 0..=next {
            labels[pos] = c;
            rec(pos + 1, next.max(c + 1), labels, out);
        }
    }
    if m > 0 {
        rec(1, 1, &mut labels, &mut out);
    } else {
        out.push(Vec::new());
    }
    out
}

pub fn is_feasible_labels(labels: &[usize], sizes: &[usize]) -> bool {
    let mut start = 0;
    for &s in sizes {
        let mut seen: Vec<usize> = labels[start..start + s].to_vec();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return false;
        }
        start += s;
    }
    true
}

/// Instance with elements relabelled: new element `perm[a]` is old `a`.
/// `perm` must keep set membership aligned with `new_sizes`.
pub fn permute_instance(inst: &Instance, perm: &[usize], new_sizes: Vec<usize>) -> Instance {
    let mut out = Instance::new(new_sizes, inst.modality_count()).unwrap();
    for (&(a, b), s) in inst.stored_scores() {
        out.set_score(perm[a], perm[b], s.clone()).unwrap();
    }
    out
}

/// Random element permutation that shuffles the sets and the elements within
/// each set. Returns the map and the new set sizes.
pub fn random_set_permutation(rng: &mut ChaCha8Rng, sizes: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.shuffle(rng);
    let new_sizes: Vec<usize> = order.iter().map(|&i| sizes[i]).collect();
    let mut old_offsets = vec![0];
    for &s in sizes {
        old_offsets.push(old_offsets.last().unwrap() + s);
    }
    let m = *old_offsets.last().unwrap();
    let mut perm = vec![0; m];
    let mut next = 0;
    for &i in &order {
        let mut within: Vec<usize> = (0..sizes[i]).collect();
        within.shuffle(rng);
        for (k, &p) in within.iter().enumerate() {
            perm[old_offsets[i] + p] = next + k;
        }
        next += sizes[i];
    }
    (perm, new_sizes)
}
