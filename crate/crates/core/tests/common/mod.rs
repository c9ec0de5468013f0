//! Random instances and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use logratio::cluster::TIE_TOLERANCE;
use logratio::{CompositionMatrix, Merge, MergeTree, RawTable, SlrGroup, WeightAxis, WeightVector};
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn labels(j: usize) -> Vec<String> {
    (1..=j).map(|k| format!("p{k}")).collect()
}

/// Positive parts spread over roughly two orders of magnitude.
pub fn random_raw(rng: &mut impl Rng, i: usize, j: usize) -> DMatrix<f64> {
    DMatrix::from_fn(i, j, |_, _| rng.random_range(-2.5..2.5f64).exp())
}

pub fn random_composition(rng: &mut impl Rng, i: usize, j: usize) -> CompositionMatrix {
    let raw = RawTable::unlabelled(random_raw(rng, i, j));
    logratio::close(&raw, 0.0).unwrap()
}

pub fn random_weights(rng: &mut impl Rng, n: usize, axis: WeightAxis) -> WeightVector {
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..3.0)).collect();
    WeightVector::normalized(&raw, axis).unwrap()
}

pub fn random_order(rng: &mut impl Rng, j: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..j).collect();
    order.shuffle(rng);
    order
}

/// Random spanning tree on `j` parts as `(numerator, denominator)` pairs,
/// each edge randomly oriented.
pub fn random_spanning_pairs(rng: &mut impl Rng, j: usize) -> Vec<(usize, usize)> {
    let order = random_order(rng, j);
    let mut pairs: Vec<(usize, usize)> = (1..j)
        .map(|k| {
            let a = order[k];
            let b = order[rng.random_range(0..k)];
            if rng.random_bool(0.5) {
                (a, b)
            } else {
                (b, a)
            }
        })
        .collect();
    pairs.shuffle(rng);
    pairs
}

/// Random full binary tree over `labels`, merging random pairs of the pool.
pub fn random_tree(rng: &mut impl Rng, labels: &[String]) -> MergeTree {
    let n = labels.len();
    let mut pool: Vec<usize> = (0..n).collect();
    let mut merges = Vec::new();
    for t in 0..n - 1 {
        pool.shuffle(rng);
        let left = pool.pop().unwrap();
        let right = pool.pop().unwrap();
        merges.push(Merge {
            left,
            right,
            height: (t + 1) as f64,
        });
        pool.push(n + t);
    }
    MergeTree::new(labels.to_vec(), merges).unwrap()
}

/// One summated logratio per internal node of a random tree, sides
/// randomly swapped.
pub fn random_slr_groups(rng: &mut impl Rng, j: usize) -> Vec<SlrGroup> {
    let tree = random_tree(rng, &labels(j));
    let mut groups: Vec<SlrGroup> = tree
        .merges()
        .iter()
        .map(|m| {
            let (a, b) = (tree.members(m.left), tree.members(m.right));
            if rng.random_bool(0.5) {
                SlrGroup::new(a, b)
            } else {
                SlrGroup::new(b, a)
            }
        })
        .collect();
    groups.shuffle(rng);
    groups
}

/// `Σ_{j<k} w_j w_k Σ_i r_i (ln(x_ij/x_ik) − mean)²`, straight from the definition.
pub fn pairwise_total_variance(x: &DMatrix<f64>, r: &[f64], w: &[f64]) -> f64 {
    let (n, j) = x.shape();
    let mut total = 0.0;
    for a in 0..j {
        for b in a + 1..j {
            let lr: Vec<f64> = (0..n).map(|i| (x[(i, a)] / x[(i, b)]).ln()).collect();
            let mean: f64 = lr.iter().zip(r).map(|(v, ri)| v * ri).sum();
            let var: f64 = lr.iter().zip(r).map(|(v, ri)| ri * (v - mean).powi(2)).sum();
            total += w[a] * w[b] * var;
        }
    }
    total
}

/// Weighted centred logratios scaled by `√c_j`, so that Euclidean distance
/// between rows is the logratio distance.
pub fn scaled_clr(x: &DMatrix<f64>, c: &[f64]) -> DMatrix<f64> {
    let l = x.map(f64::ln);
    DMatrix::from_fn(l.nrows(), l.ncols(), |i, k| {
        let centre: f64 = (0..l.ncols()).map(|m| c[m] * l[(i, m)]).sum();
        c[k].sqrt() * (l[(i, k)] - centre)
    })
}

fn pick<T: Copy>(candidates: &[(f64, usize, usize, T)], scale: f64) -> (f64, T) {
    let best = candidates.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
    let tol = TIE_TOLERANCE * best.abs().max(1e-6 * scale);
    let chosen = candidates
        .iter()
        .filter(|c| c.0 <= best + tol)
        .min_by_key(|c| (c.1.min(c.2), c.1.max(c.2)))
        .unwrap();
    (chosen.0, chosen.3)
}

struct Group {
    node: usize,
    members: Vec<usize>,
}

fn merge_record(groups: &[Group], a: usize, b: usize, height: f64) -> Merge {
    let (l, r) = if groups[a].members[0] < groups[b].members[0] { (a, b) } else { (b, a) };
    Merge {
        left: groups[l].node,
        right: groups[r].node,
        height,
    }
}

fn join(groups: &mut Vec<Group>, a: usize, b: usize, node: usize) {
    let (lo, hi) = (a.min(b), a.max(b));
    let gone = groups.remove(hi);
    let kept = &mut groups[lo];
    kept.members.extend(gone.members);
    kept.members.sort_unstable();
    kept.node = node;
}

/// Greedy Ward oracle that recomputes every centroid cost from explicit
/// coordinates at each step.
pub fn ward_oracle(points: &DMatrix<f64>, masses: &[f64], labels: &[String]) -> MergeTree {
    let n = points.nrows();
    let centroid = |members: &[usize]| -> (f64, DVector<f64>) {
        let m: f64 = members.iter().map(|&i| masses[i]).sum();
        let mut c = DVector::zeros(points.ncols());
        for &i in members {
            c += points.row(i).transpose() * masses[i];
        }
        (m, c / m)
    };
    let cost = |a: &[usize], b: &[usize]| {
        let (ma, ca) = centroid(a);
        let (mb, cb) = centroid(b);
        ma * mb / (ma + mb) * (ca - cb).norm_squared()
    };
    let mut groups: Vec<Group> = (0..n).map(|i| Group { node: i, members: vec![i] }).collect();
    let mut scale: f64 = 0.0;
    for a in 0..n {
        for b in a + 1..n {
            scale = scale.max(cost(&[a], &[b]));
        }
    }
    let mut merges = Vec::new();
    let mut height = 0.0;
    for t in 0..n - 1 {
        let mut cands = Vec::new();
        for a in 0..groups.len() {
            for b in a + 1..groups.len() {
                let d = cost(&groups[a].members, &groups[b].members);
                cands.push((d, groups[a].members[0], groups[b].members[0], (a, b)));
            }
        }
        let (d, (a, b)) = pick(&cands, scale);
        height += d.max(0.0);
        merges.push(merge_record(&groups, a, b, height));
        join(&mut groups, a, b, n + t);
    }
    MergeTree::new(labels.to_vec(), merges).unwrap()
}

/// Greedy amalgamation oracle: every candidate matrix is built by summing
/// columns and scored with [`pairwise_total_variance`].
pub fn amalgamation_oracle(x: &DMatrix<f64>, r: &[f64], c: &[f64], weighted: bool, labels: &[String]) -> MergeTree {
    let j = x.ncols();
    let weights_of = |groups: &[Group]| -> Vec<f64> {
        if weighted {
            groups.iter().map(|g| g.members.iter().map(|&k| c[k]).sum()).collect()
        } else {
            vec![1.0 / groups.len() as f64; groups.len()]
        }
    };
    let matrix_of = |groups: &[Group]| -> DMatrix<f64> {
        DMatrix::from_fn(x.nrows(), groups.len(), |i, g| groups[g].members.iter().map(|&k| x[(i, k)]).sum())
    };
    let variance = |groups: &[Group]| pairwise_total_variance(&matrix_of(groups), r, &weights_of(groups));

    let mut groups: Vec<Group> = (0..j).map(|k| Group { node: k, members: vec![k] }).collect();
    let base = variance(&groups);
    let mut current = base;
    let mut merges = Vec::new();
    for t in 0..j - 1 {
        let mut cands = Vec::new();
        for a in 0..groups.len() {
            for b in a + 1..groups.len() {
                let mut trial: Vec<Group> = groups
                    .iter()
                    .map(|g| Group {
                        node: g.node,
                        members: g.members.clone(),
                    })
                    .collect();
                join(&mut trial, a, b, usize::MAX);
                let after = variance(&trial);
                cands.push((current - after, groups[a].members[0], groups[b].members[0], (a, b, after)));
            }
        }
        let (_, (a, b, after)) = pick(&cands, base);
        merges.push(merge_record(&groups, a, b, base - after));
        join(&mut groups, a, b, j + t);
        current = after;
    }
    MergeTree::new(labels.to_vec(), merges).unwrap()
}

/// Same merge order and nodes; heights within `tol`.
pub fn same_tree(a: &MergeTree, b: &MergeTree, tol: f64) -> bool {
    a.leaves() == b.leaves()
        && a.merges().len() == b.merges().len()
        && a.merges().iter().zip(b.merges()).all(|(p, q)| {
            p.left == q.left && p.right == q.right && (p.height - q.height).abs() <= tol * (1.0 + q.height.abs())
        })
}
