//! Ward clustering on logratio distances and amalgamation clustering of parts.
//!
//! Both produce a [`MergeTree`] whose heights are cumulative costs, so they
//! never decrease along the merge list. Ties are resolved in favour of the
//! pair whose smallest member indices, ordered as `(min, max)`, are
//! lexicographically smallest; costs within [`TIE_TOLERANCE`] (relative) of
//! the minimum count as tied.

use nalgebra::DMatrix;

use crate::composition::{CompositionMatrix, WeightAxis, WeightVector};
use crate::error::{Error, Result};
use crate::geometry::{total_variance, DistanceMatrix};
use crate::tree::{Merge, MergeTree};

pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterInput {
    pub distances: DistanceMatrix,
    pub masses: WeightVector,
}

impl ClusterInput {
    pub fn new(distances: DistanceMatrix, masses: WeightVector) -> Result<Self> {
        masses.expect_len(distances.len(), "objects")?;
        if distances.values.nrows() != distances.len() || distances.values.ncols() != distances.len() {
            return Err(Error::ShapeMismatch("distance matrix is not square over its labels".into()));
        }
        Ok(ClusterInput { distances, masses })
    }
}

struct Cluster {
    node: usize,
    mass: f64,
    key: usize,
}

/// Picks the candidate with minimal cost under the tie rule. `candidates`
/// yields `(cost, key_a, key_b, payload)`.
pub(crate) fn pick_min<T>(candidates: Vec<(f64, usize, usize, T)>, scale: f64) -> Option<(f64, T)> {
    let best = candidates.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
    if !best.is_finite() {
        return None;
    }
    let tol = TIE_TOLERANCE * best.abs().max(1e-6 * scale);
    candidates
        .into_iter()
        .filter(|c| c.0 <= best + tol)
        .min_by_key(|c| (c.1.min(c.2), c.1.max(c.2)))
        .map(|c| (c.0, c.3))
}

/// Mass-weighted Ward clustering.
///
/// The merge cost of clusters A and B is `m_A m_B / (m_A + m_B) · d²(A, B)`
/// between centroids, kept up to date with the Lance–Williams recurrence.
/// With masses summing to one the final height equals the total inertia
/// `Σ_{i<j} m_i m_j d_ij²`.
pub fn ward_cluster(input: &ClusterInput) -> Result<MergeTree> {
    let n = input.distances.len();
    if n < 2 {
        return Err(Error::FewerThanTwoSamples);
    }
    let m = input.masses.as_slice();
    let d = &input.distances.values;
    let mut cost = DMatrix::from_fn(n, n, |a, b| m[a] * m[b] / (m[a] + m[b]) * d[(a, b)] * d[(a, b)]);
    let scale = cost.amax();
    let mut active: Vec<Option<Cluster>> = (0..n)
        .map(|i| {
            Some(Cluster {
                node: i,
                mass: m[i],
                key: i,
            })
        })
        .collect();
    let mut merges = Vec::with_capacity(n - 1);
    let mut height = 0.0;

    for step in 0..n - 1 {
        let mut candidates = Vec::new();
        for a in 0..n {
            let Some(ca) = &active[a] else { continue };
            for b in a + 1..n {
                let Some(cb) = &active[b] else { continue };
                candidates.push((cost[(a, b)], ca.key, cb.key, (a, b)));
            }
        }
        let (delta, (a, b)) = pick_min(candidates, scale).expect("at least two active clusters");
        let ca = active[a].take().expect("active");
        let cb = active[b].take().expect("active");
        let (first, second) = if ca.key <= cb.key { (&ca, &cb) } else { (&cb, &ca) };
        height += delta.max(0.0);
        merges.push(Merge {
            left: first.node,
            right: second.node,
            height,
        });
        let merged_mass = ca.mass + cb.mass;
        for k in 0..n {
            let Some(ck) = &active[k] else { continue };
            let mk = ck.mass;
            let updated = ((ca.mass + mk) * cost[(a, k)] + (cb.mass + mk) * cost[(b, k)] - mk * delta)
                / (merged_mass + mk);
            cost[(a, k)] = updated;
            cost[(k, a)] = updated;
        }
        active[a] = Some(Cluster {
            node: n + step,
            mass: merged_mass,
            key: ca.key.min(cb.key),
        });
    }
    MergeTree::new(input.distances.labels.clone(), merges)
}

/// Amalgamation clustering of the parts.
///
/// At each step every pair of current parts is tentatively summed into one
/// part and the pair whose amalgamation loses the least total logratio
/// variance is merged. In weighted mode the merged part carries the sum of
/// the two weights; unweighted mode uses `1/m` for the `m` current parts.
/// Heights are the cumulative variance lost, so the final height is the
/// total variance of `x`. An amalgamation can raise the weighted variance
/// (weight moves onto a part that varies more), so intermediate heights may
/// be negative and need not increase.
pub fn amalgamation_cluster(
    x: &CompositionMatrix,
    r: &WeightVector,
    c: &WeightVector,
    weighted: bool,
) -> Result<MergeTree> {
    let j = x.nparts();
    r.expect_len(x.nrows(), "samples")?;
    c.expect_len(j, "parts")?;
    let base = total_variance(x, r, &part_weights(c.as_slice(), weighted))?;

    // groups[g] = (node id, member parts, weight); columns of `values` follow groups.
    let mut groups: Vec<(usize, Vec<usize>, f64)> = (0..j).map(|k| (k, vec![k], c[k])).collect();
    let mut values = x.values().clone();
    let mut current = base;
    let mut merges = Vec::with_capacity(j - 1);

    for step in 0..j - 1 {
        let mut candidates = Vec::new();
        for a in 0..groups.len() {
            for b in a + 1..groups.len() {
                let (v, w) = amalgamate(&values, &groups, a, b);
                let after = variance_of(&v, &w, r, weighted)?;
                let key = |g: usize| groups[g].1[0];
                candidates.push((current - after, key(a), key(b), (a, b, after)));
            }
        }
        let (_, (a, b, after)) = pick_min(candidates, base).expect("at least two parts remain");
        let (v, w) = amalgamate(&values, &groups, a, b);
        let (left, right) = (groups[a].0, groups[b].0);
        merges.push(Merge {
            left,
            right,
            height: base - after,
        });
        let mut members = groups[a].1.clone();
        members.extend(&groups[b].1);
        members.sort_unstable();
        groups[a] = (j + step, members, groups[a].2 + groups[b].2);
        groups.remove(b);
        debug_assert_eq!(w.len(), groups.len());
        values = v;
        current = after;
    }
    MergeTree::new(x.col_labels().to_vec(), merges)
}

fn part_weights(c: &[f64], weighted: bool) -> WeightVector {
    if weighted {
        WeightVector::normalized(c, WeightAxis::Parts).expect("valid weights")
    } else {
        WeightVector::uniform(c.len(), WeightAxis::Parts)
    }
}

/// Columns `a` and `b` summed into column `a`, column `b` removed.
fn amalgamate(values: &DMatrix<f64>, groups: &[(usize, Vec<usize>, f64)], a: usize, b: usize) -> (DMatrix<f64>, Vec<f64>) {
    let mut v = values.clone();
    let summed = values.column(a) + values.column(b);
    v.set_column(a, &summed);
    let v = v.remove_column(b);
    let mut w: Vec<f64> = groups.iter().map(|g| g.2).collect();
    w[a] += w[b];
    w.remove(b);
    (v, w)
}

fn variance_of(values: &DMatrix<f64>, w: &[f64], r: &WeightVector, weighted: bool) -> Result<f64> {
    if values.ncols() < 2 {
        return Ok(0.0);
    }
    let labels: Vec<String> = (0..values.ncols()).map(|k| k.to_string()).collect();
    let rows: Vec<String> = (0..values.nrows()).map(|k| k.to_string()).collect();
    let x = CompositionMatrix::new(values.clone(), rows, labels)?;
    total_variance(&x, r, &part_weights(w, weighted))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreeFormat {
    /// `{"leaves": [...], "merges": [{left, right, height, members}]}`.
    MergeListJson,
    /// `((a,b):h1,c):h2;`
    Parenthesized,
}

pub fn tree_export(t: &MergeTree, format: TreeFormat) -> String {
    match format {
        TreeFormat::MergeListJson => t.to_json(),
        TreeFormat::Parenthesized => t.to_parenthesized(),
    }
}

pub fn tree_import(text: &str, format: TreeFormat) -> Result<MergeTree> {
    match format {
        TreeFormat::MergeListJson => MergeTree::from_json(text),
        TreeFormat::Parenthesized => MergeTree::from_parenthesized(text),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::logratio_distances;

    fn dist(values: &[&[f64]]) -> DistanceMatrix {
        let n = values.len();
        DistanceMatrix {
            values: DMatrix::from_fn(n, n, |a, b| values[a][b]),
            labels: (0..n).map(|i| format!("o{i}")).collect(),
        }
    }

    #[test]
    fn dominated_pair_merges_first() {
        let d = dist(&[&[0.0, 1.0, 10.0], &[1.0, 0.0, 10.0], &[10.0, 10.0, 0.0]]);
        let t = ward_cluster(&ClusterInput::new(d, WeightVector::uniform(3, WeightAxis::Samples)).unwrap()).unwrap();
        assert_eq!((t.merges()[0].left, t.merges()[0].right), (0, 1));
        assert!(t.heights_nondecreasing());
    }

    #[test]
    fn identical_rows_merge_at_zero() {
        let x = CompositionMatrix::from_rows(&[
            vec![0.2, 0.3, 0.5],
            vec![0.6, 0.3, 0.1],
            vec![0.2, 0.3, 0.5],
            vec![0.1, 0.1, 0.8],
        ])
        .unwrap();
        let c = WeightVector::uniform(3, WeightAxis::Parts);
        let d = logratio_distances(&x, &c, true).unwrap();
        let t = ward_cluster(&ClusterInput::new(d, WeightVector::uniform(4, WeightAxis::Samples)).unwrap()).unwrap();
        assert_eq!((t.merges()[0].left, t.merges()[0].right), (0, 2));
        assert_eq!(t.merges()[0].height, 0.0);
    }

    #[test]
    fn ward_final_height_is_total_variance() {
        let x = CompositionMatrix::from_rows(&[
            vec![0.1, 0.2, 0.3, 0.4],
            vec![0.25, 0.25, 0.4, 0.1],
            vec![0.6, 0.1, 0.2, 0.1],
            vec![0.05, 0.45, 0.3, 0.2],
            vec![0.3, 0.3, 0.3, 0.1],
        ])
        .unwrap();
        let r = WeightVector::normalized(&[1.0, 2.0, 1.0, 1.5, 0.5], WeightAxis::Samples).unwrap();
        let c = WeightVector::normalized(&[1.0, 2.0, 3.0, 1.0], WeightAxis::Parts).unwrap();
        let d = logratio_distances(&x, &c, true).unwrap();
        let t = ward_cluster(&ClusterInput::new(d, r.clone()).unwrap()).unwrap();
        let tv = total_variance(&x, &r, &c).unwrap();
        assert!((t.merges().last().unwrap().height - tv).abs() < 1e-9);
    }

    #[test]
    fn amalgamation_constant_rows_and_final_height() {
        let x = CompositionMatrix::from_rows(&vec![vec![0.1, 0.2, 0.3, 0.4]; 3]).unwrap();
        let r = WeightVector::uniform(3, WeightAxis::Samples);
        let c = WeightVector::uniform(4, WeightAxis::Parts);
        let t = amalgamation_cluster(&x, &r, &c, true).unwrap();
        assert!(t.merges().iter().all(|m| m.height.abs() < 1e-12));

        let x = CompositionMatrix::from_rows(&[
            vec![0.1, 0.2, 0.3, 0.4],
            vec![0.25, 0.25, 0.4, 0.1],
            vec![0.6, 0.1, 0.2, 0.1],
        ])
        .unwrap();
        let c = WeightVector::normalized(&[1.0, 2.0, 3.0, 1.0], WeightAxis::Parts).unwrap();
        for weighted in [true, false] {
            let t = amalgamation_cluster(&x, &r, &c, weighted).unwrap();
            let w = if weighted { c.clone() } else { WeightVector::uniform(4, WeightAxis::Parts) };
            let tv = total_variance(&x, &r, &w).unwrap();
            assert!((t.merges().last().unwrap().height - tv).abs() < 1e-9);
        }
    }

    #[test]
    fn three_part_amalgamation_exhaustive() {
        let x = CompositionMatrix::from_rows(&[
            vec![0.5, 0.3, 0.2],
            vec![0.2, 0.2, 0.6],
            vec![0.4, 0.45, 0.15],
            vec![0.1, 0.3, 0.6],
        ])
        .unwrap();
        let r = WeightVector::uniform(4, WeightAxis::Samples);
        let c = WeightVector::uniform(3, WeightAxis::Parts);
        let t = amalgamation_cluster(&x, &r, &c, false).unwrap();
        // Evaluate all three first merges directly: a two-part composition's
        // variance is (1/4) WVar(ln(s/rest)).
        let v = x.values();
        let two_part_var = |a: usize, b: usize, other: usize| {
            let lr: Vec<f64> = (0..4).map(|i| ((v[(i, a)] + v[(i, b)]) / v[(i, other)]).ln()).collect();
            let m = lr.iter().sum::<f64>() / 4.0;
            0.25 * lr.iter().map(|z| (z - m).powi(2)).sum::<f64>() / 4.0
        };
        let options = [((0, 1), two_part_var(0, 1, 2)), ((0, 2), two_part_var(0, 2, 1)), ((1, 2), two_part_var(1, 2, 0))];
        let best = options.iter().max_by(|p, q| p.1.total_cmp(&q.1)).unwrap();
        assert_eq!((t.merges()[0].left, t.merges()[0].right), best.0);
        let tv = total_variance(&x, &r, &c).unwrap();
        assert!((t.merges()[0].height - (tv - best.1)).abs() < 1e-12);
    }

    #[test]
    fn export_formats() {
        let d = dist(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let t = ward_cluster(&ClusterInput::new(d, WeightVector::uniform(2, WeightAxis::Samples)).unwrap()).unwrap();
        let json = tree_export(&t, TreeFormat::MergeListJson);
        assert_eq!(tree_import(&json, TreeFormat::MergeListJson).unwrap(), t);
        let nested = tree_export(&t, TreeFormat::Parenthesized);
        assert_eq!(nested, "(o0,o1):0.25;");
        assert_eq!(tree_import(&nested, TreeFormat::Parenthesized).unwrap(), t);
    }
}
