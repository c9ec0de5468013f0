//! Logratio pattern matrices.
//!
//! A pattern matrix `P` (R×J) maps a log-composition `log x` to a set of
//! logratios `P log x`; applied to an I×J log matrix `L` the logratios are
//! `L Pᵀ`. Every kind except [`PatternKind::Slr`] is a contrast: its rows sum
//! to zero. SLR patterns only mark numerator (+1) and denominator (−1) parts
//! of summated ratios and are not linear in the logs.
//!
//! PLR and ILR rows omit the usual normalising scalar, so these coordinates
//! are not isometric; the ratios they describe are the same.

use std::collections::HashSet;
use std::fmt;

use nalgebra::DMatrix;

use crate::composition::WeightVector;
use crate::error::{Error, Result};
use crate::tree::MergeTree;

/// Row-sum tolerance for contrast patterns.
pub const CONTRAST_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PatternKind {
    /// All J(J−1)/2 pairwise logratios.
    LrAll,
    Alr,
    Clr,
    Plr,
    Ilr,
    Dag,
    Slr,
}

impl PatternKind {
    pub fn is_linear(self) -> bool {
        self != PatternKind::Slr
    }
}

impl fmt::Display for PatternKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PatternKind::LrAll => "LR",
            PatternKind::Alr => "ALR",
            PatternKind::Clr => "CLR",
            PatternKind::Plr => "PLR",
            PatternKind::Ilr => "ILR",
            PatternKind::Dag => "DAG",
            PatternKind::Slr => "SLR",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternMatrix {
    coeffs: DMatrix<f64>,
    kind: PatternKind,
    col_labels: Vec<String>,
}

impl PatternMatrix {
    /// Wraps a coefficient matrix after checking the invariants of `kind`.
    pub fn new(coeffs: DMatrix<f64>, kind: PatternKind, col_labels: Vec<String>) -> Result<Self> {
        let (r, j) = coeffs.shape();
        if col_labels.len() != j {
            return Err(Error::ShapeMismatch(format!("{j} columns, {} labels", col_labels.len())));
        }
        if j < 2 {
            return Err(Error::JTooSmall(j));
        }
        let expected_rows = match kind {
            PatternKind::LrAll => j * (j - 1) / 2,
            PatternKind::Clr => j,
            _ => j - 1,
        };
        if r != expected_rows {
            return Err(Error::WrongPairCount {
                expected: expected_rows,
                got: r,
            });
        }
        if kind == PatternKind::Slr {
            check_slr(&coeffs)?;
        } else {
            for (k, row) in coeffs.row_iter().enumerate() {
                let s = row.sum();
                if s.abs() > CONTRAST_TOLERANCE {
                    return Err(Error::InvalidPattern(format!("row {k} sums to {s}")));
                }
            }
        }
        Ok(PatternMatrix {
            coeffs,
            kind,
            col_labels,
        })
    }

    pub fn coeffs(&self) -> &DMatrix<f64> {
        &self.coeffs
    }

    pub fn kind(&self) -> PatternKind {
        self.kind
    }

    pub fn col_labels(&self) -> &[String] {
        &self.col_labels
    }

    pub fn nrows(&self) -> usize {
        self.coeffs.nrows()
    }

    pub fn nparts(&self) -> usize {
        self.coeffs.ncols()
    }

    /// Numerator (positive) and denominator (negative) parts of row `k`.
    pub fn row_groups(&self, k: usize) -> (Vec<usize>, Vec<usize>) {
        let row = self.coeffs.row(k);
        let num = (0..self.nparts()).filter(|&j| row[j] > 0.0).collect();
        let den = (0..self.nparts()).filter(|&j| row[j] < 0.0).collect();
        (num, den)
    }

    /// Display name of every row, e.g. `ln(Health/Economy)`.
    ///
    /// Single parts are written bare; groups of two or more become
    /// `gm(...)` (weighted geometric mean) for linear kinds and `sum(...)` for
    /// SLR. A CLR row divides by the geometric mean of all parts.
    pub fn row_names(&self) -> Vec<String> {
        let all: Vec<usize> = (0..self.nparts()).collect();
        (0..self.nrows())
            .map(|k| {
                let (num, den) = self.row_groups(k);
                let den = if self.kind == PatternKind::Clr { all.clone() } else { den };
                format!("ln({}/{})", self.group_name(&num), self.group_name(&den))
            })
            .collect()
    }

    fn group_name(&self, parts: &[usize]) -> String {
        if parts.len() == 1 {
            return self.col_labels[parts[0]].clone();
        }
        let names: Vec<&str> = parts.iter().map(|&j| self.col_labels[j].as_str()).collect();
        let f = if self.kind == PatternKind::Slr { "sum" } else { "gm" };
        format!("{f}({})", names.join(","))
    }

    /// Removes one row; used for the CLR drop-one regression convention.
    pub(crate) fn without_row(&self, drop: usize) -> DMatrix<f64> {
        self.coeffs.clone().remove_row(drop)
    }
}

fn check_slr(coeffs: &DMatrix<f64>) -> Result<()> {
    for (k, row) in coeffs.row_iter().enumerate() {
        if row.iter().any(|&v| v != 0.0 && v != 1.0 && v != -1.0) {
            return Err(Error::InvalidPattern(format!("SLR row {k} has entries outside {{-1, 0, 1}}")));
        }
        if !row.iter().any(|&v| v > 0.0) || !row.iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidPattern(format!("SLR row {k} needs a numerator and a denominator")));
        }
    }
    for (j, col) in coeffs.column_iter().enumerate() {
        if col.iter().all(|&v| v == 0.0) {
            return Err(Error::PartUnused(j));
        }
    }
    Ok(())
}

fn check_parts(labels: &[String]) -> Result<usize> {
    let j = labels.len();
    if j < 2 {
        return Err(Error::JTooSmall(j));
    }
    Ok(j)
}

fn check_weights(c: &WeightVector, j: usize) -> Result<()> {
    c.expect_len(j, "parts")
}

/// All pairwise logratios, rows in lexicographic pair order (1,2),(1,3),…,(J−1,J).
pub fn lr_pattern(labels: &[String]) -> Result<PatternMatrix> {
    let j = check_parts(labels)?;
    let pairs = lexicographic_pairs(j);
    let mut coeffs = DMatrix::zeros(pairs.len(), j);
    for (r, &(a, b)) in pairs.iter().enumerate() {
        coeffs[(r, a)] = 1.0;
        coeffs[(r, b)] = -1.0;
    }
    PatternMatrix::new(coeffs, PatternKind::LrAll, labels.to_vec())
}

/// Index pairs `(j, k)`, `j < k`, in the row order of [`lr_pattern`].
pub fn lexicographic_pairs(j: usize) -> Vec<(usize, usize)> {
    (0..j).flat_map(|a| (a + 1..j).map(move |b| (a, b))).collect()
}

/// Additive logratios against `reference`; rows follow the original order
/// of the non-reference parts.
pub fn alr_pattern(labels: &[String], reference: usize) -> Result<PatternMatrix> {
    let j = check_parts(labels)?;
    if reference >= j {
        return Err(Error::BadIndex { index: reference, len: j });
    }
    let mut coeffs = DMatrix::zeros(j - 1, j);
    for (r, part) in (0..j).filter(|&p| p != reference).enumerate() {
        coeffs[(r, part)] = 1.0;
        coeffs[(r, reference)] = -1.0;
    }
    PatternMatrix::new(coeffs, PatternKind::Alr, labels.to_vec())
}

/// Weighted centred logratios: the centring matrix `I − 1cᵀ`.
pub fn clr_pattern(labels: &[String], c: &WeightVector) -> Result<PatternMatrix> {
    let j = check_parts(labels)?;
    check_weights(c, j)?;
    let coeffs = DMatrix::from_fn(j, j, |r, k| if r == k { 1.0 - c[k] } else { -c[k] });
    PatternMatrix::new(coeffs, PatternKind::Clr, labels.to_vec())
}

/// Pivot logratios for the part `order`: each part against the weighted
/// geometric mean of the parts after it.
pub fn plr_pattern(labels: &[String], c: &WeightVector, order: &[usize]) -> Result<PatternMatrix> {
    let j = check_parts(labels)?;
    check_weights(c, j)?;
    let mut seen = vec![false; j];
    if order.len() != j || order.iter().any(|&p| p >= j || std::mem::replace(&mut seen[p], true)) {
        return Err(Error::NotAPermutation);
    }
    let mut coeffs = DMatrix::zeros(j - 1, j);
    for k in 0..j - 1 {
        let tail = &order[k + 1..];
        let tail_weight: f64 = tail.iter().map(|&m| c[m]).sum();
        coeffs[(k, order[k])] = 1.0;
        for &m in tail {
            coeffs[(k, m)] = -c[m] / tail_weight;
        }
    }
    // The last row is a plain LR; pin it to exact ±1.
    coeffs[(j - 2, order[j - 1])] = -1.0;
    PatternMatrix::new(coeffs, PatternKind::Plr, labels.to_vec())
}

/// Balances defined by a binary tree over the parts.
///
/// Each internal node with left group A and right group B contributes a row
/// with `c_j / c_A` on A and `−c_j / c_B` on B. Rows are ordered by a
/// pre-order walk from the root, left subtree first. Tree leaves are matched
/// to `labels` by name.
pub fn ilr_pattern(labels: &[String], tree: &MergeTree, c: &WeightVector) -> Result<PatternMatrix> {
    let j = check_parts(labels)?;
    check_weights(c, j)?;
    let column_of = leaf_columns(labels, tree)?;
    let nodes = tree.internal_preorder();
    let mut coeffs = DMatrix::zeros(nodes.len(), j);
    for (r, &node) in nodes.iter().enumerate() {
        let (left, right) = tree.children(node).expect("internal node");
        for (side, sign) in [(left, 1.0), (right, -1.0)] {
            let cols: Vec<usize> = tree.members(side).into_iter().map(|leaf| column_of[leaf]).collect();
            if cols.len() == 1 {
                coeffs[(r, cols[0])] = sign;
                continue;
            }
            let total: f64 = cols.iter().map(|&k| c[k]).sum();
            for k in cols {
                coeffs[(r, k)] = sign * c[k] / total;
            }
        }
    }
    PatternMatrix::new(coeffs, PatternKind::Ilr, labels.to_vec())
}

fn leaf_columns(labels: &[String], tree: &MergeTree) -> Result<Vec<usize>> {
    if tree.n_leaves() != labels.len() {
        return Err(Error::TreeLeafMismatch(format!(
            "{} leaves for {} parts",
            tree.n_leaves(),
            labels.len()
        )));
    }
    tree.leaves()
        .iter()
        .map(|leaf| {
            labels
                .iter()
                .position(|l| l == leaf)
                .ok_or_else(|| Error::TreeLeafMismatch(format!("leaf `{leaf}` is not a part")))
        })
        .collect()
}

/// An ordered list of (numerator, denominator) part indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatioSpec {
    pairs: Vec<(usize, usize)>,
}

impl RatioSpec {
    pub fn new(pairs: Vec<(usize, usize)>, n_parts: usize) -> Result<Self> {
        for &(a, b) in &pairs {
            for idx in [a, b] {
                if idx >= n_parts {
                    return Err(Error::BadIndex { index: idx, len: n_parts });
                }
            }
            if a == b {
                return Err(Error::InvalidPattern(format!("ratio of part {a} with itself")));
            }
        }
        Ok(RatioSpec { pairs })
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// True when the undirected graph of the pairs is a spanning tree on `n_parts`.
    pub fn is_spanning_tree(&self, n_parts: usize) -> bool {
        if self.pairs.len() + 1 != n_parts {
            return false;
        }
        let mut parent: Vec<usize> = (0..n_parts).collect();
        fn find(parent: &mut [usize], mut v: usize) -> usize {
            while parent[v] != v {
                parent[v] = parent[parent[v]];
                v = parent[v];
            }
            v
        }
        for &(a, b) in &self.pairs {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra == rb {
                return false;
            }
            parent[ra] = rb;
        }
        // n−1 edges with no cycle connect all n vertices.
        true
    }

    /// Signed DAG rows whose sum is `ln(x_num / x_den)`, following the tree path.
    ///
    /// The path from a part to itself is the empty combination.
    pub fn path_combination(&self, num: usize, den: usize, n_parts: usize) -> Result<Vec<(usize, i8)>> {
        if num >= n_parts || den >= n_parts {
            return Err(Error::BadIndex {
                index: num.max(den),
                len: n_parts,
            });
        }
        // Edge list per part: (neighbour, row, sign of ln(x_part/x_neighbour) in that row).
        let mut adj: Vec<Vec<(usize, usize, i8)>> = vec![Vec::new(); n_parts];
        for (row, &(a, b)) in self.pairs.iter().enumerate() {
            adj[a].push((b, row, 1));
            adj[b].push((a, row, -1));
        }
        let mut prev: Vec<Option<(usize, usize, i8)>> = vec![None; n_parts];
        let mut visited = vec![false; n_parts];
        let mut queue = std::collections::VecDeque::from([num]);
        visited[num] = true;
        while let Some(v) = queue.pop_front() {
            for &(w, row, sign) in &adj[v] {
                if !visited[w] {
                    visited[w] = true;
                    prev[w] = Some((v, row, sign));
                    queue.push_back(w);
                }
            }
        }
        if !visited[den] {
            return Err(Error::PathNotFound);
        }
        let mut combo = Vec::new();
        let mut v = den;
        while let Some((u, row, sign)) = prev[v] {
            // Step u→v contributes ln(x_u/x_v) = sign · row.
            combo.push((row, sign));
            v = u;
        }
        combo.reverse();
        Ok(combo)
    }
}

/// Evaluates a signed combination of DAG rows and returns the single
/// pairwise logratio `(numerator, denominator)` it reduces to.
pub fn generated_lr(combination: &[(usize, i8)], spec: &RatioSpec, n_parts: usize) -> Result<(usize, usize)> {
    let mut row = vec![0i64; n_parts];
    for &(r, sign) in combination {
        let &(a, b) = spec.pairs().get(r).ok_or(Error::BadIndex {
            index: r,
            len: spec.pairs().len(),
        })?;
        row[a] += sign as i64;
        row[b] -= sign as i64;
    }
    let plus: Vec<usize> = (0..n_parts).filter(|&j| row[j] == 1).collect();
    let minus: Vec<usize> = (0..n_parts).filter(|&j| row[j] == -1).collect();
    let nonzero = row.iter().filter(|&&v| v != 0).count();
    match (plus.as_slice(), minus.as_slice(), nonzero) {
        ([p], [m], 2) => Ok((*p, *m)),
        _ => Err(Error::PathNotFound),
    }
}

/// Pattern of a spanning-tree set of pairwise logratios.
pub fn dag_pattern(labels: &[String], spec: &RatioSpec) -> Result<PatternMatrix> {
    let j = check_parts(labels)?;
    if spec.pairs().len() != j - 1 {
        return Err(Error::WrongPairCount {
            expected: j - 1,
            got: spec.pairs().len(),
        });
    }
    if spec.pairs().iter().any(|&(a, b)| a >= j || b >= j) {
        return Err(Error::NotSpanningTree);
    }
    if !spec.is_spanning_tree(j) {
        return Err(Error::NotSpanningTree);
    }
    let mut coeffs = DMatrix::zeros(j - 1, j);
    for (r, &(a, b)) in spec.pairs().iter().enumerate() {
        coeffs[(r, a)] = 1.0;
        coeffs[(r, b)] = -1.0;
    }
    PatternMatrix::new(coeffs, PatternKind::Dag, labels.to_vec())
}

/// A summated logratio: ln(Σ numerator parts / Σ denominator parts).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlrGroup {
    pub numerator: Vec<usize>,
    pub denominator: Vec<usize>,
}

impl SlrGroup {
    pub fn new(numerator: Vec<usize>, denominator: Vec<usize>) -> Self {
        SlrGroup { numerator, denominator }
    }
}

pub fn slr_pattern(labels: &[String], groups: &[SlrGroup]) -> Result<PatternMatrix> {
    let j = check_parts(labels)?;
    if groups.len() != j - 1 {
        return Err(Error::WrongPairCount {
            expected: j - 1,
            got: groups.len(),
        });
    }
    let mut coeffs = DMatrix::zeros(j - 1, j);
    for (r, g) in groups.iter().enumerate() {
        if g.numerator.is_empty() || g.denominator.is_empty() {
            return Err(Error::InvalidPattern(format!("SLR {r} has an empty group")));
        }
        let num: HashSet<usize> = g.numerator.iter().copied().collect();
        for &d in &g.denominator {
            if num.contains(&d) {
                return Err(Error::OverlappingGroups(d));
            }
        }
        for (&p, sign) in g.numerator.iter().map(|p| (p, 1.0)).chain(g.denominator.iter().map(|p| (p, -1.0))) {
            if p >= j {
                return Err(Error::BadIndex { index: p, len: j });
            }
            coeffs[(r, p)] = sign;
        }
    }
    if let Some(unused) = (0..j).find(|&k| coeffs.column(k).iter().all(|&v| v == 0.0)) {
        return Err(Error::PartUnused(unused));
    }
    PatternMatrix::new(coeffs, PatternKind::Slr, labels.to_vec())
}

/// `P_LRᵀ D_cc P_LR`, where `D_cc` holds `c_j c_k` over lexicographic pairs.
pub fn lr_gram(c: &WeightVector) -> DMatrix<f64> {
    let j = c.len();
    let mut out = DMatrix::zeros(j, j);
    for (a, b) in lexicographic_pairs(j) {
        let w = c[a] * c[b];
        out[(a, a)] += w;
        out[(b, b)] += w;
        out[(a, b)] -= w;
        out[(b, a)] -= w;
    }
    out
}
