//! Binary merge trees (dendrograms).
//!
//! Leaves are numbered `0..n` and the internal node created by merge `t` is
//! numbered `n + t`, so a merge can only refer to leaves or to earlier merges.
//! The same type defines ILR balances and carries clustering output.

use std::collections::{BTreeSet, BinaryHeap, HashSet};
use std::cmp::Reverse;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MergeTree {
    leaves: Vec<String>,
    merges: Vec<Merge>,
}

impl MergeTree {
    pub fn new(leaves: Vec<String>, merges: Vec<Merge>) -> Result<Self> {
        let n = leaves.len();
        if n < 2 {
            return Err(Error::InvalidTree("a tree needs at least two leaves".into()));
        }
        let mut seen = HashSet::new();
        for l in &leaves {
            if !seen.insert(l.as_str()) {
                return Err(Error::DuplicateLabel(l.clone()));
            }
        }
        if merges.len() != n - 1 {
            return Err(Error::InvalidTree(format!(
                "{} merges for {n} leaves (expected {})",
                merges.len(),
                n - 1
            )));
        }
        let mut used = vec![false; 2 * n - 1];
        for (t, m) in merges.iter().enumerate() {
            for child in [m.left, m.right] {
                if child >= n + t {
                    return Err(Error::InvalidTree(format!(
                        "merge {t} refers to node {child} before it exists"
                    )));
                }
                if used[child] {
                    return Err(Error::InvalidTree(format!("node {child} is merged twice")));
                }
                used[child] = true;
            }
            if m.left == m.right {
                return Err(Error::InvalidTree(format!("merge {t} joins a node with itself")));
            }
            if !(m.height.is_finite()) {
                return Err(Error::InvalidTree(format!("merge {t} has a non-finite height")));
            }
        }
        Ok(MergeTree { leaves, merges })
    }

    pub fn leaves(&self) -> &[String] {
        &self.leaves
    }

    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    pub fn n_leaves(&self) -> usize {
        self.leaves.len()
    }

    pub fn root(&self) -> usize {
        2 * self.n_leaves() - 2
    }

    pub fn is_leaf(&self, node: usize) -> bool {
        node < self.n_leaves()
    }

    /// Children of an internal node.
    pub fn children(&self, node: usize) -> Option<(usize, usize)> {
        node.checked_sub(self.n_leaves())
            .and_then(|t| self.merges.get(t))
            .map(|m| (m.left, m.right))
    }

    /// Leaf indices under `node`, left to right.
    pub fn members(&self, node: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![node];
        while let Some(v) = stack.pop() {
            match self.children(v) {
                Some((l, r)) => {
                    stack.push(r);
                    stack.push(l);
                }
                None => out.push(v),
            }
        }
        out
    }

    /// Internal nodes in pre-order (root first, left subtree before right).
    pub fn internal_preorder(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![self.root()];
        while let Some(v) = stack.pop() {
            if let Some((l, r)) = self.children(v) {
                out.push(v);
                stack.push(r);
                stack.push(l);
            }
        }
        out
    }

    pub fn heights_nondecreasing(&self) -> bool {
        self.merges.windows(2).all(|w| w[0].height <= w[1].height)
    }

    /// Every cluster as (member labels, height); independent of merge numbering.
    pub fn clusters(&self) -> BTreeSet<(BTreeSet<String>, u64)> {
        let n = self.n_leaves();
        self.merges
            .iter()
            .enumerate()
            .map(|(t, m)| {
                let members = self
                    .members(n + t)
                    .into_iter()
                    .map(|i| self.leaves[i].clone())
                    .collect();
                (members, m.height.to_bits())
            })
            .collect()
    }

    /// Merge-list JSON: `{"leaves": [...], "merges": [{left, right, height, members}]}`.
    pub fn to_json(&self) -> String {
        let n = self.n_leaves();
        let doc = TreeDoc {
            leaves: self.leaves.clone(),
            merges: self
                .merges
                .iter()
                .enumerate()
                .map(|(t, m)| MergeRecord {
                    left: m.left,
                    right: m.right,
                    height: m.height,
                    members: self.members(n + t).into_iter().map(|i| self.leaves[i].clone()).collect(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("tree serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: TreeDoc = serde_json::from_str(text).map_err(|e| Error::InvalidTree(e.to_string()))?;
        let merges = doc
            .merges
            .iter()
            .map(|r| Merge {
                left: r.left,
                right: r.right,
                height: r.height,
            })
            .collect();
        let tree = MergeTree::new(doc.leaves, merges)?;
        let n = tree.n_leaves();
        for (t, r) in doc.merges.iter().enumerate() {
            let expect: Vec<&String> = tree.members(n + t).into_iter().map(|i| &tree.leaves[i]).collect();
            if !r.members.is_empty() && r.members.iter().collect::<Vec<_>>() != expect {
                return Err(Error::InvalidTree(format!("members of merge {t} disagree with its children")));
            }
        }
        Ok(tree)
    }

    /// Nested form, e.g. `((a,b):0.5,c):1.25;`. Internal nodes carry their height.
    pub fn to_parenthesized(&self) -> String {
        fn write(tree: &MergeTree, node: usize, out: &mut String) {
            match tree.children(node) {
                None => out.push_str(&tree.leaves[node]),
                Some((l, r)) => {
                    out.push('(');
                    write(tree, l, out);
                    out.push(',');
                    write(tree, r, out);
                    out.push_str("):");
                    let h = tree.merges[node - tree.n_leaves()].height;
                    out.push_str(&format!("{h:?}"));
                }
            }
        }
        let mut out = String::new();
        write(self, self.root(), &mut out);
        out.push(';');
        out
    }

    /// Parses the nested form. Heights are optional (default 0).
    ///
    /// Merge order is reconstructed by emitting, among the nodes whose children
    /// are already placed, the lowest one first (ties in left-to-right
    /// post-order), so trees with nondecreasing heights come back unchanged up
    /// to the numbering of equal-height merges.
    pub fn from_parenthesized(text: &str) -> Result<Self> {
        let mut parser = NestedParser {
            chars: text.trim().trim_end_matches(';').chars().collect(),
            pos: 0,
            leaves: Vec::new(),
            internal: Vec::new(),
        };
        let root = parser.node()?;
        parser.skip_ws();
        if parser.pos != parser.chars.len() {
            return Err(Error::InvalidTree(format!("trailing input at offset {}", parser.pos)));
        }
        if matches!(root, NestedRef::Leaf(_)) {
            return Err(Error::InvalidTree("a tree needs at least two leaves".into()));
        }
        let n = parser.leaves.len();
        let internal = parser.internal;
        // parents[i] for internal node i in post-order numbering.
        let mut pending: Vec<usize> = internal
            .iter()
            .map(|(l, r, _)| [l, r].iter().filter(|c| matches!(c, NestedRef::Internal(_))).count())
            .collect();
        let mut parent = vec![None; internal.len()];
        for (i, (l, r, _)) in internal.iter().enumerate() {
            for c in [l, r] {
                if let NestedRef::Internal(k) = c {
                    parent[*k] = Some(i);
                }
            }
        }
        let mut heap = BinaryHeap::new();
        for (i, p) in pending.iter().enumerate() {
            if *p == 0 {
                heap.push(Reverse((internal[i].2.to_bits_ordered(), i)));
            }
        }
        let mut id = vec![0usize; internal.len()];
        let mut merges = Vec::with_capacity(internal.len());
        while let Some(Reverse((_, i))) = heap.pop() {
            let resolve = |c: &NestedRef| match c {
                NestedRef::Leaf(k) => *k,
                NestedRef::Internal(k) => id[*k],
            };
            let (l, r, h) = &internal[i];
            merges.push(Merge {
                left: resolve(l),
                right: resolve(r),
                height: *h,
            });
            id[i] = n + merges.len() - 1;
            if let Some(p) = parent[i] {
                pending[p] -= 1;
                if pending[p] == 0 {
                    heap.push(Reverse((internal[p].2.to_bits_ordered(), p)));
                }
            }
        }
        MergeTree::new(parser.leaves, merges)
    }
}

trait OrderedBits {
    fn to_bits_ordered(self) -> i64;
}

impl OrderedBits for f64 {
    // Total order on finite floats as integers.
    fn to_bits_ordered(self) -> i64 {
        let b = self.to_bits() as i64;
        if b < 0 {
            b ^ i64::MAX
        } else {
            b
        }
    }
}

#[derive(Serialize, Deserialize)]
struct TreeDoc {
    leaves: Vec<String>,
    merges: Vec<MergeRecord>,
}

#[derive(Serialize, Deserialize)]
struct MergeRecord {
    left: usize,
    right: usize,
    height: f64,
    #[serde(default)]
    members: Vec<String>,
}

enum NestedRef {
    Leaf(usize),
    Internal(usize),
}

struct NestedParser {
    chars: Vec<char>,
    pos: usize,
    leaves: Vec<String>,
    internal: Vec<(NestedRef, NestedRef, f64)>,
}

impl NestedParser {
    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(Error::InvalidTree(format!("expected `{c}` at offset {}", self.pos)))
        }
    }

    fn token(&mut self) -> String {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.chars.len() && !"(),:;".contains(self.chars[self.pos]) {
            self.pos += 1;
        }
        self.chars[start..self.pos].iter().collect::<String>().trim().to_string()
    }

    fn node(&mut self) -> Result<NestedRef> {
        if self.peek() == Some('(') {
            self.pos += 1;
            let left = self.node()?;
            self.expect(',')?;
            let right = self.node()?;
            self.expect(')')?;
            let mut height = 0.0;
            if self.peek() == Some(':') {
                self.pos += 1;
                let tok = self.token();
                height = tok
                    .parse()
                    .map_err(|_| Error::InvalidTree(format!("bad height `{tok}`")))?;
            }
            self.internal.push((left, right, height));
            Ok(NestedRef::Internal(self.internal.len() - 1))
        } else {
            let label = self.token();
            if label.is_empty() {
                return Err(Error::InvalidTree(format!("empty label at offset {}", self.pos)));
            }
            if self.peek() == Some(':') {
                // Leaf branch lengths are accepted and ignored.
                self.pos += 1;
                self.token();
            }
            self.leaves.push(label);
            Ok(NestedRef::Leaf(self.leaves.len() - 1))
        }
    }
}
