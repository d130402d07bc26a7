use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Result, RiskError};

/// Default cap on the number of levels of a generated binomial tree (2^22 leaves).
pub const DEFAULT_MAX_LEVELS: usize = 22;

/// Row sums and binomial parameters are checked to this tolerance.
pub const STOCHASTIC_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeKind {
    Binomial,
    Explicit,
}

/// Position of a node: level in `0..=N` and index within the level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId {
    pub level: usize,
    pub index: usize,
}

impl NodeId {
    pub fn new(level: usize, index: usize) -> Self {
        Self { level, index }
    }
}

#[derive(Debug, Clone)]
struct Level {
    /// Probability of the edge from the parent into each node (root: 1).
    edge_prob: Vec<f64>,
    parent: Vec<usize>,
    /// `child_offsets[i]..child_offsets[i + 1]` are the children of node `i` on the next level.
    child_offsets: Vec<usize>,
    /// `leaf_offsets[i]..leaf_offsets[i + 1]` are the leaves below node `i`.
    leaf_offsets: Vec<usize>,
    /// Brownian increment on the edge into each node, when the tree carries one.
    increment: Option<Vec<f64>>,
}

/// A finite filtered probability space: a rooted tree whose leaves are the
/// states of the world and whose levels are the information sets.
///
/// Children of the nodes of one level are laid out contiguously and in parent
/// order on the next level, so every subtree owns a contiguous range of leaves.
/// Binomial trees order each pair of children as (down, up).
#[derive(Debug, Clone)]
pub struct ScenarioTree {
    kind: TreeKind,
    dt: f64,
    levels: Vec<Level>,
}

impl ScenarioTree {
    /// Non-recombining binary tree with `n` steps over horizon `horizon`.
    pub fn binomial(n: usize, horizon: f64) -> Result<Self> {
        Self::binomial_with_cap(n, horizon, DEFAULT_MAX_LEVELS)
    }

    pub fn binomial_with_cap(n: usize, horizon: f64, cap: usize) -> Result<Self> {
        if n == 0 {
            return Err(RiskError::InvalidInput("binomial tree needs at least one step".into()));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(RiskError::InvalidInput(format!("horizon must be positive, got {horizon}")));
        }
        if n > cap {
            return Err(RiskError::Size { levels: n, cap });
        }
        let dt = horizon / n as f64;
        let sq = dt.sqrt();
        let rows: Vec<Vec<Vec<f64>>> = (0..n).map(|l| vec![vec![0.5, 0.5]; 1 << l]).collect();
        let mut tree = Self::assemble(TreeKind::Binomial, dt, &rows)?;
        for l in 1..=n {
            let incs = (0..(1usize << l))
                .map(|i| if i % 2 == 0 { -sq } else { sq })
                .collect();
            tree.levels[l].increment = Some(incs);
        }
        tree.levels[0].increment = Some(vec![0.0]);
        Ok(tree)
    }

    /// Explicit tree from per-level, per-node transition rows. Row `rows[l][i]`
    /// holds the probabilities of the children of node `(l, i)`; children are
    /// numbered consecutively on level `l + 1`.
    pub fn from_transitions(dt: f64, rows: &[Vec<Vec<f64>>]) -> Result<Self> {
        Self::assemble(TreeKind::Explicit, dt, rows)
    }

    /// Explicit tree with per-edge increments (`increments[l]` is indexed by the
    /// nodes of level `l + 1`).
    pub fn from_transitions_with_increments(
        dt: f64,
        rows: &[Vec<Vec<f64>>],
        increments: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let mut tree = Self::assemble(TreeKind::Explicit, dt, rows)?;
        if increments.len() != tree.depth() {
            return Err(RiskError::InvalidTree("increment levels do not match tree depth".into()));
        }
        for (l, inc) in increments.into_iter().enumerate() {
            if inc.len() != tree.node_count(l + 1) {
                return Err(RiskError::InvalidTree(format!("increment count mismatch on level {}", l + 1)));
            }
            if inc.iter().any(|v| !v.is_finite()) {
                return Err(RiskError::InvalidTree("non-finite increment".into()));
            }
            tree.levels[l + 1].increment = Some(inc);
        }
        tree.levels[0].increment = Some(vec![0.0]);
        Ok(tree)
    }

    fn assemble(kind: TreeKind, dt: f64, rows: &[Vec<Vec<f64>>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(RiskError::InvalidTree("tree needs at least one level of transitions".into()));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(RiskError::InvalidTree(format!("dt must be positive, got {dt}")));
        }
        if rows[0].len() != 1 {
            return Err(RiskError::InvalidTree("exactly one root required".into()));
        }
        let n = rows.len();
        let mut levels = Vec::with_capacity(n + 1);
        levels.push(Level {
            edge_prob: vec![1.0],
            parent: vec![0],
            child_offsets: Vec::new(),
            leaf_offsets: Vec::new(),
            increment: None,
        });
        for (l, level_rows) in rows.iter().enumerate() {
            if level_rows.len() != levels[l].edge_prob.len() {
                return Err(RiskError::InvalidTree(format!(
                    "level {l} has {} rows but {} nodes",
                    level_rows.len(),
                    levels[l].edge_prob.len()
                )));
            }
            let mut offsets = Vec::with_capacity(level_rows.len() + 1);
            let mut edge_prob = Vec::new();
            let mut parent = Vec::new();
            offsets.push(0);
            for (i, row) in level_rows.iter().enumerate() {
                check_row(row, l, i)?;
                if kind == TreeKind::Binomial && (row.len() != 2 || row.iter().any(|&p| (p - 0.5).abs() > STOCHASTIC_TOL)) {
                    return Err(RiskError::InvalidTree(format!("binomial node ({l}, {i}) must have (1/2, 1/2) transitions")));
                }
                edge_prob.extend_from_slice(row);
                parent.extend(std::iter::repeat_n(i, row.len()));
                offsets.push(edge_prob.len());
            }
            levels[l].child_offsets = offsets;
            levels.push(Level {
                edge_prob,
                parent,
                child_offsets: Vec::new(),
                leaf_offsets: Vec::new(),
                increment: None,
            });
        }
        // leaves own themselves; parents take the union of their children's ranges
        let leaf_count = levels[n].edge_prob.len();
        levels[n].leaf_offsets = (0..=leaf_count).collect();
        levels[n].child_offsets = vec![0; leaf_count + 1];
        for l in (0..n).rev() {
            let below = &levels[l + 1].leaf_offsets;
            let offs: Vec<usize> = levels[l].child_offsets.iter().map(|&c| below[c]).collect();
            levels[l].leaf_offsets = offs;
        }
        Ok(Self { kind, dt, levels })
    }

    pub fn kind(&self) -> TreeKind {
        self.kind
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Number of periods N; levels are `0..=N`.
    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn time(&self, level: usize) -> f64 {
        level as f64 * self.dt
    }

    pub fn horizon(&self) -> f64 {
        self.time(self.depth())
    }

    pub fn node_count(&self, level: usize) -> usize {
        self.levels[level].edge_prob.len()
    }

    pub fn total_nodes(&self) -> usize {
        self.levels.iter().map(|l| l.edge_prob.len()).sum()
    }

    pub fn leaf_count(&self) -> usize {
        self.node_count(self.depth())
    }

    pub fn check_level(&self, level: usize) -> Result<()> {
        if level > self.depth() {
            Err(RiskError::LevelOutOfRange { level, max: self.depth() })
        } else {
            Ok(())
        }
    }

    pub fn is_leaf(&self, node: NodeId) -> bool {
        node.level == self.depth()
    }

    /// Children of `(level, index)` as indices on `level + 1`.
    pub fn children(&self, level: usize, index: usize) -> Range<usize> {
        let offs = &self.levels[level].child_offsets;
        offs[index]..offs[index + 1]
    }

    /// Reference transition probabilities out of `(level, index)`.
    pub fn transition_probs(&self, level: usize, index: usize) -> &[f64] {
        &self.levels[level + 1].edge_prob[self.children(level, index)]
    }

    /// Reference probability of the edge from the parent into `(level, index)`.
    pub fn edge_prob(&self, level: usize, index: usize) -> f64 {
        self.levels[level].edge_prob[index]
    }

    pub fn parent(&self, level: usize, index: usize) -> Option<usize> {
        (level > 0).then(|| self.levels[level].parent[index])
    }

    /// Leaves below `(level, index)`.
    pub fn leaf_range(&self, level: usize, index: usize) -> Range<usize> {
        let offs = &self.levels[level].leaf_offsets;
        offs[index]..offs[index + 1]
    }

    /// Index on `level` of the ancestor of leaf `leaf`.
    pub fn ancestor_of_leaf(&self, leaf: usize, level: usize) -> usize {
        let offs = &self.levels[level].leaf_offsets;
        offs.partition_point(|&o| o <= leaf) - 1
    }

    /// Brownian increment on the edge into `(level, index)`, if the tree carries increments.
    pub fn increment(&self, level: usize, index: usize) -> Option<f64> {
        self.levels[level].increment.as_ref().map(|v| v[index])
    }

    pub fn has_increments(&self) -> bool {
        self.levels.iter().all(|l| l.increment.is_some())
    }

    /// Driver path `B_0 = 0, B_1, ..., B_N` ending at `leaf`.
    pub fn path_values(&self, leaf: usize) -> Option<Vec<f64>> {
        let n = self.depth();
        let mut incs = Vec::with_capacity(n);
        let mut idx = leaf;
        for l in (1..=n).rev() {
            incs.push(self.increment(l, idx)?);
            idx = self.levels[l].parent[idx];
        }
        let mut path = Vec::with_capacity(n + 1);
        let mut acc = 0.0;
        path.push(acc);
        for inc in incs.into_iter().rev() {
            acc += inc;
            path.push(acc);
        }
        Some(path)
    }

    /// Reference probability of every leaf.
    pub fn leaf_probabilities(&self) -> Vec<f64> {
        let mut probs = vec![1.0];
        for l in 0..self.depth() {
            let mut next = vec![0.0; self.node_count(l + 1)];
            for (i, &p) in probs.iter().enumerate() {
                for c in self.children(l, i) {
                    next[c] = p * self.levels[l + 1].edge_prob[c];
                }
            }
            probs = next;
        }
        probs
    }

    pub fn to_document(&self) -> TreeDocument {
        let mut nodes = Vec::with_capacity(self.total_nodes());
        for (l, level) in self.levels.iter().enumerate() {
            for i in 0..level.edge_prob.len() {
                let (children, probs) = if l < self.depth() {
                    (self.children(l, i).collect(), self.transition_probs(l, i).to_vec())
                } else {
                    (Vec::new(), Vec::new())
                };
                nodes.push(NodeRecord {
                    level: l,
                    index: i,
                    children,
                    probs,
                    increment: if l == 0 { None } else { self.increment(l, i) },
                });
            }
        }
        TreeDocument { kind: self.kind, n: self.depth(), dt: self.dt, nodes }
    }

    pub fn from_document(doc: &TreeDocument) -> Result<Self> {
        let n = doc.n;
        if n == 0 {
            return Err(RiskError::InvalidTree("N must be at least 1".into()));
        }
        let mut per_level: Vec<Vec<Option<&NodeRecord>>> = Vec::new();
        for rec in &doc.nodes {
            if rec.level > n {
                return Err(RiskError::InvalidTree(format!("node ({}, {}) beyond level N={n}", rec.level, rec.index)));
            }
            if per_level.len() <= n {
                per_level.resize_with(n + 1, Vec::new);
            }
            let lv = &mut per_level[rec.level];
            if lv.len() <= rec.index {
                lv.resize(rec.index + 1, None);
            }
            if lv[rec.index].is_some() {
                return Err(RiskError::InvalidTree(format!("duplicate node ({}, {})", rec.level, rec.index)));
            }
            lv[rec.index] = Some(rec);
        }
        if per_level.len() != n + 1 {
            return Err(RiskError::InvalidTree("missing levels".into()));
        }
        let mut rows = Vec::with_capacity(n);
        let mut increments: Vec<Vec<f64>> = Vec::with_capacity(n);
        let mut all_increments = true;
        for (l, lv) in per_level.iter().enumerate() {
            let recs: Vec<&NodeRecord> = lv
                .iter()
                .enumerate()
                .map(|(i, r)| r.ok_or_else(|| RiskError::InvalidTree(format!("missing node ({l}, {i})"))))
                .collect::<Result<_>>()?;
            if l > 0 {
                let incs: Option<Vec<f64>> = recs.iter().map(|r| r.increment).collect();
                match incs {
                    Some(v) => increments.push(v),
                    None => all_increments = false,
                }
            }
            if l == n {
                if let Some(r) = recs.iter().find(|r| !r.children.is_empty()) {
                    return Err(RiskError::InvalidTree(format!("leaf ({l}, {}) has children", r.index)));
                }
                continue;
            }
            let mut expected = 0;
            let mut level_rows = Vec::with_capacity(recs.len());
            for r in recs {
                if r.children.is_empty() {
                    return Err(RiskError::InvalidTree(format!("non-leaf node ({l}, {}) has no children", r.index)));
                }
                if r.children.len() != r.probs.len() {
                    return Err(RiskError::InvalidTree(format!("node ({l}, {}) children/probs length mismatch", r.index)));
                }
                for &c in &r.children {
                    if c != expected {
                        return Err(RiskError::InvalidTree(format!(
                            "node ({l}, {}) lists child {c}; children must be numbered consecutively in parent order (expected {expected})",
                            r.index
                        )));
                    }
                    expected += 1;
                }
                level_rows.push(r.probs.clone());
            }
            if expected != per_level[l + 1].len() {
                return Err(RiskError::InvalidTree(format!("level {} has nodes without a parent", l + 1)));
            }
            rows.push(level_rows);
        }
        let tree = if all_increments {
            let mut t = Self::from_transitions_with_increments(doc.dt, &rows, increments)?;
            t.kind = doc.kind;
            t
        } else {
            let mut t = Self::from_transitions(doc.dt, &rows)?;
            t.kind = doc.kind;
            t
        };
        if tree.kind == TreeKind::Binomial {
            tree.check_binomial()?;
        }
        Ok(tree)
    }

    fn check_binomial(&self) -> Result<()> {
        let sq = self.dt.sqrt();
        for l in 0..self.depth() {
            for i in 0..self.node_count(l) {
                let probs = self.transition_probs(l, i);
                if probs.len() != 2 || probs.iter().any(|&p| (p - 0.5).abs() > STOCHASTIC_TOL) {
                    return Err(RiskError::InvalidTree(format!("binomial node ({l}, {i}) must have (1/2, 1/2) transitions")));
                }
                let ch = self.children(l, i);
                let down = self.increment(l + 1, ch.start);
                let up = self.increment(l + 1, ch.start + 1);
                match (down, up) {
                    (Some(d), Some(u)) if (d + sq).abs() <= STOCHASTIC_TOL && (u - sq).abs() <= STOCHASTIC_TOL => {}
                    _ => {
                        return Err(RiskError::InvalidTree(format!(
                            "binomial node ({l}, {i}) must have increments (-sqrt(dt), +sqrt(dt))"
                        )))
                    }
                }
            }
        }
        Ok(())
    }
}

fn check_row(row: &[f64], level: usize, index: usize) -> Result<()> {
    if row.is_empty() {
        return Err(RiskError::InvalidTree(format!("node ({level}, {index}) has no children")));
    }
    if row.iter().any(|&p| !(p.is_finite() && p > 0.0)) {
        return Err(RiskError::InvalidTree(format!("node ({level}, {index}) has a non-positive transition probability")));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > STOCHASTIC_TOL {
        return Err(RiskError::InvalidTree(format!("transitions of node ({level}, {index}) sum to {sum}")));
    }
    Ok(())
}

/// JSON form of a tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeDocument {
    pub kind: TreeKind,
    #[serde(rename = "N")]
    pub n: usize,
    pub dt: f64,
    pub nodes: Vec<NodeRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeRecord {
    pub level: usize,
    pub index: usize,
    #[serde(default)]
    pub children: Vec<usize>,
    #[serde(default)]
    pub probs: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub increment: Option<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_step_binomial() {
        let t = ScenarioTree::binomial(1, 1.0).unwrap();
        assert_eq!(t.node_count(0), 1);
        assert_eq!(t.leaf_count(), 2);
        assert_eq!(t.increment(1, 0), Some(-1.0));
        assert_eq!(t.increment(1, 1), Some(1.0));
    }

    #[test]
    fn two_step_binomial() {
        let t = ScenarioTree::binomial(2, 1.0).unwrap();
        assert_eq!(t.leaf_count(), 4);
        assert_eq!(t.dt(), 0.5);
        assert_eq!(t.leaf_range(1, 1), 2..4);
        assert_eq!(t.ancestor_of_leaf(3, 1), 1);
        assert_eq!(t.ancestor_of_leaf(1, 1), 0);
    }

    #[test]
    fn ten_step_paths_enumerate() {
        let t = ScenarioTree::binomial(10, 1.0).unwrap();
        assert_eq!(t.leaf_count(), 1024);
        let sq = 0.1f64.sqrt();
        let total: f64 = t.leaf_probabilities().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        for leaf in 0..1024 {
            // bit k of the leaf index (from the top) is the k-th move
            let expected: f64 = (0..10)
                .map(|k| if (leaf >> (9 - k)) & 1 == 1 { sq } else { -sq })
                .sum();
            let path = t.path_values(leaf).unwrap();
            assert!((path[10] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn size_cap() {
        assert!(matches!(ScenarioTree::binomial(23, 1.0), Err(RiskError::Size { .. })));
        assert!(matches!(ScenarioTree::binomial_with_cap(5, 1.0, 4), Err(RiskError::Size { .. })));
    }

    #[test]
    fn rejects_bad_rows() {
        assert!(ScenarioTree::from_transitions(1.0, &[vec![vec![0.5, 0.6]]]).is_err());
        assert!(ScenarioTree::from_transitions(1.0, &[vec![vec![1.0, 0.0]]]).is_err());
        assert!(ScenarioTree::from_transitions(1.0, &[vec![vec![0.5, 0.5], vec![1.0]]]).is_err());
    }

    #[test]
    fn document_round_trip() {
        let t = ScenarioTree::from_transitions(0.5, &[vec![vec![0.25, 0.75]], vec![vec![1.0], vec![0.2, 0.3, 0.5]]]).unwrap();
        let doc = t.to_document();
        let back = ScenarioTree::from_document(&doc).unwrap();
        assert_eq!(back.to_document(), doc);
        assert_eq!(back.leaf_range(1, 1), 1..4);

        let b = ScenarioTree::binomial(3, 0.3).unwrap();
        let json = serde_json::to_string(&b.to_document()).unwrap();
        let parsed: TreeDocument = serde_json::from_str(&json).unwrap();
        let b2 = ScenarioTree::from_document(&parsed).unwrap();
        assert_eq!(b2.kind(), TreeKind::Binomial);
        assert_eq!(b2.path_values(5), b.path_values(5));
    }

    #[test]
    fn document_rejects_out_of_order_children() {
        let mut doc = ScenarioTree::binomial(2, 1.0).unwrap().to_document();
        // swap the child lists of the two level-1 nodes
        let a = doc.nodes[1].children.clone();
        doc.nodes[1].children = doc.nodes[2].children.clone();
        doc.nodes[2].children = a;
        assert!(ScenarioTree::from_document(&doc).is_err());
    }
}
