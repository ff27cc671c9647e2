//! Finite weighted rooted trees, boundary antichains and measures on them.
//!
//! A [`WeightedTree`] is immutable after construction; re-weightings share
//! the topology through an `Arc`, so tree values can be handed freely to
//! concurrent evaluators.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Opaque index of a node inside one tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub(crate) u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Conjugate exponent p' = p/(p-1). Errors unless p > 1.
pub fn conjugate(p: f64) -> Result<f64> {
    if p <= 1.0 || !p.is_finite() {
        return Err(Error::InvalidExponent(p));
    }
    Ok(p / (p - 1.0))
}

/// Weight assignment rule for generated trees.
#[derive(Debug, Clone, Copy)]
pub enum WeightRule {
    /// pi(v) = c at every node.
    Constant(f64),
    /// pi(v) = base^depth(v).
    DepthPower(f64),
}

impl WeightRule {
    fn weight(&self, depth: u32) -> f64 {
        match *self {
            WeightRule::Constant(c) => c,
            WeightRule::DepthPower(b) => b.powi(depth as i32),
        }
    }
}

/// One record of the explicit / file tree representation.
#[derive(Debug, Clone)]
pub struct TreeRecord {
    pub id: u64,
    /// `None` marks the root.
    pub parent: Option<u64>,
    pub weight: f64,
}

/// Construction recipes accepted by [`WeightedTree::build`].
#[derive(Debug, Clone)]
pub enum TreeSpec {
    /// Every node above the leaf level has exactly `branching` children.
    Homogeneous {
        branching: u32,
        height: u32,
        weight: WeightRule,
        delta: Option<f64>,
    },
    /// A path of `height` edges.
    Chain { height: u32, weight: WeightRule },
    Explicit {
        records: Vec<TreeRecord>,
        delta: Option<f64>,
    },
}

#[derive(Debug)]
struct Topology {
    parent: Vec<u32>, // u32::MAX for the root
    depth: Vec<u32>,
    child_off: Vec<u32>,
    child_data: Vec<NodeId>,
    /// Nodes ordered by (depth, id); bottom-up passes iterate it in reverse.
    by_depth: Vec<NodeId>,
    /// External labels, preserved for file round-trips.
    label: Vec<u64>,
    by_label: HashMap<u64, NodeId>,
    max_depth: u32,
}

const NO_PARENT: u32 = u32::MAX;

/// Finite rooted tree with a positive node weight pi.
#[derive(Debug, Clone)]
pub struct WeightedTree {
    topo: Arc<Topology>,
    weight: Vec<f64>,
    delta: Option<f64>,
}

impl WeightedTree {
    pub fn build(spec: TreeSpec) -> Result<WeightedTree> {
        match spec {
            TreeSpec::Homogeneous {
                branching,
                height,
                weight,
                delta,
            } => {
                if branching < 1 {
                    return Err(Error::InvalidBranching);
                }
                let mut records = Vec::new();
                // Breadth-first ids: children of k are contiguous.
                let mut level_start: u64 = 0;
                let mut level_count: u64 = 1;
                records.push(TreeRecord {
                    id: 0,
                    parent: None,
                    weight: weight.weight(0),
                });
                for d in 1..=height {
                    let next_start = level_start + level_count;
                    let b = branching as u64;
                    for j in 0..level_count * b {
                        records.push(TreeRecord {
                            id: next_start + j,
                            parent: Some(level_start + j / b),
                            weight: weight.weight(d),
                        });
                    }
                    level_start = next_start;
                    level_count *= b;
                }
                Self::from_records(&records, delta)
            }
            TreeSpec::Chain { height, weight } => {
                let records: Vec<TreeRecord> = (0..=height as u64)
                    .map(|d| TreeRecord {
                        id: d,
                        parent: if d == 0 { None } else { Some(d - 1) },
                        weight: weight.weight(d as u32),
                    })
                    .collect();
                Self::from_records(&records, None)
            }
            TreeSpec::Explicit { records, delta } => Self::from_records(&records, delta),
        }
    }

    pub fn from_records(records: &[TreeRecord], delta: Option<f64>) -> Result<WeightedTree> {
        if let Some(d) = delta {
            if d.is_nan() || d <= 0.0 || d >= 1.0 {
                return Err(Error::InvalidSpace(format!("delta {d} outside (0,1)")));
            }
        }
        let n = records.len();
        if n == 0 {
            return Err(Error::NoRoot);
        }
        let mut by_label = HashMap::with_capacity(n);
        for (i, r) in records.iter().enumerate() {
            if r.weight <= 0.0 || !r.weight.is_finite() {
                return Err(Error::NonpositiveWeight {
                    node: r.id,
                    weight: r.weight,
                });
            }
            if by_label.insert(r.id, NodeId(i as u32)).is_some() {
                return Err(Error::DuplicateNode(r.id));
            }
        }
        let mut parent = vec![NO_PARENT; n];
        let mut root: Option<usize> = None;
        for (i, r) in records.iter().enumerate() {
            match r.parent {
                None => {
                    if let Some(prev) = root {
                        return Err(Error::MultipleRoots(records[prev].id, r.id));
                    }
                    root = Some(i);
                }
                Some(p) => match by_label.get(&p) {
                    Some(pid) => parent[i] = pid.0,
                    None => {
                        return Err(Error::UnknownParent {
                            node: r.id,
                            parent: p,
                        })
                    }
                },
            }
        }
        let root = root.ok_or(Error::NoRoot)?;

        // Depths by parent-chain resolution; detects cycles and detached nodes.
        let mut depth = vec![u32::MAX; n];
        depth[root] = 0;
        for i in 0..n {
            if depth[i] != u32::MAX {
                continue;
            }
            let mut chain = vec![i];
            let mut cur = i;
            loop {
                let p = parent[cur];
                if p == NO_PARENT {
                    break; // reached root
                }
                let p = p as usize;
                if depth[p] != u32::MAX {
                    break;
                }
                if chain.len() > n {
                    return Err(Error::DetachedNode(records[i].id));
                }
                chain.push(p);
                cur = p;
            }
            let base = parent[cur];
            let mut d = if base == NO_PARENT {
                if cur == root {
                    0
                } else {
                    return Err(Error::DetachedNode(records[cur].id));
                }
            } else {
                depth[base as usize] + 1
            };
            if depth[cur] != u32::MAX {
                d = depth[cur];
            } else {
                depth[cur] = d;
            }
            for &v in chain.iter().rev() {
                if v != cur {
                    d += 1;
                    depth[v] = d;
                }
            }
        }

        // Children lists in record (insertion) order.
        let mut counts = vec![0u32; n];
        for i in 0..n {
            if parent[i] != NO_PARENT {
                counts[parent[i] as usize] += 1;
            }
        }
        let mut child_off = vec![0u32; n + 1];
        for i in 0..n {
            child_off[i + 1] = child_off[i] + counts[i];
        }
        let mut cursor = child_off.clone();
        let mut child_data = vec![NodeId(0); n - 1];
        for i in 0..n {
            let p = parent[i];
            if p != NO_PARENT {
                child_data[cursor[p as usize] as usize] = NodeId(i as u32);
                cursor[p as usize] += 1;
            }
        }

        let mut by_depth: Vec<NodeId> = (0..n as u32).map(NodeId).collect();
        by_depth.sort_by_key(|v| (depth[v.index()], v.0));
        let max_depth = depth.iter().copied().max().unwrap_or(0);

        let weight = records.iter().map(|r| r.weight).collect();
        let label = records.iter().map(|r| r.id).collect();
        Ok(WeightedTree {
            topo: Arc::new(Topology {
                parent,
                depth,
                child_off,
                child_data,
                by_depth,
                label,
                by_label,
                max_depth,
            }),
            weight,
            delta,
        })
    }

    /// Same topology, new weights.
    pub fn with_weights(&self, weight: Vec<f64>) -> Result<WeightedTree> {
        assert_eq!(weight.len(), self.node_count());
        for (i, &w) in weight.iter().enumerate() {
            if w <= 0.0 || !w.is_finite() {
                return Err(Error::NonpositiveWeight {
                    node: self.topo.label[i],
                    weight: w,
                });
            }
        }
        Ok(WeightedTree {
            topo: Arc::clone(&self.topo),
            weight,
            delta: self.delta,
        })
    }

    pub fn node_count(&self) -> usize {
        self.weight.len()
    }

    pub fn root(&self) -> NodeId {
        let i = self
            .topo
            .parent
            .iter()
            .position(|&p| p == NO_PARENT)
            .expect("tree always has a root");
        NodeId(i as u32)
    }

    pub fn check_node(&self, v: NodeId) -> Result<()> {
        if v.index() < self.node_count() {
            Ok(())
        } else {
            Err(Error::InvalidNode(v.0))
        }
    }

    pub fn parent(&self, v: NodeId) -> Option<NodeId> {
        let p = self.topo.parent[v.index()];
        (p != NO_PARENT).then_some(NodeId(p))
    }

    pub fn children(&self, v: NodeId) -> &[NodeId] {
        let i = v.index();
        let lo = self.topo.child_off[i] as usize;
        let hi = self.topo.child_off[i + 1] as usize;
        &self.topo.child_data[lo..hi]
    }

    pub fn depth(&self, v: NodeId) -> u32 {
        self.topo.depth[v.index()]
    }

    pub fn max_depth(&self) -> u32 {
        self.topo.max_depth
    }

    pub fn weight(&self, v: NodeId) -> f64 {
        self.weight[v.index()]
    }

    pub fn delta(&self) -> Option<f64> {
        self.delta
    }

    pub fn label(&self, v: NodeId) -> u64 {
        self.topo.label[v.index()]
    }

    pub fn node_by_label(&self, label: u64) -> Option<NodeId> {
        self.topo.by_label.get(&label).copied()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.node_count() as u32).map(NodeId)
    }

    /// Nodes sorted by (depth, id); reverse for bottom-up passes.
    pub fn nodes_by_depth(&self) -> &[NodeId] {
        &self.topo.by_depth
    }

    pub fn is_leaf(&self, v: NodeId) -> bool {
        self.children(v).is_empty()
    }

    pub fn leaves(&self) -> Vec<NodeId> {
        self.nodes().filter(|&v| self.is_leaf(v)).collect()
    }

    /// True when `a` is an ancestor of `b` or `a == b`.
    pub fn is_ancestor_or_equal(&self, a: NodeId, b: NodeId) -> bool {
        let mut cur = b;
        loop {
            if cur == a {
                return true;
            }
            if self.depth(cur) <= self.depth(a) {
                return false;
            }
            match self.parent(cur) {
                Some(p) => cur = p,
                None => return false,
            }
        }
    }

    /// Geodesic from the root to `v`, inclusive.
    pub fn path_from_root(&self, v: NodeId) -> Vec<NodeId> {
        let mut path = Vec::with_capacity(self.depth(v) as usize + 1);
        let mut cur = Some(v);
        while let Some(x) = cur {
            path.push(x);
            cur = self.parent(x);
        }
        path.reverse();
        path
    }

    /// Potential-theoretic distance d_pi(v) = sum over [root, v] of pi^(1-p').
    pub fn d_pi(&self, v: NodeId, p: f64) -> Result<f64> {
        self.check_node(v)?;
        let e = 1.0 - conjugate(p)?;
        let mut sum = 0.0;
        let mut cur = Some(v);
        while let Some(x) = cur {
            sum += self.weight(x).powf(e);
            cur = self.parent(x);
        }
        Ok(sum)
    }

    /// Deepest common ancestor of `a` and `b`.
    pub fn confluent(&self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.check_node(a)?;
        self.check_node(b)?;
        let (mut a, mut b) = (a, b);
        while self.depth(a) > self.depth(b) {
            a = self.parent(a).expect("deeper node has a parent");
        }
        while self.depth(b) > self.depth(a) {
            b = self.parent(b).expect("deeper node has a parent");
        }
        while a != b {
            a = self.parent(a).expect("non-root mismatch");
            b = self.parent(b).expect("non-root mismatch");
        }
        Ok(a)
    }

    /// Gromov-type boundary metric with ratio delta; defined on all of the
    /// (truncated) tree. Requires the tree to carry delta.
    pub fn rho_t(&self, a: NodeId, b: NodeId) -> Result<f64> {
        let delta = self.delta.ok_or(Error::MissingDelta)?;
        let c = self.confluent(a, b)?;
        let dm = delta.powi(self.depth(c) as i32);
        let da = delta.powi(self.depth(a) as i32);
        let db = delta.powi(self.depth(b) as i32);
        Ok(2.0 * delta / (1.0 - delta) * (dm - 0.5 * (da + db)))
    }

    /// Bottom-up subtree sums: out[v] = sum of `values[x]` over x >= v.
    pub(crate) fn subtree_sums(&self, values: &[f64]) -> Vec<f64> {
        let mut out = values.to_vec();
        for &v in self.topo.by_depth.iter().rev() {
            if let Some(p) = self.parent(v) {
                out[p.index()] += out[v.index()];
            }
        }
        out
    }

    // ---- file format ------------------------------------------------------

    /// Parse the text tree format: optional `delta <x>` header, then one
    /// `<id> <parent-id | -> <weight>` record per line. `#` starts a comment.
    pub fn parse(text: &str) -> Result<WeightedTree> {
        let mut delta = None;
        let mut records = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            let fail = |msg: &str| Error::Parse(format!("line {}: {}", lineno + 1, msg));
            if toks[0] == "delta" {
                if toks.len() != 2 {
                    return Err(fail("expected `delta <value>`"));
                }
                let d: f64 = toks[1].parse().map_err(|_| fail("bad delta"))?;
                delta = Some(d);
                continue;
            }
            if toks.len() != 3 {
                return Err(fail("expected `<id> <parent|-> <weight>`"));
            }
            let id: u64 = toks[0].parse().map_err(|_| fail("bad node id"))?;
            let parent = if toks[1] == "-" {
                None
            } else {
                Some(toks[1].parse().map_err(|_| fail("bad parent id"))?)
            };
            let weight: f64 = toks[2].parse().map_err(|_| fail("bad weight"))?;
            records.push(TreeRecord { id, parent, weight });
        }
        Self::from_records(&records, delta)
    }

    /// Serialize in the format accepted by [`WeightedTree::parse`]; weights
    /// carry 17 significant digits so the round trip is lossless.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        if let Some(d) = self.delta {
            out.push_str(&format!("delta {:.16e}\n", d));
        }
        for v in self.nodes() {
            let parent = match self.parent(v) {
                Some(p) => self.label(p).to_string(),
                None => "-".to_string(),
            };
            out.push_str(&format!(
                "{} {} {:.16e}\n",
                self.label(v),
                parent,
                self.weight(v)
            ));
        }
        out
    }
}

// ---- boundary sets ---------------------------------------------------------

/// Antichain of nodes encoding a finite union of boundary cylinders.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundarySet {
    nodes: Vec<NodeId>, // sorted by id, pairwise incomparable
}

impl BoundarySet {
    pub fn empty() -> BoundarySet {
        BoundarySet { nodes: Vec::new() }
    }

    /// Validating constructor: the nodes must already form an antichain.
    pub fn from_antichain(tree: &WeightedTree, nodes: &[NodeId]) -> Result<BoundarySet> {
        for &v in nodes {
            tree.check_node(v)?;
        }
        let mut sorted = nodes.to_vec();
        sorted.sort();
        sorted.dedup();
        // walk each node's proper ancestors; meeting a set member there
        // violates the antichain property
        for &v in &sorted {
            let mut cur = tree.parent(v);
            while let Some(x) = cur {
                if sorted.binary_search(&x).is_ok() {
                    return Err(Error::NotAntichain(tree.label(x), tree.label(v)));
                }
                cur = tree.parent(x);
            }
        }
        Ok(BoundarySet { nodes: sorted })
    }

    /// Drop every node that has a proper ancestor in the set. Complete
    /// sibling families are never merged upward.
    pub fn normalize(tree: &WeightedTree, nodes: &[NodeId]) -> Result<BoundarySet> {
        for &v in nodes {
            tree.check_node(v)?;
        }
        let mut sorted = nodes.to_vec();
        sorted.sort();
        sorted.dedup();
        let mut keep = Vec::with_capacity(sorted.len());
        'outer: for &v in &sorted {
            let mut cur = tree.parent(v);
            while let Some(x) = cur {
                if sorted.binary_search(&x).is_ok() {
                    continue 'outer; // dominated by a proper ancestor
                }
                cur = tree.parent(x);
            }
            keep.push(v);
        }
        Ok(BoundarySet { nodes: keep })
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.nodes.binary_search(&v).is_ok()
    }

    /// True when the cylinder of `v` is contained in this set, i.e. some
    /// antichain node is an ancestor-or-equal of `v`.
    pub fn covers(&self, tree: &WeightedTree, v: NodeId) -> bool {
        let mut cur = Some(v);
        while let Some(x) = cur {
            if self.contains(x) {
                return true;
            }
            cur = tree.parent(x);
        }
        false
    }

    /// Replace every antichain node by the tree leaves below it: the finest
    /// representation of the same cylinder union at this truncation.
    pub fn refine_to_leaves(&self, tree: &WeightedTree) -> BoundarySet {
        let mut out = Vec::new();
        let mut stack: Vec<NodeId> = self.nodes.clone();
        while let Some(v) = stack.pop() {
            if tree.is_leaf(v) {
                out.push(v);
            } else {
                stack.extend_from_slice(tree.children(v));
            }
        }
        out.sort();
        out.dedup();
        BoundarySet { nodes: out }
    }
}

// ---- measures and node functions --------------------------------------------

/// Nonnegative additive mass assignment on an antichain, with the derived
/// node field `istar(v)` = mass carried by descendants-or-equal of `v`.
#[derive(Debug, Clone)]
pub struct TreeMeasure {
    node_count: usize,
    support: Vec<(NodeId, f64)>,
    istar: Vec<f64>,
}

impl TreeMeasure {
    pub fn from_masses(tree: &WeightedTree, masses: &[(NodeId, f64)]) -> Result<TreeMeasure> {
        let mut support: Vec<(NodeId, f64)> = Vec::with_capacity(masses.len());
        for &(v, m) in masses {
            tree.check_node(v)?;
            if m < 0.0 || !m.is_finite() {
                return Err(Error::NegativeMass {
                    node: tree.label(v),
                    mass: m,
                });
            }
            support.push((v, m));
        }
        support.sort_by_key(|&(v, _)| v);
        for i in 1..support.len() {
            if support[i].0 == support[i - 1].0 {
                return Err(Error::DuplicateNode(tree.label(support[i].0)));
            }
        }
        for &(v, _) in &support {
            let mut cur = tree.parent(v);
            while let Some(x) = cur {
                if support.binary_search_by_key(&x, |&(u, _)| u).is_ok() {
                    return Err(Error::NotAntichain(tree.label(x), tree.label(v)));
                }
                cur = tree.parent(x);
            }
        }
        let mut node_masses = vec![0.0; tree.node_count()];
        for &(v, m) in &support {
            node_masses[v.index()] = m;
        }
        let istar = tree.subtree_sums(&node_masses);
        Ok(TreeMeasure {
            node_count: tree.node_count(),
            support,
            istar,
        })
    }

    pub fn zero(tree: &WeightedTree) -> TreeMeasure {
        TreeMeasure {
            node_count: tree.node_count(),
            support: Vec::new(),
            istar: vec![0.0; tree.node_count()],
        }
    }

    pub fn check_tree(&self, tree: &WeightedTree) -> Result<()> {
        if self.node_count == tree.node_count() {
            Ok(())
        } else {
            Err(Error::MeasureTreeMismatch {
                expected: self.node_count,
                actual: tree.node_count(),
            })
        }
    }

    pub fn support(&self) -> &[(NodeId, f64)] {
        &self.support
    }

    pub fn mass_at(&self, v: NodeId) -> f64 {
        self.support
            .binary_search_by_key(&v, |&(x, _)| x)
            .map(|i| self.support[i].1)
            .unwrap_or(0.0)
    }

    /// istar(v) = integral of the measure over the successor set of v.
    pub fn istar(&self, v: NodeId) -> f64 {
        self.istar[v.index()]
    }

    pub fn istar_slice(&self) -> &[f64] {
        &self.istar
    }

    pub fn total(&self) -> f64 {
        self.support.iter().map(|&(_, m)| m).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.total() == 0.0
    }

    pub fn scaled(&self, c: f64) -> TreeMeasure {
        assert!(c >= 0.0);
        TreeMeasure {
            node_count: self.node_count,
            support: self.support.iter().map(|&(v, m)| (v, c * m)).collect(),
            istar: self.istar.iter().map(|&x| c * x).collect(),
        }
    }
}

/// Real value per node; zero off explicit support.
#[derive(Debug, Clone)]
pub struct NodeFunction {
    value: Vec<f64>,
}

impl NodeFunction {
    pub fn zeros(tree: &WeightedTree) -> NodeFunction {
        NodeFunction {
            value: vec![0.0; tree.node_count()],
        }
    }

    pub fn constant(tree: &WeightedTree, c: f64) -> NodeFunction {
        NodeFunction {
            value: vec![c; tree.node_count()],
        }
    }

    pub fn from_fn(tree: &WeightedTree, f: impl FnMut(NodeId) -> f64) -> NodeFunction {
        NodeFunction {
            value: tree.nodes().map(f).collect(),
        }
    }

    pub(crate) fn from_values(value: Vec<f64>) -> NodeFunction {
        NodeFunction { value }
    }

    pub fn get(&self, v: NodeId) -> f64 {
        self.value[v.index()]
    }

    pub fn set(&mut self, v: NodeId, x: f64) {
        self.value[v.index()] = x;
    }

    pub fn values(&self) -> &[f64] {
        &self.value
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> WeightRule {
        WeightRule::Constant(1.0)
    }

    pub(crate) fn binary(height: u32) -> WeightedTree {
        WeightedTree::build(TreeSpec::Homogeneous {
            branching: 2,
            height,
            weight: WeightRule::Constant(1.0),
            delta: None,
        })
        .unwrap()
    }

    #[test]
    fn homogeneous_node_count() {
        let t = binary(3);
        assert_eq!(t.node_count(), 15);
        assert_eq!(t.max_depth(), 3);
        assert_eq!(t.leaves().len(), 8);
    }

    #[test]
    fn chain_shape() {
        let t = WeightedTree::build(TreeSpec::Chain {
            height: 5,
            weight: unit(),
        })
        .unwrap();
        assert_eq!(t.node_count(), 6);
        for v in t.nodes() {
            let c = t.children(v).len();
            assert!(c <= 1);
            if t.depth(v) < 5 {
                assert_eq!(c, 1);
            }
        }
    }

    #[test]
    fn zero_weight_rejected() {
        let err = WeightedTree::from_records(
            &[
                TreeRecord {
                    id: 0,
                    parent: None,
                    weight: 1.0,
                },
                TreeRecord {
                    id: 1,
                    parent: Some(0),
                    weight: 0.0,
                },
            ],
            None,
        )
        .unwrap_err();
        assert!(matches!(err, Error::NonpositiveWeight { node: 1, .. }));
    }

    #[test]
    fn duplicate_and_orphan_rejected() {
        let dup = WeightedTree::from_records(
            &[
                TreeRecord {
                    id: 0,
                    parent: None,
                    weight: 1.0,
                },
                TreeRecord {
                    id: 0,
                    parent: Some(0),
                    weight: 1.0,
                },
            ],
            None,
        )
        .unwrap_err();
        assert!(matches!(dup, Error::DuplicateNode(0)));
        let orphan = WeightedTree::from_records(
            &[
                TreeRecord {
                    id: 0,
                    parent: None,
                    weight: 1.0,
                },
                TreeRecord {
                    id: 1,
                    parent: Some(7),
                    weight: 1.0,
                },
            ],
            None,
        )
        .unwrap_err();
        assert!(matches!(orphan, Error::UnknownParent { node: 1, parent: 7 }));
    }

    #[test]
    fn d_pi_unit_weights() {
        let t = binary(3);
        let leaf = t.leaves()[0];
        assert_eq!(t.depth(leaf), 3);
        assert_eq!(t.d_pi(leaf, 2.0).unwrap(), 4.0);
    }

    #[test]
    fn d_pi_geometric_weights() {
        let t = WeightedTree::build(TreeSpec::Chain {
            height: 2,
            weight: WeightRule::DepthPower(4.0),
        })
        .unwrap();
        let leaf = t.leaves()[0];
        // p = 2: sum of 4^-depth = 1 + 0.25 + 0.0625
        assert!((t.d_pi(leaf, 2.0).unwrap() - 1.3125).abs() < 1e-15);
    }

    #[test]
    fn d_pi_at_root_is_single_term() {
        let t = WeightedTree::build(TreeSpec::Chain {
            height: 3,
            weight: WeightRule::DepthPower(3.0),
        })
        .unwrap();
        let p = 2.5;
        let pp = conjugate(p).unwrap();
        let expect = t.weight(t.root()).powf(1.0 - pp);
        assert!((t.d_pi(t.root(), p).unwrap() - expect).abs() < 1e-15);
    }

    #[test]
    fn d_pi_rejects_bad_exponent() {
        let t = binary(1);
        assert!(t.d_pi(t.root(), 1.0).is_err());
        assert!(t.d_pi(t.root(), 0.5).is_err());
    }

    #[test]
    fn confluent_cases() {
        let t = binary(2);
        let root = t.root();
        let c = t.children(root);
        let leaves = t.leaves();
        // siblings -> parent
        let sibs = t.children(c[0]);
        assert_eq!(t.confluent(sibs[0], sibs[1]).unwrap(), c[0]);
        // ancestor of b -> ancestor
        assert_eq!(t.confluent(c[0], sibs[1]).unwrap(), c[0]);
        // equal -> itself
        assert_eq!(t.confluent(leaves[3], leaves[3]).unwrap(), leaves[3]);
        // across the root
        assert_eq!(t.confluent(leaves[0], leaves[3]).unwrap(), root);
    }

    #[test]
    fn normalize_drops_dominated() {
        let t = binary(2);
        let root = t.root();
        let c = t.children(root)[0];
        let leaf_below = t.children(c)[0];
        let other = t.children(t.children(root)[1])[1];
        let set = BoundarySet::normalize(&t, &[c, leaf_below, other]).unwrap();
        assert_eq!(set.nodes(), &[c, other]);
        // idempotent
        let again = BoundarySet::normalize(&t, set.nodes()).unwrap();
        assert_eq!(again, set);
    }

    #[test]
    fn normalize_keeps_sibling_families() {
        let t = binary(1);
        let kids: Vec<NodeId> = t.children(t.root()).to_vec();
        let set = BoundarySet::normalize(&t, &kids).unwrap();
        assert_eq!(set.len(), 2);
    }

    #[test]
    fn normalize_empty() {
        let t = binary(1);
        assert!(BoundarySet::normalize(&t, &[]).unwrap().is_empty());
    }

    #[test]
    fn measure_istar_on_geodesic() {
        let t = binary(3);
        let leaf = t.leaves()[2];
        let mu = TreeMeasure::from_masses(&t, &[(leaf, 1.0)]).unwrap();
        for v in t.nodes() {
            let on_path = t.is_ancestor_or_equal(v, leaf);
            let expect = if on_path { 1.0 } else { 0.0 };
            assert_eq!(mu.istar(v), expect);
        }
        assert_eq!(mu.istar(t.root()), mu.total());
    }

    #[test]
    fn measure_rejects_bad_input() {
        let t = binary(2);
        let leaf = t.leaves()[0];
        assert!(matches!(
            TreeMeasure::from_masses(&t, &[(leaf, -0.1)]).unwrap_err(),
            Error::NegativeMass { .. }
        ));
        let c = t.children(t.root())[0];
        let grandchild = t.children(t.children(c)[0]);
        // node and its grandchild: comparable support
        let gc = if grandchild.is_empty() {
            t.children(c)[0]
        } else {
            grandchild[0]
        };
        assert!(matches!(
            TreeMeasure::from_masses(&t, &[(c, 0.5), (gc, 0.5)]).unwrap_err(),
            Error::NotAntichain(..)
        ));
    }

    #[test]
    fn istar_child_decomposition() {
        let t = binary(2);
        let leaves = t.leaves();
        let masses: Vec<(NodeId, f64)> =
            leaves.iter().enumerate().map(|(i, &l)| (l, 0.1 * (i + 1) as f64)).collect();
        let mu = TreeMeasure::from_masses(&t, &masses).unwrap();
        for v in t.nodes() {
            let kids: f64 = t.children(v).iter().map(|&c| mu.istar(c)).sum();
            assert!((mu.istar(v) - (kids + mu.mass_at(v))).abs() < 1e-15);
        }
    }

    #[test]
    fn serialize_parse_round_trip() {
        let t = WeightedTree::from_records(
            &[
                TreeRecord {
                    id: 10,
                    parent: None,
                    weight: 1.5,
                },
                TreeRecord {
                    id: 11,
                    parent: Some(10),
                    weight: 0.1 + 0.2, // not exactly 0.3
                },
                TreeRecord {
                    id: 12,
                    parent: Some(10),
                    weight: std::f64::consts::PI,
                },
            ],
            Some(0.5),
        )
        .unwrap();
        let s1 = t.serialize();
        let t2 = WeightedTree::parse(&s1).unwrap();
        let s2 = t2.serialize();
        assert_eq!(s1, s2);
        for v in t.nodes() {
            assert_eq!(t.weight(v), t2.weight(v));
            assert_eq!(t.label(v), t2.label(v));
        }
        assert_eq!(t.delta(), t2.delta());
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(WeightedTree::parse("0 - roses").is_err());
        assert!(WeightedTree::parse("").is_err());
        assert!(WeightedTree::parse("0 - 1\n0 - 1").is_err());
        // two roots
        assert!(matches!(
            WeightedTree::parse("0 - 1\n1 - 1"),
            Err(Error::MultipleRoots(0, 1))
        ));
        // cycle detached from the root
        assert!(matches!(
            WeightedTree::parse("0 - 1\n1 2 1\n2 1 1"),
            Err(Error::DetachedNode(_))
        ));
    }

    #[test]
    fn parse_accepts_child_before_parent() {
        let t = WeightedTree::parse("5 7 1\n7 - 2\n9 5 1").unwrap();
        assert_eq!(t.node_count(), 3);
        let root = t.root();
        assert_eq!(t.label(root), 7);
        let five = t.node_by_label(5).unwrap();
        assert_eq!(t.depth(five), 1);
        assert_eq!(t.depth(t.node_by_label(9).unwrap()), 2);
    }

    #[test]
    fn rho_t_boundary_formula() {
        let t = WeightedTree::build(TreeSpec::Homogeneous {
            branching: 2,
            height: 3,
            weight: unit(),
            delta: Some(0.5),
        })
        .unwrap();
        let leaves = t.leaves();
        let (a, b) = (leaves[0], leaves[7]);
        // confluent at the root; both points at depth 3
        let d = 0.5f64;
        let expect = 2.0 * d / (1.0 - d) * (1.0 - 0.5 * (2.0 * d.powi(3)));
        assert!((t.rho_t(a, b).unwrap() - expect).abs() < 1e-15);
        assert_eq!(t.rho_t(a, a).unwrap(), 0.0);
        let untagged = binary(2);
        assert!(matches!(
            untagged.rho_t(untagged.root(), untagged.root()),
            Err(Error::MissingDelta)
        ));
    }

    #[test]
    fn values_are_shareable_across_threads() {
        fn assert_send_sync<T: Send + Sync>() {}
        assert_send_sync::<WeightedTree>();
        assert_send_sync::<BoundarySet>();
        assert_send_sync::<TreeMeasure>();
        assert_send_sync::<NodeFunction>();
    }

    #[test]
    fn refine_to_leaves_covers_same_cylinders() {
        let t = binary(3);
        let c = t.children(t.root())[0];
        let refined = BoundarySet::from_antichain(&t, &[c])
            .unwrap()
            .refine_to_leaves(&t);
        assert_eq!(refined.len(), 4);
        for &l in refined.nodes() {
            assert!(t.is_ancestor_or_equal(c, l));
            assert!(t.is_leaf(l));
        }
    }
}
