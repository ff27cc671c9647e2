//! Seeded random instances for the check harness and the verification suite.
//! Every consumer records the seed it used, so failures replay exactly.

use crate::rng::SplitMix64;
use crate::tree::{BoundarySet, NodeFunction, NodeId, TreeMeasure, TreeRecord, WeightedTree};

#[derive(Debug, Clone, Copy)]
pub struct TreeFamily {
    pub max_depth: u32,
    pub max_branching: usize,
    pub weight_lo: f64,
    pub weight_hi: f64,
}

impl Default for TreeFamily {
    fn default() -> Self {
        TreeFamily {
            max_depth: 4,
            max_branching: 3,
            weight_lo: 0.5,
            weight_hi: 2.0,
        }
    }
}

/// Random tree of the family: every node above the leaf level has between
/// 1 and `max_branching` children, weights uniform in the range.
pub fn random_tree(rng: &mut SplitMix64, fam: &TreeFamily) -> WeightedTree {
    let mut records = vec![TreeRecord {
        id: 0,
        parent: None,
        weight: rng.range_f64(fam.weight_lo, fam.weight_hi),
    }];
    let mut frontier = vec![(0u64, 0u32)];
    let mut next = 1u64;
    while let Some((id, d)) = frontier.pop() {
        if d == fam.max_depth {
            continue;
        }
        let kids = 1 + rng.range_usize(fam.max_branching);
        for _ in 0..kids {
            records.push(TreeRecord {
                id: next,
                parent: Some(id),
                weight: rng.range_f64(fam.weight_lo, fam.weight_hi),
            });
            frontier.push((next, d + 1));
            next += 1;
        }
    }
    WeightedTree::from_records(&records, None).expect("generated records are consistent")
}

/// Nonempty random antichain: independent node picks, normalized downward.
pub fn random_antichain(rng: &mut SplitMix64, tree: &WeightedTree, pick: f64) -> BoundarySet {
    let mut nodes: Vec<NodeId> = tree.nodes().filter(|_| rng.chance(pick)).collect();
    if nodes.is_empty() {
        let leaves = tree.leaves();
        nodes.push(leaves[rng.range_usize(leaves.len())]);
    }
    BoundarySet::normalize(tree, &nodes).expect("valid ids")
}

/// Random nonnegative masses on the antichain; some entries may be zero.
pub fn random_measure_on(
    rng: &mut SplitMix64,
    tree: &WeightedTree,
    support: &BoundarySet,
    mass_hi: f64,
) -> TreeMeasure {
    let masses: Vec<(NodeId, f64)> = support
        .nodes()
        .iter()
        .map(|&v| {
            let m = if rng.chance(0.15) {
                0.0
            } else {
                rng.range_f64(0.0, mass_hi)
            };
            (v, m)
        })
        .collect();
    TreeMeasure::from_masses(tree, &masses).expect("antichain support")
}

/// Random measure on a fresh random antichain.
pub fn random_measure(rng: &mut SplitMix64, tree: &WeightedTree, mass_hi: f64) -> TreeMeasure {
    let support = random_antichain(rng, tree, 0.3);
    random_measure_on(rng, tree, &support, mass_hi)
}

pub fn random_node_function(
    rng: &mut SplitMix64,
    tree: &WeightedTree,
    lo: f64,
    hi: f64,
) -> NodeFunction {
    NodeFunction::from_fn(tree, |_| rng.range_f64(lo, hi))
}
