//! The Hardy operator, its adjoint, energies, Wolff potentials, the Carleson
//! testing norm and the tree maximal function.

use crate::error::{Error, Result};
use crate::tree::{conjugate, NodeFunction, NodeId, TreeMeasure, WeightedTree};

/// If(target) = sum of f along the root geodesic, both endpoints included.
pub fn hardy_sum(tree: &WeightedTree, f: &NodeFunction, target: NodeId) -> Result<f64> {
    tree.check_node(target)?;
    let mut sum = 0.0;
    let mut cur = Some(target);
    while let Some(v) = cur {
        sum += f.get(v);
        cur = tree.parent(v);
    }
    Ok(sum)
}

/// If at every node in one top-down pass.
pub fn hardy_all(tree: &WeightedTree, f: &NodeFunction) -> NodeFunction {
    let mut out = vec![0.0; tree.node_count()];
    for &v in tree.nodes_by_depth() {
        let up = tree.parent(v).map_or(0.0, |p| out[p.index()]);
        out[v.index()] = up + f.get(v);
    }
    NodeFunction::from_values(out)
}

/// The adjoint field I*mu as a node function (a copy of the measure's istar).
pub fn adjoint_field(tree: &WeightedTree, mu: &TreeMeasure) -> Result<NodeFunction> {
    mu.check_tree(tree)?;
    Ok(NodeFunction::from_values(mu.istar_slice().to_vec()))
}

/// sigma_mu(x) = (I*mu)^(p') pi^(1-p') as a per-node vector.
pub(crate) fn sigma_measure(tree: &WeightedTree, mu: &TreeMeasure, p: f64) -> Result<Vec<f64>> {
    let pp = conjugate(p)?;
    mu.check_tree(tree)?;
    Ok(tree
        .nodes()
        .map(|v| {
            let is = mu.istar(v);
            if is == 0.0 {
                0.0
            } else {
                is.powf(pp) * tree.weight(v).powf(1.0 - pp)
            }
        })
        .collect())
}

/// Discrete p-energy E(mu) = sum over nodes of (I*mu)^(p') pi^(1-p').
pub fn energy(tree: &WeightedTree, mu: &TreeMeasure, p: f64) -> Result<f64> {
    Ok(sigma_measure(tree, mu, p)?.iter().sum())
}

/// Wolff potential V(mu)(xi) = sum over [root, xi] of pi^(1-p') (I*mu)^(p'-1).
pub fn wolff_potential(tree: &WeightedTree, mu: &TreeMeasure, p: f64, xi: NodeId) -> Result<f64> {
    let pp = conjugate(p)?;
    mu.check_tree(tree)?;
    tree.check_node(xi)?;
    let mut sum = 0.0;
    let mut cur = Some(xi);
    while let Some(v) = cur {
        let is = mu.istar(v);
        if is > 0.0 {
            sum += tree.weight(v).powf(1.0 - pp) * is.powf(pp - 1.0);
        }
        cur = tree.parent(v);
    }
    Ok(sum)
}

/// Wolff potential at every node in one top-down pass.
pub fn wolff_potential_all(tree: &WeightedTree, mu: &TreeMeasure, p: f64) -> Result<NodeFunction> {
    let pp = conjugate(p)?;
    mu.check_tree(tree)?;
    let mut out = vec![0.0; tree.node_count()];
    for &v in tree.nodes_by_depth() {
        let up = tree.parent(v).map_or(0.0, |p| out[p.index()]);
        let is = mu.istar(v);
        let term = if is > 0.0 {
            tree.weight(v).powf(1.0 - pp) * is.powf(pp - 1.0)
        } else {
            0.0
        };
        out[v.index()] = up + term;
    }
    Ok(NodeFunction::from_values(out))
}

/// Carleson testing norm
/// `[mu]` = ( sup over nodes a with I\*mu(a) > 0 of I\*sigma_mu(a) / I\*mu(a) )^(p-1),
/// with the empty-sup convention `[0] = 0` for the zero measure.
pub fn carleson_norm(tree: &WeightedTree, mu: &TreeMeasure, p: f64) -> Result<f64> {
    Ok(testing_sup(tree, mu, p)?.powf(p - 1.0))
}

/// The raw testing supremum of the Carleson norm (before the p-1 power);
/// this is the constant of the tree testing condition.
pub fn testing_sup(tree: &WeightedTree, mu: &TreeMeasure, p: f64) -> Result<f64> {
    let sigma = sigma_measure(tree, mu, p)?;
    let local = tree.subtree_sums(&sigma);
    let mut sup = 0.0f64;
    let mut any = false;
    for v in tree.nodes() {
        let is = mu.istar(v);
        if is > 0.0 {
            any = true;
            sup = sup.max(local[v.index()] / is);
        }
    }
    if !any {
        return Ok(0.0);
    }
    Ok(sup)
}

/// Tree maximal function
/// M_mu g(zeta) = sup over beta on [root, zeta] with I*mu(beta) > 0 of
/// I*(g dmu)(beta) / I*mu(beta).
pub fn maximal_fn(
    tree: &WeightedTree,
    mu: &TreeMeasure,
    g: &NodeFunction,
    zeta: NodeId,
) -> Result<f64> {
    mu.check_tree(tree)?;
    tree.check_node(zeta)?;
    if mu.is_zero() {
        return Err(Error::ZeroMeasure);
    }
    let gmu = weighted_subtree_sums(tree, mu, g);
    let mut sup = f64::NEG_INFINITY;
    let mut cur = Some(zeta);
    while let Some(v) = cur {
        let is = mu.istar(v);
        if is > 0.0 {
            sup = sup.max(gmu[v.index()] / is);
        }
        cur = tree.parent(v);
    }
    if sup == f64::NEG_INFINITY {
        // zeta's geodesic never meets the support tree; the sup over the
        // empty index set of nonnegative ratios is 0
        sup = 0.0;
    }
    Ok(sup)
}

/// I*(g dmu)(v) per node: mass of mu below v weighted by g at the support.
pub(crate) fn weighted_subtree_sums(
    tree: &WeightedTree,
    mu: &TreeMeasure,
    g: &NodeFunction,
) -> Vec<f64> {
    let mut node = vec![0.0; tree.node_count()];
    for &(v, m) in mu.support() {
        node[v.index()] = g.get(v) * m;
    }
    tree.subtree_sums(&node)
}
