//! Property tests over randomly structured trees: the algebraic identities
//! the modules promise, checked on arbitrary instances rather than the
//! seeded families used elsewhere.

use proptest::prelude::*;

use treecap::potential::{energy, hardy_sum, wolff_potential};
use treecap::tree::{
    BoundarySet, NodeFunction, NodeId, TreeMeasure, TreeRecord, WeightedTree,
};
use treecap::{capacity, capacity_dual_oracle, capacity_primal_oracle, OracleOptions};

/// Random recursive tree encoded as (parent pick, weight) pairs; node i+1
/// attaches to a uniformly chosen earlier node.
fn tree_strategy(max_nodes: usize) -> impl Strategy<Value = WeightedTree> {
    prop::collection::vec((any::<prop::sample::Index>(), 0.5f64..2.0), 1..max_nodes).prop_map(
        |nodes| {
            let mut records = vec![TreeRecord {
                id: 0,
                parent: None,
                weight: 1.0,
            }];
            for (i, (pick, w)) in nodes.into_iter().enumerate() {
                let parent = pick.index(records.len()) as u64;
                records.push(TreeRecord {
                    id: i as u64 + 1,
                    parent: Some(parent),
                    weight: w,
                });
            }
            WeightedTree::from_records(&records, None).expect("valid records")
        },
    )
}

fn node_strategy() -> impl Strategy<Value = prop::sample::Index> {
    any::<prop::sample::Index>()
}

fn pick(tree: &WeightedTree, idx: &prop::sample::Index) -> NodeId {
    tree.nodes().nth(idx.index(tree.node_count())).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn d_pi_telescopes(tree in tree_strategy(24), idx in node_strategy(), p in 1.1f64..4.0) {
        let v = pick(&tree, &idx);
        let d_v = tree.d_pi(v, p).unwrap();
        match tree.parent(v) {
            Some(parent) => {
                let d_p = tree.d_pi(parent, p).unwrap();
                let pp = p / (p - 1.0);
                let term = tree.weight(v).powf(1.0 - pp);
                prop_assert!((d_v - (d_p + term)).abs() <= 1e-12 * d_v.max(1.0));
            }
            None => {
                let pp = p / (p - 1.0);
                prop_assert!((d_v - tree.weight(v).powf(1.0 - pp)).abs() <= 1e-12 * d_v.max(1.0));
            }
        }
    }

    #[test]
    fn confluent_laws(tree in tree_strategy(24), a in node_strategy(), b in node_strategy()) {
        let (a, b) = (pick(&tree, &a), pick(&tree, &b));
        let m = tree.confluent(a, b).unwrap();
        prop_assert_eq!(tree.confluent(b, a).unwrap(), m);
        prop_assert_eq!(tree.confluent(a, a).unwrap(), a);
        // the confluent lies on both root geodesics
        prop_assert!(tree.is_ancestor_or_equal(m, a));
        prop_assert!(tree.is_ancestor_or_equal(m, b));
    }

    #[test]
    fn normalize_is_idempotent_and_antichain(
        tree in tree_strategy(24),
        picks in prop::collection::vec(node_strategy(), 1..10),
    ) {
        let nodes: Vec<NodeId> = picks.iter().map(|i| pick(&tree, i)).collect();
        let once = BoundarySet::normalize(&tree, &nodes).unwrap();
        let twice = BoundarySet::normalize(&tree, once.nodes()).unwrap();
        prop_assert_eq!(&once, &twice);
        // pairwise incomparable
        for &x in once.nodes() {
            for &y in once.nodes() {
                if x != y {
                    prop_assert!(!tree.is_ancestor_or_equal(x, y));
                }
            }
        }
        // validating constructor accepts it
        prop_assert!(BoundarySet::from_antichain(&tree, once.nodes()).is_ok());
    }

    #[test]
    fn istar_decomposes_over_children(
        tree in tree_strategy(24),
        picks in prop::collection::vec((node_strategy(), 0.0f64..2.0), 1..8),
    ) {
        let raw: Vec<NodeId> = picks.iter().map(|(i, _)| pick(&tree, i)).collect();
        let support = BoundarySet::normalize(&tree, &raw).unwrap();
        let masses: Vec<(NodeId, f64)> = support
            .nodes()
            .iter()
            .zip(picks.iter())
            .map(|(&v, &(_, m))| (v, m))
            .collect();
        let mu = TreeMeasure::from_masses(&tree, &masses).unwrap();
        for v in tree.nodes() {
            let kids: f64 = tree.children(v).iter().map(|&c| mu.istar(c)).sum();
            let expect = kids + mu.mass_at(v);
            prop_assert!((mu.istar(v) - expect).abs() <= 1e-12 * expect.max(1.0));
        }
        prop_assert!((mu.istar(tree.root()) - mu.total()).abs() <= 1e-12 * mu.total().max(1.0));
    }

    #[test]
    fn serialize_parse_is_lossless(tree in tree_strategy(20)) {
        let s1 = tree.serialize();
        let back = WeightedTree::parse(&s1).unwrap();
        prop_assert_eq!(s1, back.serialize());
        for v in tree.nodes() {
            prop_assert_eq!(tree.weight(v).to_bits(), back.weight(v).to_bits());
        }
    }

    #[test]
    fn hardy_adjoint_duality(
        tree in tree_strategy(20),
        picks in prop::collection::vec((node_strategy(), 0.0f64..2.0), 1..6),
        fvals in prop::collection::vec(0.0f64..1.0, 32),
    ) {
        let raw: Vec<NodeId> = picks.iter().map(|(i, _)| pick(&tree, i)).collect();
        let support = BoundarySet::normalize(&tree, &raw).unwrap();
        let masses: Vec<(NodeId, f64)> = support
            .nodes()
            .iter()
            .zip(picks.iter())
            .map(|(&v, &(_, m))| (v, m))
            .collect();
        let mu = TreeMeasure::from_masses(&tree, &masses).unwrap();
        let f = NodeFunction::from_fn(&tree, |v| fvals[v.index() % fvals.len()]);
        let lhs: f64 = mu
            .support()
            .iter()
            .map(|&(v, m)| hardy_sum(&tree, &f, v).unwrap() * m)
            .sum();
        let rhs: f64 = tree.nodes().map(|v| f.get(v) * mu.istar(v)).sum();
        prop_assert!((lhs - rhs).abs() <= 1e-11 * lhs.abs().max(1.0));
    }

    #[test]
    fn energy_is_potential_integral(
        tree in tree_strategy(20),
        picks in prop::collection::vec((node_strategy(), 0.0f64..2.0), 1..6),
        p in 1.2f64..3.5,
    ) {
        let raw: Vec<NodeId> = picks.iter().map(|(i, _)| pick(&tree, i)).collect();
        let support = BoundarySet::normalize(&tree, &raw).unwrap();
        let masses: Vec<(NodeId, f64)> = support
            .nodes()
            .iter()
            .zip(picks.iter())
            .map(|(&v, &(_, m))| (v, m))
            .collect();
        let mu = TreeMeasure::from_masses(&tree, &masses).unwrap();
        let e = energy(&tree, &mu, p).unwrap();
        let via_v: f64 = mu
            .support()
            .iter()
            .map(|&(v, m)| wolff_potential(&tree, &mu, p, v).unwrap() * m)
            .sum();
        prop_assert!((e - via_v).abs() <= 1e-10 * e.max(1.0));
    }

    #[test]
    fn oracles_sandwich_the_recursion(
        tree in tree_strategy(16),
        picks in prop::collection::vec(node_strategy(), 1..5),
        p in prop::sample::select(vec![1.5f64, 2.0, 3.0]),
    ) {
        let nodes: Vec<NodeId> = picks.iter().map(|i| pick(&tree, i)).collect();
        let e = BoundarySet::normalize(&tree, &nodes).unwrap();
        let cap = capacity(&tree, &e, p).unwrap();
        let opts = OracleOptions { tol: 1e-6, max_iters: 200_000 };
        let primal = capacity_primal_oracle(&tree, &e, p, opts).unwrap();
        let dual = capacity_dual_oracle(&tree, &e, p, opts).unwrap();
        // dual certifies from below, the scaled primal from above
        prop_assert!(dual.value <= cap * (1.0 + 1e-6) + 1e-12);
        prop_assert!(primal.value >= cap * (1.0 - 1e-6) - 1e-12);
        prop_assert!((primal.value - cap).abs() <= 1e-4 * cap.max(1e-12));
        prop_assert!((dual.value - cap).abs() <= 1e-4 * cap.max(1e-12));
    }
}
