//! Discrete nonlinear potential theory on finite weighted rooted trees.
//!
//! The library computes exact p-capacities of boundary sets, the extremal
//! (equilibrium) function/measure pair, discrete energies, Wolff potentials
//! and Carleson testing norms, and transports those quantities to exemplar
//! Ahlfors-regular spaces (interval, cube, ternary Cantor set) through their
//! dyadic cell decompositions.
//!
//! Everything exact is cross-checked by independent convex-optimization
//! oracles realizing the primal (extremal function) and dual (extremal
//! measure) definitions of capacity; the [`lab`] module packages the
//! comparison-theorem checks, and [`acceptance`] bundles the full
//! verification suite run by `treecap selftest`.

// index loops over parallel arrays and strided coordinates read better here
#![allow(clippy::needless_range_loop)]

pub mod acceptance;
pub mod capacity;
pub mod error;
pub mod instances;
pub mod lab;
pub mod potential;
pub mod rng;
pub mod spaces;
pub mod tree;

pub use capacity::{
    capacity, capacity_dual_oracle, capacity_point, capacity_primal_oracle, equilibrium,
    EquilibriumResult, OracleOptions, OracleOutcome,
};
pub use error::{Error, Result};
pub use potential::{adjoint_field, carleson_norm, energy, hardy_sum, maximal_fn, wolff_potential};
pub use spaces::{
    ball_capacity_estimate, continuous_energy, discretize_set, graph_predecessor_set, kernel_k,
    lambda_map, make_space, pull_back_atomic, push_forward, weight_pi_s, BallEstimate,
    Continuation, DyadicSpace, Point, SetDescriptor, SpaceConfig, SpaceKind, SpaceMeasure,
};
pub use tree::{
    conjugate, BoundarySet, NodeFunction, NodeId, TreeMeasure, TreeRecord, TreeSpec, WeightRule,
    WeightedTree,
};
