//! Commuting-group scheduling of partition exponentials into Trotter steps.

pub mod bounds;
pub mod graph;
pub mod plan;

pub use bounds::{estimate_error, partition_commutator_norm, BoundMode, ErrorEstimate};
pub use graph::{build_conflict_graph, greedy_commuting_groups, partition_terms, ConflictGraph};
pub use plan::{
    block_matrix, build_trotter_plan, derive_seed, exact_unitary, merge_adjacent, plan_unitary,
    shuffle_within_groups, BlockExp, TrotterConfig, TrotterPlan,
};
