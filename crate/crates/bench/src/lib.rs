//! Fixtures shared by the criterion benches.

use ptrot_core::models::{build_model, GridSpec, Model, ModelParams, Topology};
use ptrot_core::partition::{greedy_partition, Partition};
use ptrot_core::schedule::{block_matrix, build_conflict_graph, build_trotter_plan, greedy_commuting_groups, TrotterConfig, TrotterPlan};
use ptrot_core::numerics::DenseMatrix;
use ptrot_core::Hamiltonian;

pub fn spin_model(model: Model, rows: usize, cols: usize, topology: Topology) -> Hamiltonian {
    build_model(model, GridSpec::new(rows, cols, topology).expect("valid grid"), ModelParams::default())
        .expect("valid model")
}

/// Partitions and an unmerged first-order plan.
pub fn plan(h: &Hamiltonian, n_max: usize, steps: usize) -> (Vec<Partition>, TrotterPlan) {
    let parts = greedy_partition(h, n_max).expect("n_max ≥ 1");
    let graph = build_conflict_graph(&parts, h).expect("consistent partitions");
    let groups = greedy_commuting_groups(&graph);
    let cfg = TrotterConfig {
        time: 0.1,
        steps,
        n_max,
        ..TrotterConfig::default()
    };
    let plan = build_trotter_plan(&graph, &groups, &cfg).expect("valid config");
    (parts, plan)
}

/// The widest block of the Ising triangular 5×2 model at `dt`.
pub fn ising_block(dt: f64) -> DenseMatrix {
    let h = spin_model(Model::Ising, 5, 2, Topology::Triangular);
    let parts = greedy_partition(&h, 3).expect("n_max ≥ 1");
    let p = parts.iter().max_by_key(|p| (p.support.len(), p.term_indices.len())).expect("non-empty");
    block_matrix(&h, p, dt).expect("small block")
}
