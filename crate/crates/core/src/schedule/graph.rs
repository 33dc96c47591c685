use crate::error::Result;
use crate::partition::Partition;
use crate::pauli::{commutator, pauli_sum_frobenius, Hamiltonian, PauliTerm};

/// Commutator norms at or below this count as commuting.
pub const COMMUTE_TOL: f64 = 1e-10;

/// Vertices are partition ids; an edge joins two partitions whose block
/// unitaries do not commute.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConflictGraph {
    adj: Vec<Vec<bool>>,
}

impl ConflictGraph {
    pub fn new(vertices: usize) -> Self {
        ConflictGraph {
            adj: vec![vec![false; vertices]; vertices],
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.adj.len()
    }

    pub fn add_edge(&mut self, a: usize, b: usize) {
        if a != b {
            self.adj[a][b] = true;
            self.adj[b][a] = true;
        }
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj[a][b]
    }

    /// Edges `(a, b)` with `a < b`, lexicographic.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.num_vertices();
        (0..n)
            .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
            .filter(|&(a, b)| self.adj[a][b])
            .collect()
    }
}

pub fn partition_terms(h: &Hamiltonian, p: &Partition) -> Vec<PauliTerm> {
    p.term_indices.iter().map(|&i| h.terms()[i].clone()).collect()
}

/// `‖[H_A, H_B]‖_F` on the joint support, evaluated symbolically so it is
/// exact at any support size.
pub fn partition_commutator_frobenius(h: &Hamiltonian, a: &Partition, b: &Partition) -> Result<f64> {
    if a.support.is_disjoint(&b.support) {
        return Ok(0.0);
    }
    let joint = a.support.union(&b.support).count();
    let c = commutator(&partition_terms(h, a), &partition_terms(h, b))?;
    Ok(pauli_sum_frobenius(&c, joint))
}

pub fn build_conflict_graph(partitions: &[Partition], h: &Hamiltonian) -> Result<ConflictGraph> {
    let mut g = ConflictGraph::new(partitions.len());
    for a in 0..partitions.len() {
        for b in a + 1..partitions.len() {
            if partition_commutator_frobenius(h, &partitions[a], &partitions[b])? > COMMUTE_TOL {
                g.add_edge(a, b);
            }
        }
    }
    Ok(g)
}

/// Peel off greedy maximal independent sets: seed with the lowest remaining
/// vertex, then add every remaining vertex (ascending) not adjacent to the set.
pub fn greedy_commuting_groups(g: &ConflictGraph) -> Vec<Vec<usize>> {
    let n = g.num_vertices();
    let mut assigned = vec![false; n];
    let mut groups = Vec::new();
    while let Some(seed) = (0..n).find(|&v| !assigned[v]) {
        let mut group = vec![seed];
        assigned[seed] = true;
        for v in seed + 1..n {
            if !assigned[v] && group.iter().all(|&u| !g.has_edge(u, v)) {
                group.push(v);
                assigned[v] = true;
            }
        }
        groups.push(group);
    }
    groups
}
