//! Sorted greedy packing of Hamiltonian terms into small-support blocks.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::pauli::Hamiltonian;

/// A group of terms whose combined support fits in `n_max` qubits (or a
/// single oversized term).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    pub term_indices: Vec<usize>,
    pub support: BTreeSet<usize>,
}

impl Partition {
    pub fn support_vec(&self) -> Vec<usize> {
        self.support.iter().copied().collect()
    }
}

/// Term indices ordered by highest qubit, then weight, then original index.
/// Identity strings (no highest qubit) sort first.
pub fn sort_terms(h: &Hamiltonian) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..h.terms().len()).collect();
    idx.sort_by_key(|&i| {
        let t = &h.terms()[i];
        (t.string().max_qubit().map_or(0, |q| q + 1), t.weight(), i)
    });
    idx
}

/// Place each sorted term into the first partition that stays within
/// `n_max` qubits, opening a new partition otherwise.
pub fn greedy_partition(h: &Hamiltonian, n_max: usize) -> Result<Vec<Partition>> {
    if n_max == 0 {
        return Err(Error::InvalidConfig("group size must be at least 1".into()));
    }
    let mut parts: Vec<Partition> = Vec::new();
    for i in sort_terms(h) {
        let support: BTreeSet<usize> = h.terms()[i].support().into_iter().collect();
        let slot = parts
            .iter_mut()
            .find(|p| p.support.union(&support).count() <= n_max);
        match slot {
            Some(p) => {
                p.term_indices.push(i);
                p.support.extend(support);
            }
            None => parts.push(Partition {
                term_indices: vec![i],
                support,
            }),
        }
    }
    Ok(parts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::{Pauli, PauliTerm};
    use proptest::prelude::*;

    fn xs(n: usize, qubits: &[usize]) -> PauliTerm {
        let ops: Vec<_> = qubits.iter().map(|&q| (q, Pauli::X)).collect();
        PauliTerm::sparse(1.0, n, &ops).unwrap()
    }

    // Example terms X₃, X₁X₂, X₃X₄, X₁ written 0-based.
    fn table_input() -> Hamiltonian {
        Hamiltonian::new(4, vec![xs(4, &[2]), xs(4, &[0, 1]), xs(4, &[2, 3]), xs(4, &[0])]).unwrap()
    }

    #[test]
    fn sort_example() {
        assert_eq!(sort_terms(&table_input()), vec![3, 1, 0, 2]);
    }

    #[test]
    fn single_before_triple_on_same_top_qubit() {
        let h = Hamiltonian::new(3, vec![xs(3, &[2]), xs(3, &[0, 1, 2])]).unwrap();
        assert_eq!(sort_terms(&h), vec![0, 1]);
    }

    #[test]
    fn sorting_sorted_input_is_identity() {
        let h = Hamiltonian::new(4, vec![xs(4, &[0]), xs(4, &[0, 1]), xs(4, &[2]), xs(4, &[2, 3])]).unwrap();
        assert_eq!(sort_terms(&h), vec![0, 1, 2, 3]);
    }

    #[test]
    fn group_example() {
        let parts = greedy_partition(&table_input(), 3).unwrap();
        let groups: Vec<_> = parts.iter().map(|p| p.term_indices.clone()).collect();
        assert_eq!(groups, vec![vec![3, 1, 0], vec![2]]);
        assert_eq!(parts[0].support_vec(), vec![0, 1, 2]);
        assert_eq!(parts[1].support_vec(), vec![2, 3]);
    }

    #[test]
    fn single_term_single_partition() {
        let h = Hamiltonian::new(2, vec![xs(2, &[1])]).unwrap();
        assert_eq!(greedy_partition(&h, 3).unwrap().len(), 1);
    }

    #[test]
    fn heisenberg_pair_is_one_partition() {
        use crate::models::{build_heisenberg, GridSpec, ModelParams, Topology};
        let g = GridSpec::new(1, 2, Topology::Line).unwrap();
        let h = build_heisenberg(g, ModelParams::default()).unwrap();
        let parts = greedy_partition(&h, 3).unwrap();
        assert_eq!(parts.len(), 1);
        assert_eq!(parts[0].term_indices.len(), 3);
    }

    #[test]
    fn oversized_term_is_alone() {
        let h = Hamiltonian::new(5, vec![xs(5, &[0]), xs(5, &[0, 1, 2, 3]), xs(5, &[4])]).unwrap();
        let parts = greedy_partition(&h, 3).unwrap();
        let big = parts.iter().find(|p| p.term_indices.contains(&1)).unwrap();
        assert_eq!(big.term_indices, vec![1]);
    }

    #[test]
    fn zero_group_size_rejected() {
        assert!(greedy_partition(&table_input(), 0).is_err());
    }

    fn random_hamiltonian() -> impl Strategy<Value = Hamiltonian> {
        (2usize..8).prop_flat_map(|n| {
            proptest::collection::vec(proptest::collection::btree_set(0..n, 1..=4.min(n)), 1..20)
                .prop_map(move |sets| {
                    let terms = sets
                        .iter()
                        .map(|s| xs(n, &s.iter().copied().collect::<Vec<_>>()))
                        .collect();
                    Hamiltonian::new(n, terms).unwrap()
                })
        })
    }

    proptest! {
        #[test]
        fn partitions_are_exact_and_bounded(h in random_hamiltonian(), n_max in 1usize..5) {
            let parts = greedy_partition(&h, n_max).unwrap();
            let mut seen: Vec<usize> = parts.iter().flat_map(|p| p.term_indices.clone()).collect();
            seen.sort();
            prop_assert_eq!(seen, (0..h.terms().len()).collect::<Vec<_>>());
            for p in &parts {
                let union: BTreeSet<usize> = p.term_indices.iter()
                    .flat_map(|&i| h.terms()[i].support()).collect();
                prop_assert_eq!(&union, &p.support);
                if p.term_indices.len() > 1 {
                    prop_assert!(p.support.len() <= n_max);
                }
                for &i in &p.term_indices {
                    if h.terms()[i].weight() > n_max {
                        prop_assert_eq!(p.term_indices.len(), 1);
                    }
                }
            }
            prop_assert_eq!(parts, greedy_partition(&h, n_max).unwrap());
        }

        #[test]
        fn sort_is_ordered_and_idempotent(h in random_hamiltonian()) {
            let order = sort_terms(&h);
            let key = |i: usize| (h.terms()[i].string().max_qubit(), h.terms()[i].weight());
            for w in order.windows(2) {
                prop_assert!(key(w[0]) <= key(w[1]));
            }
            let resorted = Hamiltonian::new(
                h.num_qubits(),
                order.iter().map(|&i| h.terms()[i].clone()).collect(),
            ).unwrap();
            prop_assert_eq!(sort_terms(&resorted), (0..order.len()).collect::<Vec<_>>());
        }
    }
}
