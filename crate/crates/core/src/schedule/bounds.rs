//! Leading-order commutator bounds on the Trotter error.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::graph::partition_terms;
use crate::error::Result;
use crate::numerics::hermitian_spectral_norm;
use crate::partition::Partition;
use crate::pauli::{commutator, to_matrix, Hamiltonian, PauliTerm};

/// Joint supports up to this many qubits get an exact spectral norm in
/// [`BoundMode::Dense`].
pub const BOUND_DENSE_LIMIT: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundMode {
    /// Exact `‖[H_A, H_B]‖₂` on the joint support when it is small enough,
    /// else the triangle-inequality sum.
    Dense,
    /// Always `Σ_{i∈A, j∈B} ‖[Hᵢ, Hⱼ]‖`: the partition commutator as the
    /// aggregate of its term commutators.
    Triangle,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorEstimate {
    pub full: f64,
    pub partitioned: f64,
    pub reduction: f64,
}

/// `‖[wP, vQ]‖₂` = `2|wv|` if the strings anticommute, else 0.
fn pair_norm(a: &PauliTerm, b: &PauliTerm) -> Result<f64> {
    Ok(if a.string().commutes_with(b.string())? {
        0.0
    } else {
        2.0 * (a.coefficient() * b.coefficient()).abs()
    })
}

fn triangle(a: &[PauliTerm], b: &[PauliTerm]) -> Result<f64> {
    let mut s = 0.0;
    for p in a {
        for q in b {
            s += pair_norm(p, q)?;
        }
    }
    Ok(s)
}

/// `‖[H_A, H_B]‖₂` per `mode`.
pub fn partition_commutator_norm(
    h: &Hamiltonian,
    a: &Partition,
    b: &Partition,
    mode: BoundMode,
) -> Result<f64> {
    if a.support.is_disjoint(&b.support) {
        return Ok(0.0);
    }
    let (ta, tb) = (partition_terms(h, a), partition_terms(h, b));
    let joint: BTreeSet<usize> = a.support.union(&b.support).copied().collect();
    if mode == BoundMode::Triangle || joint.len() > BOUND_DENSE_LIMIT {
        return triangle(&ta, &tb);
    }
    let c = commutator(&ta, &tb)?;
    if c.is_empty() {
        return Ok(0.0);
    }
    let order: Vec<usize> = joint.into_iter().collect();
    let m = to_matrix(&c, &order, BOUND_DENSE_LIMIT)?;
    hermitian_spectral_norm(m.as_ref())
}

/// Full bound `Σ_{i<j} ‖[Hᵢ,Hⱼ]‖·Δt²/2` and partitioned bound
/// `Σ_{A<B} ‖[H_A,H_B]‖·Δt²/2`, both summed over `steps` steps of `Δt = t/steps`.
pub fn estimate_error(
    h: &Hamiltonian,
    partitions: &[Partition],
    time: f64,
    steps: usize,
    mode: BoundMode,
) -> Result<ErrorEstimate> {
    let steps = steps.max(1) as f64;
    let dt = time / steps;
    let scale = steps * dt * dt / 2.0;
    let terms = h.terms();
    let mut full = 0.0;
    for i in 0..terms.len() {
        for j in i + 1..terms.len() {
            full += pair_norm(&terms[i], &terms[j])?;
        }
    }
    let mut part = 0.0;
    for a in 0..partitions.len() {
        for b in a + 1..partitions.len() {
            part += partition_commutator_norm(h, &partitions[a], &partitions[b], mode)?;
        }
    }
    let (full, partitioned) = (full * scale, part * scale);
    Ok(ErrorEstimate {
        full,
        partitioned,
        reduction: full - partitioned,
    })
}
