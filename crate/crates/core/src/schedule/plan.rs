use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::graph::{partition_terms, ConflictGraph};
use crate::error::{Error, Result};
use crate::numerics::{apply_local, dense_dim, expm_i_hermitian, identity, DenseMatrix};
use crate::partition::Partition;
use crate::pauli::{to_matrix, Hamiltonian};

#[derive(Clone, Debug, PartialEq)]
pub struct TrotterConfig {
    pub time: f64,
    pub steps: usize,
    /// 1 or 2.
    pub order: usize,
    pub seed: u64,
    pub n_max: usize,
    /// Swap the two edge groups on odd first-order steps so that equal groups
    /// meet at step boundaries.
    pub alternate_edges: bool,
}

impl Default for TrotterConfig {
    fn default() -> Self {
        TrotterConfig {
            time: 1.0,
            steps: 1,
            order: 1,
            seed: 0,
            n_max: 3,
            alternate_edges: true,
        }
    }
}

impl TrotterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::InvalidConfig("steps must be at least 1".into()));
        }
        if self.order != 1 && self.order != 2 {
            return Err(Error::InvalidConfig(format!("order must be 1 or 2, got {}", self.order)));
        }
        if !self.time.is_finite() {
            return Err(Error::NonFinite("evolution time".into()));
        }
        if self.n_max == 0 {
            return Err(Error::InvalidConfig("group size must be at least 1".into()));
        }
        Ok(())
    }
}

/// `exp(i·dt·H_p)` for partition `p`, tagged with where it was scheduled.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockExp {
    pub partition: usize,
    pub dt: f64,
    pub group: usize,
    pub step: usize,
    /// 0 for the forward half of a symmetric step (and all first-order steps), 1 for the mirror.
    pub half: usize,
}

/// Blocks in time order: `blocks[0]` acts first.
#[derive(Clone, Debug, PartialEq)]
pub struct TrotterPlan {
    pub blocks: Vec<BlockExp>,
    pub groups: Vec<Vec<usize>>,
    pub conflicts: ConflictGraph,
    pub config: TrotterConfig,
}

/// Largest group first, second-largest last, the rest in extraction order.
/// Ties go to the earlier group.
fn edge_order(groups: &[Vec<usize>]) -> Vec<usize> {
    let mut ids: Vec<usize> = (0..groups.len()).collect();
    if ids.len() < 2 {
        return ids;
    }
    let largest = |pool: &[usize]| {
        *pool
            .iter()
            .max_by(|&&a, &&b| groups[a].len().cmp(&groups[b].len()).then(b.cmp(&a)))
            .unwrap()
    };
    let first = largest(&ids);
    ids.retain(|&g| g != first);
    let last = largest(&ids);
    ids.retain(|&g| g != last);
    let mut out = vec![first];
    out.extend(ids);
    out.push(last);
    out
}

pub fn build_trotter_plan(
    conflicts: &ConflictGraph,
    groups: &[Vec<usize>],
    cfg: &TrotterConfig,
) -> Result<TrotterPlan> {
    cfg.validate()?;
    let mut covered: Vec<usize> = groups.iter().flatten().copied().collect();
    covered.sort();
    if covered != (0..conflicts.num_vertices()).collect::<Vec<_>>() {
        return Err(Error::InvalidConfig("groups must cover every partition exactly once".into()));
    }
    let order = edge_order(groups);
    let mut blocks = Vec::new();
    let push = |blocks: &mut Vec<BlockExp>, seq: &[usize], rev: bool, dt: f64, step, half| {
        for &g in seq {
            let members: Box<dyn Iterator<Item = &usize>> = if rev {
                Box::new(groups[g].iter().rev())
            } else {
                Box::new(groups[g].iter())
            };
            for &p in members {
                blocks.push(BlockExp {
                    partition: p,
                    dt,
                    group: g,
                    step,
                    half,
                });
            }
        }
    };
    let n = cfg.steps as f64;
    for step in 0..cfg.steps {
        if cfg.order == 1 {
            let mut seq = order.clone();
            if cfg.alternate_edges && step % 2 == 1 && seq.len() >= 2 {
                let last = seq.len() - 1;
                seq.swap(0, last);
            }
            push(&mut blocks, &seq, false, cfg.time / n, step, 0);
        } else {
            let dt = cfg.time / (2.0 * n);
            push(&mut blocks, &order, false, dt, step, 0);
            let mirrored: Vec<usize> = order.iter().rev().copied().collect();
            push(&mut blocks, &mirrored, true, dt, step, 1);
        }
    }
    Ok(TrotterPlan {
        blocks,
        groups: groups.to_vec(),
        conflicts: conflicts.clone(),
        config: cfg.clone(),
    })
}

/// Fold each block into an earlier block of the same partition when every
/// block in between commutes with it. Exact: only commuting factors move.
pub fn merge_adjacent(plan: &TrotterPlan) -> TrotterPlan {
    let mut out: Vec<BlockExp> = Vec::with_capacity(plan.blocks.len());
    for b in &plan.blocks {
        let mut target = None;
        for k in (0..out.len()).rev() {
            if out[k].partition == b.partition {
                target = Some(k);
                break;
            }
            if plan.conflicts.has_edge(out[k].partition, b.partition) {
                break;
            }
        }
        match target {
            Some(k) => out[k].dt += b.dt,
            None => out.push(b.clone()),
        }
    }
    TrotterPlan {
        blocks: out,
        ..plan.clone()
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a sub-stream seed: fold each word through SplitMix64.
pub fn derive_seed(seed: u64, words: &[u64]) -> u64 {
    words.iter().fold(splitmix(seed), |acc, &w| splitmix(acc ^ w))
}

/// Permute blocks inside every maximal run sharing (group, step, half).
/// Each run uses ChaCha8 seeded with `derive_seed(seed, [step, half, group])`.
pub fn shuffle_within_groups(plan: &TrotterPlan, seed: u64) -> TrotterPlan {
    let mut blocks = plan.blocks.clone();
    let key = |b: &BlockExp| (b.group, b.step, b.half);
    let mut start = 0;
    while start < blocks.len() {
        let mut end = start + 1;
        while end < blocks.len() && key(&blocks[end]) == key(&blocks[start]) {
            end += 1;
        }
        if end - start > 1 {
            let b = &blocks[start];
            let s = derive_seed(seed, &[b.step as u64, b.half as u64, b.group as u64]);
            blocks[start..end].shuffle(&mut ChaCha8Rng::seed_from_u64(s));
        }
        start = end;
    }
    TrotterPlan {
        blocks,
        ..plan.clone()
    }
}

/// `exp(i·dt·H_p)` on the partition's support (ascending qubit order).
pub fn block_matrix(h: &Hamiltonian, p: &Partition, dt: f64) -> Result<DenseMatrix> {
    let support = p.support_vec();
    let m = to_matrix(&partition_terms(h, p), &support, usize::MAX)?;
    expm_i_hermitian(m.as_ref(), dt)
}

/// Ordered product of all block unitaries on the full register.
pub fn plan_unitary(
    plan: &TrotterPlan,
    h: &Hamiltonian,
    partitions: &[Partition],
    dense_limit: usize,
) -> Result<DenseMatrix> {
    let n = h.num_qubits();
    let mut u = identity(dense_dim(n, dense_limit)?);
    let mut cache: HashMap<(usize, u64), DenseMatrix> = HashMap::new();
    for b in &plan.blocks {
        let key = (b.partition, b.dt.to_bits());
        if !cache.contains_key(&key) {
            cache.insert(key, block_matrix(h, &partitions[b.partition], b.dt)?);
        }
        apply_local(&mut u, cache[&key].as_ref(), &partitions[b.partition].support_vec(), n)?;
    }
    Ok(u)
}

/// `exp(i·t·H)` without the identity offset.
pub fn exact_unitary(h: &Hamiltonian, t: f64, dense_limit: usize) -> Result<DenseMatrix> {
    dense_dim(h.num_qubits(), dense_limit)?;
    let m = h.to_matrix(dense_limit)?;
    expm_i_hermitian(m.as_ref(), t)
}
