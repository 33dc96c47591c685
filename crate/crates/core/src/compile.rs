//! End-to-end compilation: Hamiltonian in, `u3`/`cx` circuit and report out.
//!
//! Randomness derives from one seed. Intra-group shuffling uses
//! `derive_seed(seed, [step, half, group])`; synthesis of the block for
//! partition `p` at time step `dt` uses
//! `derive_seed(seed, [SYNTH_STREAM, p, dt.to_bits()])`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{apply_local, dense_dim, identity, phase_aligned_distance, phase_aligned_spectral, DenseMatrix, DENSE_LIMIT};
use crate::partition::{greedy_partition, Partition};
use crate::pauli::{Hamiltonian, PauliTerm};
use crate::qasm;
use crate::schedule::{
    block_matrix, build_conflict_graph, build_trotter_plan, derive_seed, estimate_error, exact_unitary,
    greedy_commuting_groups, merge_adjacent, partition_terms, plan_unitary, shuffle_within_groups, BoundMode,
    ErrorEstimate, TrotterConfig, TrotterPlan,
};
use crate::synth::{
    circuit_to_matrix, metrics, pauli_exp_circuit, simplify, synthesize_cached, Circuit, SynthCache, SynthConfig,
};

pub const SYNTH_STREAM: u64 = 0x5359_4e54;
pub const REPORT_SCHEMA: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Kernpiler,
    /// Per-term ladders, first-order Trotter.
    Naive1,
    /// Per-term ladders, symmetric second-order Trotter.
    Naive2,
}

impl Method {
    /// Trotter order implied by a naive method.
    pub fn fixed_order(self) -> Option<usize> {
        match self {
            Method::Kernpiler => None,
            Method::Naive1 => Some(1),
            Method::Naive2 => Some(2),
        }
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kernpiler" => Ok(Method::Kernpiler),
            "naive1" => Ok(Method::Naive1),
            "naive2" => Ok(Method::Naive2),
            _ => Err(Error::InvalidConfig(format!("unknown method {s:?}"))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Kernpiler => "kernpiler",
            Method::Naive1 => "naive1",
            Method::Naive2 => "naive2",
        })
    }
}

#[derive(Clone, Debug)]
pub struct CompileOptions {
    pub method: Method,
    pub time: f64,
    /// Fixed step count; exclusive with `target_error`. Neither means 1.
    pub steps: Option<usize>,
    /// Smallest step count whose Trotter error (measured when dense,
    /// bounded otherwise) is at most this.
    pub target_error: Option<f64>,
    pub order: usize,
    pub n_max: usize,
    pub seed: u64,
    pub merge: bool,
    pub shuffle: bool,
    pub alternate_edges: bool,
    pub synth: SynthConfig,
    /// Skip dense error evaluation above this many qubits.
    pub dense_limit: usize,
    /// Zero the wall-clock field so reports are byte-reproducible.
    pub deterministic: bool,
    pub max_steps: usize,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions {
            method: Method::Kernpiler,
            time: 1.0,
            steps: None,
            target_error: None,
            order: 1,
            n_max: 3,
            seed: 0,
            merge: true,
            shuffle: true,
            alternate_edges: true,
            synth: SynthConfig::default(),
            dense_limit: DENSE_LIMIT,
            deterministic: false,
            max_steps: 4096,
        }
    }
}

impl CompileOptions {
    pub fn validate(&self) -> Result<()> {
        if let Some(o) = self.method.fixed_order() {
            if o != self.order {
                return Err(Error::InvalidConfig(format!(
                    "method {} is order {o}, but order {} was requested",
                    self.method, self.order
                )));
            }
        }
        if self.steps.is_some() && self.target_error.is_some() {
            return Err(Error::InvalidConfig("give either steps or a target error, not both".into()));
        }
        if let Some(e) = self.target_error {
            if !(e > 0.0 && e.is_finite()) {
                return Err(Error::InvalidConfig(format!("target error must be positive, got {e}")));
            }
        }
        self.trotter(self.steps.unwrap_or(1)).validate()
    }

    fn trotter(&self, steps: usize) -> TrotterConfig {
        TrotterConfig {
            time: self.time,
            steps,
            order: self.order,
            seed: self.seed,
            n_max: self.n_max,
            alternate_edges: self.alternate_edges,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockStats {
    /// Block exponentials in the final plan (after merging).
    pub total: usize,
    pub synthesized: usize,
    /// Blocks emitted as Pauli ladders: wide singletons, unconverged or
    /// cheaper-as-ladder commuting blocks.
    pub ladder: usize,
    pub cache_hits: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompileReport {
    pub schema: u32,
    pub method: Method,
    pub num_qubits: usize,
    pub num_terms: usize,
    pub cnot_count: usize,
    pub u3_count: usize,
    pub depth: usize,
    pub steps: usize,
    pub order: usize,
    pub t: f64,
    pub n_max: usize,
    pub spectral_error: Option<f64>,
    pub frobenius_error: Option<f64>,
    pub predicted_bounds: ErrorEstimate,
    pub seed: u64,
    pub wall_time_ms: u64,
    /// Coefficient of the identity component, which only contributes
    /// the global phase `e^{i·offset·t}` and is not emitted.
    pub global_phase_offset: f64,
    pub blocks: BlockStats,
}

#[derive(Clone, Debug)]
pub struct Compiled {
    pub circuit: Circuit,
    pub report: CompileReport,
}

impl Compiled {
    pub fn qasm(&self) -> String {
        qasm::emit(&self.circuit)
    }
}

fn singletons(h: &Hamiltonian) -> Vec<Partition> {
    h.terms()
        .iter()
        .enumerate()
        .map(|(i, t)| Partition {
            term_indices: vec![i],
            support: t.support().into_iter().collect(),
        })
        .collect()
}

/// `s^k` by repeated squaring.
fn power(s: &DenseMatrix, mut k: usize) -> DenseMatrix {
    let mut acc = identity(s.nrows());
    let mut base = s.clone();
    while k > 0 {
        if k & 1 == 1 {
            acc = &base * &acc;
        }
        k >>= 1;
        if k > 0 {
            base = &base * &base;
        }
    }
    acc
}

/// One naive step: `Π_j exp(i·dt·H_j)` in Hamiltonian order, mirrored for order 2.
fn naive_step(h: &Hamiltonian, dt: f64, order: usize, dense_limit: usize) -> Result<DenseMatrix> {
    let n = h.num_qubits();
    let mut u = identity(dense_dim(n, dense_limit)?);
    let parts = singletons(h);
    let sub = if order == 1 { dt } else { dt / 2.0 };
    let mut mats = Vec::with_capacity(parts.len());
    for p in &parts {
        mats.push(block_matrix(h, p, sub)?);
    }
    let mut idx: Vec<usize> = (0..parts.len()).collect();
    if order == 2 {
        idx.extend((0..parts.len()).rev());
    }
    for i in idx {
        apply_local(&mut u, mats[i].as_ref(), &parts[i].support_vec(), n)?;
    }
    Ok(u)
}

/// Per-term Trotter product in Hamiltonian order (mirrored for order 2).
pub fn naive_unitary(h: &Hamiltonian, time: f64, steps: usize, order: usize, dense_limit: usize) -> Result<DenseMatrix> {
    let step = naive_step(h, time / steps as f64, order, dense_limit)?;
    Ok(power(&step, steps))
}

/// Unitary of an unmerged plan, built from its first two steps: plans repeat
/// with period two (edge-group alternation), so `U = S₀·(S₁S₀)^{⌊N/2⌋}`.
/// Falls back to the block-by-block product if the plan is not periodic.
pub fn periodic_plan_unitary(
    plan: &TrotterPlan,
    h: &Hamiltonian,
    partitions: &[Partition],
    dense_limit: usize,
) -> Result<DenseMatrix> {
    let steps = plan.config.steps;
    let signature = |k: usize| -> Vec<(usize, u64, usize)> {
        plan.blocks
            .iter()
            .filter(|b| b.step == k)
            .map(|b| (b.partition, b.dt.to_bits(), b.half))
            .collect()
    };
    let sig = [signature(0), signature(1)];
    let per_step: usize = sig.iter().map(Vec::len).sum::<usize>();
    let periodic = steps < 3
        || (plan.blocks.len() * 2 == per_step * steps
            && plan.blocks.windows(2).all(|w| w[0].step <= w[1].step)
            && (2..steps.min(4)).all(|k| signature(k) == sig[k % 2]));
    if !periodic {
        return plan_unitary(plan, h, partitions, dense_limit);
    }
    let n = h.num_qubits();
    let mut s = [identity(dense_dim(n, dense_limit)?), identity(dense_dim(n, dense_limit)?)];
    for (k, si) in s.iter_mut().enumerate().take(steps.min(2)) {
        for &(p, dt, _) in &sig[k] {
            let m = block_matrix(h, &partitions[p], f64::from_bits(dt))?;
            apply_local(si, m.as_ref(), &partitions[p].support_vec(), n)?;
        }
    }
    let pair = &s[1] * &s[0];
    let mut u = power(&pair, steps / 2);
    if steps % 2 == 1 {
        u = &s[0] * &u;
    }
    Ok(u)
}

/// Smallest `N ≤ max` with `err(N) ≤ target` (and `err(N−1) > target`).
///
/// Guesses come from the leading-order model `err ∝ N^{-order}`, kept
/// inside a shrinking bracket with a bisection fallback.
fn smallest_steps(mut err: impl FnMut(usize) -> Result<f64>, target: f64, order: usize, max: usize) -> Result<usize> {
    let mut seen: HashMap<usize, f64> = HashMap::new();
    let (mut lo, mut hi) = (0usize, None::<usize>);
    let mut n = 1;
    loop {
        let e = err(n)?;
        seen.insert(n, e);
        if e <= target {
            if n > lo {
                hi = Some(hi.map_or(n, |h: usize| h.min(n)));
            }
        } else if hi.is_none_or(|h| n < h) {
            lo = lo.max(n);
        }
        if let Some(h) = hi {
            if h - lo <= 1 {
                return Ok(h);
            }
        } else if lo >= max {
            return Err(Error::InvalidConfig(format!(
                "target error {target} not reached within {max} steps"
            )));
        }
        let guess = (n as f64 * (e / target).powf(1.0 / order as f64)).ceil();
        let guess = if guess.is_finite() { guess as usize } else { max };
        n = match hi {
            None => guess.max(lo + 1).min(max),
            Some(h) => guess.clamp(lo + 1, h - 1),
        };
        if seen.contains_key(&n) {
            n = match hi {
                None => (lo * 2).min(max),
                Some(h) => (lo + h) / 2,
            };
        }
    }
}

struct Pipeline {
    partitions: Vec<Partition>,
    graph: crate::schedule::ConflictGraph,
    groups: Vec<Vec<usize>>,
}

fn pipeline(h: &Hamiltonian, n_max: usize) -> Result<Pipeline> {
    let partitions = greedy_partition(h, n_max)?;
    let graph = build_conflict_graph(&partitions, h)?;
    let groups = greedy_commuting_groups(&graph);
    Ok(Pipeline {
        partitions,
        graph,
        groups,
    })
}

/// Step count `compile` would use: `opts.steps`, or the smallest meeting
/// `opts.target_error`.
pub fn required_steps(h: &Hamiltonian, opts: &CompileOptions) -> Result<usize> {
    opts.validate()?;
    choose_steps(h, opts, &pipeline(h, opts.n_max)?)
}

fn choose_steps(h: &Hamiltonian, opts: &CompileOptions, pipe: &Pipeline) -> Result<usize> {
    let Some(target) = opts.target_error else {
        return Ok(opts.steps.unwrap_or(1));
    };
    let n = h.num_qubits();
    if n <= opts.dense_limit {
        let exact = exact_unitary(h, opts.time, opts.dense_limit)?;
        return smallest_steps(
            |steps| {
                let u = match opts.method {
                    Method::Kernpiler => {
                        let plan = build_trotter_plan(&pipe.graph, &pipe.groups, &opts.trotter(steps))?;
                        periodic_plan_unitary(&plan, h, &pipe.partitions, opts.dense_limit)?
                    }
                    _ => naive_unitary(h, opts.time, steps, opts.order, opts.dense_limit)?,
                };
                Ok(phase_aligned_spectral(u.as_ref(), exact.as_ref()))
            },
            target,
            opts.order,
            opts.max_steps,
        );
    }
    // The leading-order bound scales as 1/N.
    let est = predicted(h, opts.method, &pipe.partitions, opts.time, 1)?;
    let bound = match opts.method {
        Method::Kernpiler => est.partitioned,
        _ => est.full,
    };
    let steps = ((bound / target).ceil() as usize).max(1);
    if steps > opts.max_steps {
        return Err(Error::InvalidConfig(format!(
            "target error {target} needs {steps} steps by the commutator bound (max {})",
            opts.max_steps
        )));
    }
    Ok(steps)
}

fn predicted(h: &Hamiltonian, method: Method, partitions: &[Partition], time: f64, steps: usize) -> Result<ErrorEstimate> {
    match method {
        Method::Kernpiler => estimate_error(h, partitions, time, steps, BoundMode::Dense),
        _ => estimate_error(h, &singletons(h), time, steps, BoundMode::Triangle),
    }
}

fn ladder_product(terms: &[PauliTerm], dt: f64, n: usize) -> Result<Circuit> {
    let mut c = Circuit::new(n);
    for t in terms {
        c.append(&pauli_exp_circuit(t, dt)?)?;
    }
    Ok(c)
}

fn mutually_commute(terms: &[PauliTerm]) -> Result<bool> {
    for (i, a) in terms.iter().enumerate() {
        for b in &terms[i + 1..] {
            if !a.string().commutes_with(b.string())? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Circuit on the partition's own support (local qubit `i` = `support[i]`).
fn realize_block(
    h: &Hamiltonian,
    p: &Partition,
    index: usize,
    dt: f64,
    opts: &CompileOptions,
    cache: &mut SynthCache,
    stats: &mut BlockStats,
) -> Result<Circuit> {
    let support = p.support_vec();
    let k = support.len();
    // Terms relabelled onto the local register.
    let local: Vec<PauliTerm> = partition_terms(h, p)
        .iter()
        .map(|t| {
            let ops: Vec<(usize, crate::pauli::Pauli)> = t
                .support()
                .into_iter()
                .map(|q| (support.binary_search(&q).expect("term inside its partition"), t.string().get(q)))
                .collect();
            PauliTerm::sparse(t.coefficient(), k, &ops)
        })
        .collect::<Result<_>>()?;
    if k > opts.n_max {
        stats.ladder += 1;
        return ladder_product(&local, dt, k);
    }
    let target = block_matrix(h, p, dt)?;
    let mut cfg = opts.synth.clone();
    cfg.seed = derive_seed(opts.seed, &[SYNTH_STREAM, index as u64, dt.to_bits()]);
    let hits = cache.hits;
    let r = synthesize_cached(&target, &cfg, cache)?;
    stats.cache_hits += cache.hits - hits;
    let ladder = if mutually_commute(&local)? || !r.converged {
        Some(simplify(&ladder_product(&local, dt, k)?))
    } else {
        None
    };
    match ladder {
        Some(l) if !r.converged || metrics(&l).cnot_count < r.cnot_count => {
            stats.ladder += 1;
            Ok(l)
        }
        _ => {
            stats.synthesized += 1;
            Ok(r.circuit)
        }
    }
}

fn kernpiler_circuit(
    h: &Hamiltonian,
    pipe: &Pipeline,
    plan: &TrotterPlan,
    opts: &CompileOptions,
    cache: &mut SynthCache,
    stats: &mut BlockStats,
) -> Result<Circuit> {
    let n = h.num_qubits();
    let mut out = Circuit::new(n);
    let mut local: HashMap<(usize, u64), Circuit> = HashMap::new();
    for b in &plan.blocks {
        let key = (b.partition, b.dt.to_bits());
        if !local.contains_key(&key) {
            let c = realize_block(h, &pipe.partitions[b.partition], b.partition, b.dt, opts, cache, stats)?;
            local.insert(key, c);
        }
        out.append_mapped(&local[&key], &pipe.partitions[b.partition].support_vec())?;
    }
    stats.total = plan.blocks.len();
    Ok(out)
}

fn naive_circuit(h: &Hamiltonian, time: f64, steps: usize, order: usize) -> Result<Circuit> {
    let n = h.num_qubits();
    let dt = time / steps as f64;
    let mut out = Circuit::new(n);
    for _ in 0..steps {
        if order == 1 {
            out.append(&ladder_product(h.terms(), dt, n)?)?;
        } else {
            out.append(&ladder_product(h.terms(), dt / 2.0, n)?)?;
            let rev: Vec<PauliTerm> = h.terms().iter().rev().cloned().collect();
            out.append(&ladder_product(&rev, dt / 2.0, n)?)?;
        }
    }
    Ok(out)
}

/// The kernpiler schedule `compile` would execute for `steps` steps.
pub fn schedule(h: &Hamiltonian, opts: &CompileOptions, steps: usize) -> Result<(Vec<Partition>, TrotterPlan)> {
    let pipe = pipeline(h, opts.n_max)?;
    let mut plan = build_trotter_plan(&pipe.graph, &pipe.groups, &opts.trotter(steps))?;
    if opts.merge {
        plan = merge_adjacent(&plan);
    }
    if opts.shuffle {
        plan = shuffle_within_groups(&plan, opts.seed);
    }
    Ok((pipe.partitions, plan))
}

pub fn compile(h: &Hamiltonian, opts: &CompileOptions, cache: &mut SynthCache) -> Result<Compiled> {
    opts.validate()?;
    let start = Instant::now();
    let pipe = pipeline(h, opts.n_max)?;
    let steps = choose_steps(h, opts, &pipe)?;
    let mut stats = BlockStats::default();
    let raw = match opts.method {
        Method::Kernpiler => {
            let (_, plan) = schedule(h, opts, steps)?;
            kernpiler_circuit(h, &pipe, &plan, opts, cache, &mut stats)?
        }
        m => naive_circuit(h, opts.time, steps, m.fixed_order().unwrap_or(1))?,
    };
    let circuit = simplify(&raw);
    let m = metrics(&circuit);
    let (spectral_error, frobenius_error) = if h.num_qubits() <= opts.dense_limit {
        let u = circuit_to_matrix(&circuit, opts.dense_limit)?;
        let exact = exact_unitary(h, opts.time, opts.dense_limit)?;
        let d = phase_aligned_distance(u.as_ref(), exact.as_ref());
        (Some(d.spectral), Some(d.frobenius))
    } else {
        (None, None)
    };
    let report = CompileReport {
        schema: REPORT_SCHEMA,
        method: opts.method,
        num_qubits: h.num_qubits(),
        num_terms: h.terms().len(),
        cnot_count: m.cnot_count,
        u3_count: m.u3_count,
        depth: m.depth,
        steps,
        order: opts.order,
        t: opts.time,
        n_max: opts.n_max,
        spectral_error,
        frobenius_error,
        predicted_bounds: predicted(h, opts.method, &pipe.partitions, opts.time, steps)?,
        seed: opts.seed,
        wall_time_ms: if opts.deterministic {
            0
        } else {
            start.elapsed().as_millis() as u64
        },
        global_phase_offset: h.identity_offset(),
        blocks: stats,
    };
    Ok(Compiled { circuit, report })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub num_qubits: usize,
    pub cnot_count: usize,
    pub u3_count: usize,
    pub depth: usize,
    pub t: f64,
    pub spectral_error: f64,
    pub frobenius_error: f64,
}

/// Reparse `qasm_text`, check its header metrics, and measure it against `exp(i·H·t)`.
pub fn verify(qasm_text: &str, h: &Hamiltonian, time: f64, dense_limit: usize) -> Result<VerifyReport> {
    let prog = qasm::parse(qasm_text)?;
    let c = prog.circuit;
    if c.num_qubits() != h.num_qubits() {
        return Err(Error::DimensionMismatch {
            expected: h.num_qubits(),
            found: c.num_qubits(),
        });
    }
    let m = metrics(&c);
    if let Some(claimed) = prog.claimed {
        if claimed != m {
            return Err(Error::Verification(format!(
                "header claims {claimed:?} but the gates give {m:?}"
            )));
        }
    }
    let u = circuit_to_matrix(&c, dense_limit)?;
    let exact = exact_unitary(h, time, dense_limit)?;
    let d = phase_aligned_distance(u.as_ref(), exact.as_ref());
    Ok(VerifyReport {
        num_qubits: c.num_qubits(),
        cnot_count: m.cnot_count,
        u3_count: m.u3_count,
        depth: m.depth,
        t: time,
        spectral_error: d.spectral,
        frobenius_error: d.frobenius,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionInfo {
    pub terms: Vec<usize>,
    pub support: Vec<usize>,
    pub paulis: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeReport {
    pub num_qubits: usize,
    pub num_terms: usize,
    pub n_max: usize,
    pub partitions: Vec<PartitionInfo>,
    pub conflict_edges: Vec<(usize, usize)>,
    pub groups: Vec<Vec<usize>>,
    pub group_sizes: Vec<usize>,
    pub t: f64,
    pub steps: usize,
    pub bounds: ErrorEstimate,
}

pub fn analyze(h: &Hamiltonian, n_max: usize, time: f64, steps: usize) -> Result<AnalyzeReport> {
    let pipe = pipeline(h, n_max)?;
    let partitions = pipe
        .partitions
        .iter()
        .map(|p| PartitionInfo {
            terms: p.term_indices.clone(),
            support: p.support_vec(),
            paulis: p.term_indices.iter().map(|&i| h.terms()[i].string().to_string()).collect(),
        })
        .collect();
    Ok(AnalyzeReport {
        num_qubits: h.num_qubits(),
        num_terms: h.terms().len(),
        n_max,
        partitions,
        conflict_edges: pipe.graph.edges(),
        group_sizes: pipe.groups.iter().map(Vec::len).collect(),
        groups: pipe.groups,
        t: time,
        steps,
        bounds: estimate_error(h, &pipe.partitions, time, steps.max(1), BoundMode::Dense)?,
    })
}
