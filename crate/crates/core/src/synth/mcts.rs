//! Monte Carlo tree search over CNOT skeletons.
//!
//! Each node is a CNOT-only prefix. An iteration selects by UCT, expands one
//! untried CNOT, rolls out to the length budget with random CNOTs, fits the
//! dressed skeleton, and backs the reward up the path.

use std::collections::HashMap;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::circuit::{circuit_to_matrix, metrics, simplify, zyz_decompose, Circuit, Gate};
use super::fit::{fit_with_restarts, prune_u3, Ansatz, FitOptions, FitResult};
use crate::error::{Error, Result};
use crate::numerics::{phase_aligned_frobenius, qubits_of, unitarity_deviation, DenseMatrix, Stall};

pub type Cx = (usize, usize);

#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig {
    /// Accuracy threshold on the phase-aligned Frobenius error.
    pub epsilon: f64,
    /// CNOT budget; `None` picks [`default_max_cnots`] for the block size.
    pub max_cnots: Option<usize>,
    pub uct_c: f64,
    /// Search iterations.
    pub iterations: usize,
    pub gn_restarts: usize,
    pub gn_max_iters: usize,
    pub seed: u64,
    /// Stop as soon as an accurate circuit with at most this many CNOTs is found.
    pub early_stop_cnots: Option<usize>,
    /// Refit the winning skeleton without the `U3`s it can spare.
    pub prune_u3: bool,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            epsilon: 1e-8,
            max_cnots: None,
            uct_c: 0.5,
            iterations: 24,
            gn_restarts: 10,
            gn_max_iters: 200,
            seed: 0,
            early_stop_cnots: None,
            prune_u3: true,
        }
    }
}

/// 3 for two qubits (enough for any two-qubit unitary), 19 for three.
pub fn default_max_cnots(k: usize) -> usize {
    match k {
        0 | 1 => 0,
        2 => 3,
        3 => 19,
        // Parameter-count lower bound ⌈(4^k − 3k − 1)/4⌉ plus slack.
        k => (4usize.pow(k as u32) - 3 * k - 1).div_ceil(4) + 8,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthResult {
    /// Circuit on the block's `k` qubits, including global phase.
    pub circuit: Circuit,
    /// Phase-aligned Frobenius error, recomputed from the circuit.
    pub error: f64,
    pub cnot_count: usize,
    pub iterations_used: usize,
    pub converged: bool,
}

/// `Q/Nᵢ + c·√(ln N_p / Nᵢ)`; an unvisited child scores `+∞`.
pub fn uct_score(q: f64, n_i: u64, n_p: u64, c: f64) -> f64 {
    if n_i == 0 {
        return f64::INFINITY;
    }
    let n_p = n_p.max(1) as f64;
    q / n_i as f64 + c * (n_p.ln() / n_i as f64).sqrt()
}

/// `−cnots` for an accurate circuit, `−error` otherwise.
pub fn reward(error: f64, cnot_count: usize, epsilon: f64) -> f64 {
    if error < epsilon {
        -(cnot_count as f64)
    } else {
        -error
    }
}

#[derive(Clone, Debug)]
pub struct Node {
    pub skeleton: Vec<Cx>,
    pub q: f64,
    pub visits: u64,
    pub children: Vec<usize>,
    unexplored: Vec<Cx>,
}

fn actions(k: usize, last: Option<Cx>) -> Vec<Cx> {
    let mut out = Vec::new();
    for c in 0..k {
        for t in 0..k {
            if c != t && Some((c, t)) != last {
                out.push((c, t));
            }
        }
    }
    out
}

struct Candidate {
    circuit: Circuit,
    error: f64,
    cnots: usize,
    depth: usize,
    u3s: usize,
    fitted: Option<(Ansatz, FitResult)>,
}

impl Candidate {
    fn rank(&self, eps: f64) -> (bool, usize, usize, usize, f64) {
        let ok = self.error < eps;
        let m = |x: usize| if ok { x } else { 0 };
        (!ok, m(self.cnots), m(self.depth), m(self.u3s), self.error)
    }
}

/// Search state; kept public so tests can inspect visit bookkeeping.
pub struct Search<'a> {
    pub nodes: Vec<Node>,
    target: &'a DenseMatrix,
    k: usize,
    max_cnots: usize,
    cfg: SynthConfig,
    fit_opts: FitOptions,
    rng: ChaCha8Rng,
    memo: HashMap<Vec<Cx>, FitResult>,
    best: Option<Candidate>,
    pub iterations: usize,
    pub fits: usize,
}

impl<'a> Search<'a> {
    pub fn new(target: &'a DenseMatrix, cfg: &SynthConfig) -> Result<Self> {
        let k = qubits_of(target.as_ref());
        if target.nrows() != 1 << k || target.ncols() != target.nrows() {
            return Err(Error::DimensionMismatch {
                expected: 1 << k,
                found: target.nrows(),
            });
        }
        let dev = unitarity_deviation(target.as_ref());
        if dev > 1e-10 {
            return Err(Error::NotUnitary(dev));
        }
        if !(cfg.epsilon > 0.0) {
            return Err(Error::InvalidConfig("epsilon must be positive".into()));
        }
        let max_cnots = cfg.max_cnots.unwrap_or_else(|| default_max_cnots(k));
        let fit_opts = FitOptions {
            epsilon: cfg.epsilon,
            restarts: cfg.gn_restarts,
            max_iters: cfg.gn_max_iters,
            stall: Some(Stall {
                window: 12,
                min_ratio: 0.97,
            }),
            ..FitOptions::default()
        };
        Ok(Search {
            nodes: vec![Node {
                skeleton: Vec::new(),
                q: 0.0,
                visits: 0,
                children: Vec::new(),
                unexplored: if max_cnots > 0 { actions(k, None) } else { Vec::new() },
            }],
            target,
            k,
            max_cnots,
            cfg: cfg.clone(),
            fit_opts,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            memo: HashMap::new(),
            best: None,
            iterations: 0,
            fits: 0,
        })
    }

    fn fit(&mut self, skeleton: &[Cx]) -> Result<FitResult> {
        if let Some(r) = self.memo.get(skeleton) {
            return Ok(r.clone());
        }
        let ansatz = Ansatz::new(self.k, skeleton)?;
        let r = fit_with_restarts(&ansatz, self.target, &self.fit_opts, &mut self.rng)?;
        self.fits += 1;
        self.memo.insert(skeleton.to_vec(), r.clone());
        Ok(r)
    }

    /// Simplified circuit for a fitted skeleton, with its independently
    /// recomputed error.
    fn realize(&mut self, skeleton: &[Cx], fit: &FitResult) -> Result<Candidate> {
        self.realize_ansatz(Ansatz::new(self.k, skeleton)?, fit)
    }

    fn realize_ansatz(&mut self, ansatz: Ansatz, fit: &FitResult) -> Result<Candidate> {
        let raw = ansatz.to_circuit(&fit.params, fit.phase)?;
        let simplified = simplify(&raw);
        let err = |c: &Circuit| -> Result<f64> {
            let u = circuit_to_matrix(c, usize::MAX)?;
            Ok(phase_aligned_frobenius(u.as_ref(), self.target.as_ref()))
        };
        let (e_raw, e_simple) = (err(&raw)?, err(&simplified)?);
        let (circuit, error) = if e_simple <= e_raw + 1e-10 {
            (simplified, e_simple)
        } else {
            (raw, e_raw)
        };
        let m = metrics(&circuit);
        Ok(Candidate {
            circuit,
            error,
            cnots: m.cnot_count,
            depth: m.depth,
            u3s: m.u3_count,
            fitted: Some((ansatz, fit.clone())),
        })
    }

    /// Offer a pruned version of the best accurate candidate.
    fn prune_best(&mut self) -> Result<()> {
        let Some(b) = self.best.as_ref().filter(|b| b.error < self.cfg.epsilon) else {
            return Ok(());
        };
        let Some((ansatz, fit)) = b.fitted.clone() else {
            return Ok(());
        };
        let (a, f) = prune_u3(&ansatz, self.target, &fit, &self.fit_opts)?;
        if a.num_u3() < ansatz.num_u3() {
            let cand = self.realize_ansatz(a, &f)?;
            self.offer(cand);
        }
        Ok(())
    }

    fn offer(&mut self, cand: Candidate) {
        let eps = self.cfg.epsilon;
        let better = match &self.best {
            None => true,
            Some(b) => cand.rank(eps) < b.rank(eps),
        };
        if better {
            self.best = Some(cand);
        }
    }

    fn done(&self) -> bool {
        match (&self.best, self.cfg.early_stop_cnots) {
            (Some(b), Some(bound)) => b.error < self.cfg.epsilon && b.cnots <= bound,
            _ => false,
        }
    }

    /// Fit the random completion of `prefix`; on success shorten it by
    /// bisecting over prefix lengths. Returns the reward.
    fn rollout(&mut self, prefix: &[Cx]) -> Result<f64> {
        let mut skel = prefix.to_vec();
        while skel.len() < self.max_cnots {
            let opts = actions(self.k, skel.last().copied());
            skel.push(*opts.choose(&mut self.rng).expect("k ≥ 2"));
        }
        let full = self.fit(&skel)?;
        let eps = self.cfg.epsilon;
        if full.error >= eps {
            let cand = self.realize(&skel, &full)?;
            let r = reward(cand.error, cand.cnots, eps);
            self.offer(cand);
            return Ok(r);
        }
        // Shortest accurate prefix. The tree node's own skeleton is tried
        // first; below or above it, bisect assuming accuracy is monotone in
        // length. The empty skeleton was ruled out before the search started.
        let (mut lo, mut hi, mut hi_fit) = (0usize, skel.len(), full);
        let depth = prefix.len();
        if depth > 0 && depth < hi {
            let f = self.fit(&skel[..depth])?;
            if f.error < eps {
                hi = depth;
                hi_fit = f;
            } else {
                lo = depth;
            }
        }
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            let f = self.fit(&skel[..mid])?;
            if f.error < eps {
                hi = mid;
                hi_fit = f;
            } else {
                lo = mid;
            }
        }
        let cand = self.realize(&skel[..hi], &hi_fit)?;
        let r = reward(cand.error, cand.cnots, eps);
        self.offer(cand);
        Ok(r)
    }

    fn select_child(&mut self, node: usize) -> usize {
        let n_p = self.nodes[node].visits;
        let c = self.cfg.uct_c;
        let scores: Vec<f64> = self.nodes[node]
            .children
            .iter()
            .map(|&ch| uct_score(self.nodes[ch].q, self.nodes[ch].visits, n_p, c))
            .collect();
        let top = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let ties: Vec<usize> = (0..scores.len()).filter(|&i| scores[i] == top).collect();
        self.nodes[node].children[*ties.choose(&mut self.rng).unwrap()]
    }

    /// One select / expand / rollout / backpropagate cycle.
    pub fn iterate(&mut self) -> Result<()> {
        let mut path = vec![0usize];
        let mut cur = 0usize;
        loop {
            if !self.nodes[cur].unexplored.is_empty() {
                let i = self.rng.random_range(0..self.nodes[cur].unexplored.len());
                let action = self.nodes[cur].unexplored.swap_remove(i);
                let mut skeleton = self.nodes[cur].skeleton.clone();
                skeleton.push(action);
                let unexplored = if skeleton.len() < self.max_cnots {
                    actions(self.k, Some(action))
                } else {
                    Vec::new()
                };
                self.nodes.push(Node {
                    skeleton,
                    q: 0.0,
                    visits: 0,
                    children: Vec::new(),
                    unexplored,
                });
                let id = self.nodes.len() - 1;
                self.nodes[cur].children.push(id);
                path.push(id);
                cur = id;
                break;
            }
            if self.nodes[cur].children.is_empty() {
                break;
            }
            cur = self.select_child(cur);
            path.push(cur);
        }
        let prefix = self.nodes[cur].skeleton.clone();
        let r = self.rollout(&prefix)?;
        for &id in &path {
            self.nodes[id].visits += 1;
            self.nodes[id].q += r;
        }
        self.iterations += 1;
        Ok(())
    }

    pub fn best_cnots(&self) -> Option<usize> {
        self.best.as_ref().filter(|b| b.error < self.cfg.epsilon).map(|b| b.cnots)
    }

    fn finish(self) -> SynthResult {
        let b = self.best.expect("search produced a candidate");
        SynthResult {
            converged: b.error < self.cfg.epsilon,
            error: b.error,
            cnot_count: b.cnots,
            circuit: b.circuit,
            iterations_used: self.iterations,
        }
    }

    /// Full synthesis: single-qubit and zero-CNOT shortcuts, then the search.
    pub fn run(mut self) -> Result<SynthResult> {
        if self.k == 0 {
            let mut c = Circuit::new(0);
            c.set_phase(self.target[(0, 0)].arg());
            self.offer(Candidate {
                circuit: c,
                error: 0.0,
                cnots: 0,
                depth: 0,
                u3s: 0,
                fitted: None,
            });
            return Ok(self.finish());
        }
        if self.k == 1 {
            let t = self.target;
            let m = [[t[(0, 0)], t[(0, 1)]], [t[(1, 0)], t[(1, 1)]]];
            let (theta, phi, lambda, gamma) = zyz_decompose(&m);
            let c = Circuit::from_gates(1, vec![Gate::u3(0, theta, phi, lambda)], gamma)?;
            let fit = simplify(&c);
            let u = circuit_to_matrix(&fit, usize::MAX)?;
            let error = phase_aligned_frobenius(u.as_ref(), t.as_ref());
            let u3s = fit.gates().len();
            self.offer(Candidate {
                circuit: fit,
                error,
                cnots: 0,
                depth: u3s,
                u3s,
                fitted: None,
            });
            return Ok(self.finish());
        }
        let f0 = self.fit(&[])?;
        let c0 = self.realize(&[], &f0)?;
        self.offer(c0);
        if self.best_cnots() == Some(0) || self.max_cnots == 0 {
            return Ok(self.finish());
        }
        for _ in 0..self.cfg.iterations {
            self.iterate()?;
            if self.done() {
                break;
            }
        }
        if self.cfg.prune_u3 {
            self.prune_best()?;
        }
        Ok(self.finish())
    }
}

/// Synthesize a `u3`/`cx` circuit for the unitary `target` on `k` qubits.
///
/// A result with `converged == false` is best-effort; callers fall back to
/// exact constructions.
pub fn synthesize(target: &DenseMatrix, cfg: &SynthConfig) -> Result<SynthResult> {
    Search::new(target, cfg)?.run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{embed, expm_i_hermitian, identity, DENSE_LIMIT};
    use crate::pauli::{to_matrix, PauliTerm};
    use crate::synth::circuit::cnot_matrix;

    #[test]
    fn uct_examples() {
        let v = uct_score(-6.0, 1, 2, 0.5);
        assert!((v - (-6.0 + 0.5 * 2f64.ln().sqrt())).abs() < 1e-15);
        assert!((v - -5.5837).abs() < 1e-3);
        assert_eq!(uct_score(-3.0, 2, 10, 0.0), -1.5);
        assert!(uct_score(-1.0, 1, 10, 0.5) > uct_score(-2.0, 2, 10, 0.5));
        assert_eq!(uct_score(0.0, 0, 5, 0.5), f64::INFINITY);
    }

    #[test]
    fn reward_examples() {
        assert_eq!(reward(1e-9, 6, 1e-8), -6.0);
        assert_eq!(reward(0.3, 6, 1e-8), -0.3);
        assert_eq!(reward(0.0, 0, 1e-8), 0.0);
        assert!(reward(1e-9, 5, 1e-8) > reward(1e-9, 6, 1e-8));
    }

    #[test]
    fn identity_needs_no_cnots() {
        let r = synthesize(&identity(8), &SynthConfig::default()).unwrap();
        assert!(r.converged);
        assert_eq!(r.cnot_count, 0);
        assert!(r.error < 1e-12, "{}", r.error);
    }

    #[test]
    fn embedded_cnot_needs_one() {
        let target = embed(cnot_matrix().as_ref(), &[0, 1], 3).unwrap();
        let cfg = SynthConfig {
            iterations: 6,
            ..SynthConfig::default()
        };
        let r = synthesize(&target, &cfg).unwrap();
        assert!(r.converged, "{}", r.error);
        assert_eq!(r.cnot_count, 1);
        let u = circuit_to_matrix(&r.circuit, DENSE_LIMIT).unwrap();
        assert!(phase_aligned_frobenius(u.as_ref(), target.as_ref()) < 1e-8);
    }

    #[test]
    fn heisenberg_pair_within_three_cnots() {
        let terms: Vec<PauliTerm> =
            ["XX", "YY", "ZZ"].iter().map(|s| PauliTerm::parse(1.0, s).unwrap()).collect();
        let h = to_matrix(&terms, &[0, 1], DENSE_LIMIT).unwrap();
        let target = expm_i_hermitian(h.as_ref(), 0.1).unwrap();
        let r = synthesize(&target, &SynthConfig::default()).unwrap();
        assert!(r.converged);
        assert!(r.cnot_count <= 3);
        // Exact global phase is carried by the circuit.
        let u = circuit_to_matrix(&r.circuit, DENSE_LIMIT).unwrap();
        assert!(crate::numerics::frobenius_norm((&u - &target).as_ref()) < 1e-8);
    }

    #[test]
    fn single_qubit_is_direct() {
        let h = to_matrix(&[PauliTerm::parse(0.4, "Y").unwrap()], &[0], DENSE_LIMIT).unwrap();
        let target = expm_i_hermitian(h.as_ref(), 1.0).unwrap();
        let r = synthesize(&target, &SynthConfig::default()).unwrap();
        assert!(r.converged && r.cnot_count == 0 && r.circuit.gates().len() == 1);
    }

    #[test]
    fn non_unitary_rejected() {
        let mut m = identity(4);
        m[(0, 0)] = crate::numerics::c64::new(2.0, 0.0);
        assert!(matches!(synthesize(&m, &SynthConfig::default()), Err(Error::NotUnitary(_))));
    }

    #[test]
    fn visits_are_conserved_and_search_is_deterministic() {
        let target = embed(cnot_matrix().as_ref(), &[2, 0], 3).unwrap();
        let cfg = SynthConfig {
            iterations: 5,
            max_cnots: Some(4),
            seed: 3,
            ..SynthConfig::default()
        };
        let mut s = Search::new(&target, &cfg).unwrap();
        for _ in 0..5 {
            s.iterate().unwrap();
        }
        assert_eq!(s.nodes[0].visits, 5);
        for node in &s.nodes {
            let child_sum: u64 = node.children.iter().map(|&c| s.nodes[c].visits).sum();
            assert!(node.visits >= child_sum);
        }
        for node in &s.nodes[1..] {
            assert!(node.visits >= 1);
        }
        let a = synthesize(&target, &cfg).unwrap();
        let b = synthesize(&target, &cfg).unwrap();
        assert_eq!(a, b);
    }
}
