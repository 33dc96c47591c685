//! Parameter fitting of a CNOT skeleton dressed with `U3` gates.

use std::f64::consts::TAU;

use faer::Mat;
use rand::Rng;

use super::circuit::{u3_matrix, Circuit, Gate, Mat2};
use crate::error::{Error, Result};
use crate::numerics::{c64, damped_least_squares, DenseMatrix, LeastSquaresProblem, LsqOptions, Stall};

/// Row-major `d × d` complex matrix; the fitting loop is dominated by tiny
/// products where a general-purpose matrix type costs more than the math.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Small {
    d: usize,
    a: Vec<c64>,
}

impl Small {
    fn identity(d: usize) -> Self {
        let mut a = vec![c64::new(0.0, 0.0); d * d];
        for i in 0..d {
            a[i * d + i] = c64::new(1.0, 0.0);
        }
        Small { d, a }
    }

    fn from_dense(m: &DenseMatrix) -> Self {
        let d = m.nrows();
        Small {
            d,
            a: (0..d * d).map(|idx| m[(idx / d, idx % d)]).collect(),
        }
    }

    /// `self ← (u on bit) · self`.
    fn left_u(&mut self, u: &Mat2, bit: usize) {
        let d = self.d;
        for i0 in 0..d {
            if i0 & bit != 0 {
                continue;
            }
            let i1 = i0 | bit;
            for j in 0..d {
                let (x, y) = (self.a[i0 * d + j], self.a[i1 * d + j]);
                self.a[i0 * d + j] = u[0][0] * x + u[0][1] * y;
                self.a[i1 * d + j] = u[1][0] * x + u[1][1] * y;
            }
        }
    }

    /// `self ← self · (u on bit)`.
    fn right_u(&mut self, u: &Mat2, bit: usize) {
        let d = self.d;
        for i in 0..d {
            let row = &mut self.a[i * d..(i + 1) * d];
            for j0 in 0..d {
                if j0 & bit != 0 {
                    continue;
                }
                let j1 = j0 | bit;
                let (x, y) = (row[j0], row[j1]);
                row[j0] = x * u[0][0] + y * u[1][0];
                row[j1] = x * u[0][1] + y * u[1][1];
            }
        }
    }

    /// `cx` is a self-inverse permutation, so left and right application
    /// swap rows and columns respectively.
    fn left_cx(&mut self, cbit: usize, tbit: usize) {
        let d = self.d;
        for i in 0..d {
            if i & cbit != 0 && i & tbit == 0 {
                let k = i | tbit;
                for j in 0..d {
                    self.a.swap(i * d + j, k * d + j);
                }
            }
        }
    }

    fn right_cx(&mut self, cbit: usize, tbit: usize) {
        let d = self.d;
        for i in 0..d {
            let row = &mut self.a[i * d..(i + 1) * d];
            for j in 0..d {
                if j & cbit != 0 && j & tbit == 0 {
                    row.swap(j, j | tbit);
                }
            }
        }
    }

    fn mul_into(&self, b: &Small, out: &mut Small) {
        let d = self.d;
        out.a.iter_mut().for_each(|x| *x = c64::new(0.0, 0.0));
        for i in 0..d {
            for k in 0..d {
                let x = self.a[i * d + k];
                if x == c64::new(0.0, 0.0) {
                    continue;
                }
                let brow = &b.a[k * d..(k + 1) * d];
                let orow = &mut out.a[i * d..(i + 1) * d];
                for (o, y) in orow.iter_mut().zip(brow) {
                    *o += x * y;
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Op {
    U3 { qubit: usize, offset: usize },
    Cx { control: usize, target: usize },
}

/// A `U3` on every qubit, then after each `cx` a `U3` on its control and target.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ansatz {
    k: usize,
    ops: Vec<Op>,
    params: usize,
}

impl Ansatz {
    pub fn new(k: usize, skeleton: &[(usize, usize)]) -> Result<Self> {
        let mut ops = Vec::new();
        let mut params = 0;
        let mut u3 = |q: usize, ops: &mut Vec<Op>| {
            ops.push(Op::U3 {
                qubit: q,
                offset: params,
            });
            params += 3;
        };
        for q in 0..k {
            u3(q, &mut ops);
        }
        for &(c, t) in skeleton {
            if c >= k || t >= k || c == t {
                return Err(Error::InvalidConfig(format!("bad cx ({c}, {t}) on {k} qubits")));
            }
            ops.push(Op::Cx { control: c, target: t });
            u3(c, &mut ops);
            u3(t, &mut ops);
        }
        Ok(Ansatz { k, ops, params })
    }

    pub fn num_params(&self) -> usize {
        self.params
    }

    pub fn num_qubits(&self) -> usize {
        self.k
    }

    fn bit(&self, q: usize) -> usize {
        1 << (self.k - 1 - q)
    }

    fn u3_at(params: &[f64], offset: usize) -> Mat2 {
        u3_matrix(params[offset], params[offset + 1], params[offset + 2])
    }

    fn matrix_small(&self, params: &[f64]) -> Small {
        let mut m = Small::identity(1 << self.k);
        for op in &self.ops {
            match *op {
                Op::U3 { qubit, offset } => m.left_u(&Self::u3_at(params, offset), self.bit(qubit)),
                Op::Cx { control, target } => m.left_cx(self.bit(control), self.bit(target)),
            }
        }
        m
    }

    pub fn matrix(&self, params: &[f64]) -> DenseMatrix {
        let m = self.matrix_small(params);
        DenseMatrix::from_fn(m.d, m.d, |i, j| m.a[i * m.d + j])
    }

    /// Number of `U3` slots.
    pub fn num_u3(&self) -> usize {
        self.params / 3
    }

    /// The ansatz with its `slot`-th `U3` removed, and `params` minus that
    /// gate's three angles.
    pub fn without_u3(&self, slot: usize, params: &[f64]) -> (Ansatz, Vec<f64>) {
        let mut ops = Vec::with_capacity(self.ops.len());
        let mut kept = Vec::with_capacity(params.len().saturating_sub(3));
        let mut seen = 0;
        for op in &self.ops {
            match *op {
                Op::U3 { qubit, offset } => {
                    if seen != slot {
                        ops.push(Op::U3 {
                            qubit,
                            offset: kept.len(),
                        });
                        kept.extend_from_slice(&params[offset..offset + 3]);
                    }
                    seen += 1;
                }
                cx => ops.push(cx),
            }
        }
        let params = kept.len();
        (Ansatz { k: self.k, ops, params }, kept)
    }

    /// The circuit at `params`, with the given global phase.
    pub fn to_circuit(&self, params: &[f64], phase: f64) -> Result<Circuit> {
        let mut c = Circuit::new(self.k);
        for op in &self.ops {
            c.push(match *op {
                Op::U3 { qubit, offset } => {
                    Gate::u3(qubit, params[offset], params[offset + 1], params[offset + 2])
                }
                Op::Cx { control, target } => Gate::cnot(control, target),
            })?;
        }
        c.set_phase(phase);
        Ok(c)
    }
}

fn u3_derivatives(theta: f64, phi: f64, lambda: f64) -> [Mat2; 3] {
    let (s, c) = (theta / 2.0).sin_cos();
    let z = c64::new(0.0, 0.0);
    let i = c64::new(0.0, 1.0);
    let el = c64::from_polar(1.0, lambda);
    let ep = c64::from_polar(1.0, phi);
    let epl = c64::from_polar(1.0, phi + lambda);
    [
        [
            [c64::new(-s / 2.0, 0.0), -el * (c / 2.0)],
            [ep * (c / 2.0), -epl * (s / 2.0)],
        ],
        [[z, z], [i * ep * s, i * epl * c]],
        [[z, -i * el * s], [z, i * epl * c]],
    ]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JacobianMode {
    Analytic,
    /// Central differences, for cross-checking.
    FiniteDifference,
}

/// `min_{θ,α} ‖e^{iα}·C(θ) − U‖_F` with `α = arg tr(C†U)` eliminated.
struct FitProblem<'a> {
    ansatz: &'a Ansatz,
    target: &'a Small,
    mode: JacobianMode,
}

impl FitProblem<'_> {
    fn aligned(&self, c: &Small) -> c64 {
        let mut tr = c64::new(0.0, 0.0);
        for (x, u) in c.a.iter().zip(&self.target.a) {
            tr += x.conj() * u;
        }
        if tr.norm() == 0.0 {
            c64::new(1.0, 0.0)
        } else {
            tr / tr.norm()
        }
    }

    fn write_residual(&self, c: &Small, out: &mut [f64]) {
        let ph = self.aligned(c);
        let dd = c.a.len();
        for (idx, (x, u)) in c.a.iter().zip(&self.target.a).enumerate() {
            let r = ph * x - u;
            out[idx] = r.re;
            out[dd + idx] = r.im;
        }
    }
}

impl LeastSquaresProblem for FitProblem<'_> {
    fn num_residuals(&self) -> usize {
        2 * self.target.a.len()
    }

    fn num_params(&self) -> usize {
        self.ansatz.params
    }

    fn residuals(&mut self, params: &[f64], out: &mut [f64]) {
        let c = self.ansatz.matrix_small(params);
        self.write_residual(&c, out);
    }

    fn jacobian(&mut self, params: &[f64], out: &mut Mat<f64>) {
        let a = self.ansatz;
        let d = 1usize << a.k;
        let dd = d * d;
        let c = a.matrix_small(params);
        let ph = self.aligned(&c);

        match self.mode {
            JacobianMode::Analytic => {
                // Prefix products before each op, suffix products after it.
                let mut prefixes = Vec::with_capacity(a.ops.len());
                let mut p = Small::identity(d);
                for op in &a.ops {
                    prefixes.push(p.clone());
                    match *op {
                        Op::U3 { qubit, offset } => p.left_u(&Ansatz::u3_at(params, offset), a.bit(qubit)),
                        Op::Cx { control, target } => p.left_cx(a.bit(control), a.bit(target)),
                    }
                }
                let mut s = Small::identity(d);
                let mut tmp = Small::identity(d);
                let mut prod = Small::identity(d);
                for (idx, op) in a.ops.iter().enumerate().rev() {
                    match *op {
                        Op::U3 { qubit, offset } => {
                            let ders = u3_derivatives(params[offset], params[offset + 1], params[offset + 2]);
                            for (k, du) in ders.iter().enumerate() {
                                tmp.a.copy_from_slice(&prefixes[idx].a);
                                tmp.left_u(du, a.bit(qubit));
                                s.mul_into(&tmp, &mut prod);
                                for (e, x) in prod.a.iter().enumerate() {
                                    let v = ph * x;
                                    out[(e, offset + k)] = v.re;
                                    out[(dd + e, offset + k)] = v.im;
                                }
                            }
                            s.right_u(&Ansatz::u3_at(params, offset), a.bit(qubit));
                        }
                        Op::Cx { control, target } => s.right_cx(a.bit(control), a.bit(target)),
                    }
                }
            }
            JacobianMode::FiniteDifference => {
                let h = 1e-6;
                let mut x = params.to_vec();
                let mut rp = vec![0.0; 2 * dd];
                let mut rm = vec![0.0; 2 * dd];
                for j in 0..params.len() {
                    // Derivative of e^{iα}C at fixed α, matching the analytic form.
                    x[j] = params[j] + h;
                    let cp = a.matrix_small(&x);
                    x[j] = params[j] - h;
                    let cm = a.matrix_small(&x);
                    x[j] = params[j];
                    for e in 0..dd {
                        let v = ph * (cp.a[e] - cm.a[e]) / (2.0 * h);
                        rp[e] = v.re;
                        rm[e] = v.im;
                    }
                    for e in 0..dd {
                        out[(e, j)] = rp[e];
                        out[(dd + e, j)] = rm[e];
                    }
                }
            }
        }

        // Project out the global-phase direction i·e^{iα}·C (variable projection).
        let v: Vec<f64> = c
            .a
            .iter()
            .map(|x| ph * x * c64::new(0.0, 1.0))
            .flat_map(|z| [z.re, z.im])
            .collect();
        let vv: f64 = v.iter().map(|x| x * x).sum();
        if vv == 0.0 {
            return;
        }
        for j in 0..a.params {
            let mut dot = 0.0;
            for e in 0..dd {
                dot += v[2 * e] * out[(e, j)] + v[2 * e + 1] * out[(dd + e, j)];
            }
            let s = dot / vv;
            for e in 0..dd {
                out[(e, j)] -= s * v[2 * e];
                out[(dd + e, j)] -= s * v[2 * e + 1];
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitOptions {
    /// Success threshold on the phase-aligned Frobenius error.
    pub epsilon: f64,
    pub restarts: usize,
    pub max_iters: usize,
    pub stall: Option<Stall>,
    pub jacobian: JacobianMode,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            epsilon: 1e-8,
            restarts: 10,
            max_iters: 200,
            stall: Some(Stall {
                window: 12,
                min_ratio: 0.97,
            }),
            jacobian: JacobianMode::Analytic,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitResult {
    pub params: Vec<f64>,
    /// `min_α ‖e^{iα}·C − U‖_F`.
    pub error: f64,
    /// Optimal global phase `α`.
    pub phase: f64,
    pub restarts_used: usize,
}

fn check_target(ansatz: &Ansatz, target: &DenseMatrix) -> Result<()> {
    let d = 1usize << ansatz.k;
    if target.nrows() != d || target.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: target.nrows(),
        });
    }
    Ok(())
}

/// Error and phase of the ansatz at `params`.
pub fn evaluate(ansatz: &Ansatz, target: &DenseMatrix, params: &[f64]) -> Result<(f64, f64)> {
    check_target(ansatz, target)?;
    let t = Small::from_dense(target);
    let prob = FitProblem {
        ansatz,
        target: &t,
        mode: JacobianMode::Analytic,
    };
    let c = ansatz.matrix_small(params);
    let mut r = vec![0.0; 2 * t.a.len()];
    prob.write_residual(&c, &mut r);
    Ok((r.iter().map(|x| x * x).sum::<f64>().sqrt(), prob.aligned(&c).arg()))
}

/// One damped Gauss-Newton descent from `init`.
pub fn gauss_newton_fit(
    ansatz: &Ansatz,
    target: &DenseMatrix,
    init: &[f64],
    opts: &FitOptions,
) -> Result<FitResult> {
    check_target(ansatz, target)?;
    let t = Small::from_dense(target);
    let mut prob = FitProblem {
        ansatz,
        target: &t,
        mode: opts.jacobian,
    };
    let lsq = LsqOptions {
        max_iters: opts.max_iters,
        target: opts.epsilon * 1e-3,
        stall: opts.stall,
        ..LsqOptions::default()
    };
    let rep = damped_least_squares(&mut prob, init, &lsq)?;
    let (error, phase) = evaluate(ansatz, target, &rep.params)?;
    Ok(FitResult {
        params: rep.params,
        error,
        phase,
        restarts_used: 1,
    })
}

/// Up to `opts.restarts` descents from uniform `[0, 2π)` starts; stops at the
/// first one below `epsilon`, otherwise returns the best.
pub fn fit_with_restarts<R: Rng>(
    ansatz: &Ansatz,
    target: &DenseMatrix,
    opts: &FitOptions,
    rng: &mut R,
) -> Result<FitResult> {
    let mut best: Option<FitResult> = None;
    for r in 0..opts.restarts.max(1) {
        let init: Vec<f64> = (0..ansatz.params).map(|_| rng.random_range(0.0..TAU)).collect();
        // A diverging restart just loses; it does not abort the fit.
        let res = match gauss_newton_fit(ansatz, target, &init, opts) {
            Ok(res) if res.error.is_finite() => res,
            _ => continue,
        };
        let done = res.error < opts.epsilon;
        if best.as_ref().is_none_or(|b| res.error < b.error) {
            best = Some(FitResult {
                restarts_used: r + 1,
                ..res
            });
        }
        if done {
            break;
        }
    }
    best.ok_or_else(|| Error::NonFinite("every fit restart diverged".into()))
}

/// Greedily drop `U3` slots that a warm-started refit can do without while
/// staying below `opts.epsilon`. `fit` must already be accurate.
pub fn prune_u3(ansatz: &Ansatz, target: &DenseMatrix, fit: &FitResult, opts: &FitOptions) -> Result<(Ansatz, FitResult)> {
    let mut cur = (ansatz.clone(), fit.clone());
    let mut slot = 0;
    while slot < cur.0.num_u3() {
        let (a, init) = cur.0.without_u3(slot, &cur.1.params);
        match gauss_newton_fit(&a, target, &init, opts) {
            Ok(f) if f.error < opts.epsilon => cur = (a, f),
            _ => slot += 1,
        }
    }
    Ok(cur)
}
