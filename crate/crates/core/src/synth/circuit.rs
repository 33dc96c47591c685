//! `u3`/`cx` circuits, single-qubit algebra, peephole simplification and metrics.
//!
//! `U3(θ, φ, λ) = [[cos θ/2, −e^{iλ} sin θ/2], [e^{iφ} sin θ/2, e^{i(φ+λ)} cos θ/2]]`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::numerics::{apply_local, c64, dense_dim, identity, DenseMatrix};

pub type Mat2 = [[c64; 2]; 2];

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Gate {
    U3 {
        qubit: usize,
        theta: f64,
        phi: f64,
        lambda: f64,
    },
    Cnot {
        control: usize,
        target: usize,
    },
}

impl Gate {
    pub fn u3(qubit: usize, theta: f64, phi: f64, lambda: f64) -> Self {
        Gate::U3 {
            qubit,
            theta,
            phi,
            lambda,
        }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Gate::Cnot { control, target }
    }

    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::U3 { qubit, .. } => vec![qubit],
            Gate::Cnot { control, target } => vec![control, target],
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        for q in self.qubits() {
            if q >= n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: q + 1,
                });
            }
        }
        match *self {
            Gate::Cnot { control, target } if control == target => Err(Error::InvalidConfig(
                format!("cx with control == target == {control}"),
            )),
            Gate::U3 {
                theta, phi, lambda, ..
            } if !(theta.is_finite() && phi.is_finite() && lambda.is_finite()) => {
                Err(Error::NonFinite("u3 angle".into()))
            }
            _ => Ok(()),
        }
    }

    /// Same gate on relabelled qubits.
    pub fn remap(&self, map: &[usize]) -> Gate {
        match *self {
            Gate::U3 {
                qubit,
                theta,
                phi,
                lambda,
            } => Gate::u3(map[qubit], theta, phi, lambda),
            Gate::Cnot { control, target } => Gate::cnot(map[control], map[target]),
        }
    }
}

/// `e^{i·phase}` times the gate product (first gate applied first).
#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    n: usize,
    gates: Vec<Gate>,
    phase: f64,
}

impl Circuit {
    pub fn new(n: usize) -> Self {
        Circuit {
            n,
            gates: Vec::new(),
            phase: 0.0,
        }
    }

    pub fn from_gates(n: usize, gates: Vec<Gate>, phase: f64) -> Result<Self> {
        let mut c = Circuit::new(n);
        for g in gates {
            c.push(g)?;
        }
        c.add_phase(phase);
        Ok(c)
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }

    pub fn push(&mut self, g: Gate) -> Result<()> {
        g.validate(self.n)?;
        self.gates.push(g);
        Ok(())
    }

    /// Add to the global phase, kept in `(−π, π]`.
    pub fn add_phase(&mut self, phi: f64) {
        self.phase = wrap_angle(self.phase + phi);
    }

    pub fn set_phase(&mut self, phi: f64) {
        self.phase = wrap_angle(phi);
    }

    /// Append `other` (acting after `self`), relabelling its qubits via `map`.
    pub fn append_mapped(&mut self, other: &Circuit, map: &[usize]) -> Result<()> {
        for g in &other.gates {
            self.push(g.remap(map))?;
        }
        self.add_phase(other.phase);
        Ok(())
    }

    pub fn append(&mut self, other: &Circuit) -> Result<()> {
        let map: Vec<usize> = (0..other.n).collect();
        self.append_mapped(other, &map)
    }

    pub fn inverse(&self) -> Circuit {
        let gates = self
            .gates
            .iter()
            .rev()
            .map(|g| match *g {
                // U3(θ,φ,λ)† = U3(−θ, −λ, −φ)
                Gate::U3 {
                    qubit,
                    theta,
                    phi,
                    lambda,
                } => Gate::u3(qubit, -theta, -lambda, -phi),
                cx => cx,
            })
            .collect();
        Circuit {
            n: self.n,
            gates,
            phase: wrap_angle(-self.phase),
        }
    }
}

pub fn wrap_angle(a: f64) -> f64 {
    let r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

pub fn u3_matrix(theta: f64, phi: f64, lambda: f64) -> Mat2 {
    let (s, c) = (theta / 2.0).sin_cos();
    [
        [c64::new(c, 0.0), -c64::from_polar(s, lambda)],
        [c64::from_polar(s, phi), c64::from_polar(c, phi + lambda)],
    ]
}

pub fn mat2_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[c64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// Angles `(θ, φ, λ, γ)` with `m = e^{iγ}·U3(θ, φ, λ)` for unitary `m`.
pub fn zyz_decompose(m: &Mat2) -> (f64, f64, f64, f64) {
    let c = m[0][0].norm();
    let s = m[1][0].norm();
    let theta = 2.0 * s.atan2(c);
    let gamma = if c >= s {
        m[0][0].arg()
    } else {
        // Each angle is read off an entry whose magnitude weights its noise.
        m[1][0].arg() + (-m[0][1]).arg() - m[1][1].arg()
    };
    let phi = m[1][0].arg() - gamma;
    let lambda = m[1][1].arg() - gamma - phi;
    (theta, wrap_angle(phi), wrap_angle(lambda), wrap_angle(gamma))
}

/// Phase `γ` with `m ≈ e^{iγ}·I` (distance below `tol`), if any.
fn identity_phase(m: &Mat2, tol: f64) -> Option<f64> {
    let g = m[0][0].arg();
    let rot = c64::from_polar(1.0, -g);
    let d = (m[0][0] * rot - 1.0).norm_sqr()
        + (m[1][1] * rot - 1.0).norm_sqr()
        + m[0][1].norm_sqr()
        + m[1][0].norm_sqr();
    (d.sqrt() < tol).then_some(g)
}

const IDENTITY_TOL: f64 = 1e-12;

#[derive(Clone, Copy)]
struct Run {
    m: Mat2,
    count: usize,
    first: Gate,
}

fn simplify_once(c: &Circuit) -> Circuit {
    let n = c.n;
    let mut out: Vec<Option<Gate>> = Vec::with_capacity(c.gates.len());
    let mut wire: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut pending: Vec<Option<Run>> = vec![None; n];
    let mut phase = c.phase;

    let flush = |q: usize,
                     pending: &mut Vec<Option<Run>>,
                     out: &mut Vec<Option<Gate>>,
                     wire: &mut Vec<Vec<usize>>,
                     phase: &mut f64| {
        let Some(run) = pending[q].take() else {
            return;
        };
        if let Some(g) = identity_phase(&run.m, IDENTITY_TOL) {
            *phase += g;
            return;
        }
        let gate = if run.count == 1 {
            run.first
        } else {
            let (theta, phi, lambda, gamma) = zyz_decompose(&run.m);
            *phase += gamma;
            Gate::u3(q, theta, phi, lambda)
        };
        wire[q].push(out.len());
        out.push(Some(gate));
    };

    for &g in &c.gates {
        match g {
            Gate::U3 {
                qubit,
                theta,
                phi,
                lambda,
            } => {
                let u = u3_matrix(theta, phi, lambda);
                pending[qubit] = Some(match pending[qubit] {
                    Some(run) => Run {
                        m: mat2_mul(&u, &run.m),
                        count: run.count + 1,
                        first: run.first,
                    },
                    None => Run {
                        m: u,
                        count: 1,
                        first: g,
                    },
                });
            }
            Gate::Cnot { control, target } => {
                flush(control, &mut pending, &mut out, &mut wire, &mut phase);
                flush(target, &mut pending, &mut out, &mut wire, &mut phase);
                let last_c = wire[control].last().copied();
                let cancels = last_c.is_some()
                    && last_c == wire[target].last().copied()
                    && out[last_c.unwrap()] == Some(g);
                if cancels {
                    out[last_c.unwrap()] = None;
                    wire[control].pop();
                    wire[target].pop();
                } else {
                    wire[control].push(out.len());
                    wire[target].push(out.len());
                    out.push(Some(g));
                }
            }
        }
    }
    for q in 0..n {
        flush(q, &mut pending, &mut out, &mut wire, &mut phase);
    }
    Circuit {
        n,
        gates: out.into_iter().flatten().collect(),
        phase: wrap_angle(phase),
    }
}

/// Fuse single-qubit runs, drop identities and cancel adjacent equal `cx`
/// pairs until nothing changes. The unitary (with phase) is preserved.
pub fn simplify(c: &Circuit) -> Circuit {
    let mut cur = simplify_once(c);
    loop {
        let next = simplify_once(&cur);
        if next.gates == cur.gates {
            return next;
        }
        cur = next;
    }
}

pub fn cnot_matrix() -> DenseMatrix {
    let mut m = DenseMatrix::zeros(4, 4);
    for (row, col) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
        m[(row, col)] = c64::new(1.0, 0.0);
    }
    m
}

fn mat2_dense(m: &Mat2) -> DenseMatrix {
    DenseMatrix::from_fn(2, 2, |i, j| m[i][j])
}

/// Gates fused into windows of at most this many qubits before touching the
/// full matrix; each full-size application costs `dim²·2^k`.
const FUSE_QUBITS: usize = 3;

fn gate_matrix(g: &Gate, cx: &DenseMatrix) -> DenseMatrix {
    match *g {
        Gate::U3 {
            theta, phi, lambda, ..
        } => mat2_dense(&u3_matrix(theta, phi, lambda)),
        Gate::Cnot { .. } => cx.clone(),
    }
}

/// `M ⊗ I₂`: the window gains a new least-significant qubit.
fn widen(m: &DenseMatrix) -> DenseMatrix {
    DenseMatrix::from_fn(2 * m.nrows(), 2 * m.ncols(), |i, j| {
        if i % 2 == j % 2 {
            m[(i / 2, j / 2)]
        } else {
            c64::new(0.0, 0.0)
        }
    })
}

/// Leftmost gate acts first; includes the circuit's global phase.
pub fn circuit_to_matrix(c: &Circuit, dense_limit: usize) -> Result<DenseMatrix> {
    let mut u = identity(dense_dim(c.n, dense_limit)?);
    let cx = cnot_matrix();
    let mut window: Vec<usize> = Vec::new();
    let mut local = identity(1);
    for g in &c.gates {
        let qs = g.qubits();
        let fresh: Vec<usize> = qs.iter().copied().filter(|q| !window.contains(q)).collect();
        if window.len() + fresh.len() > FUSE_QUBITS {
            apply_local(&mut u, local.as_ref(), &window, c.n)?;
            window.clear();
            local = identity(1);
            for &q in &qs {
                window.push(q);
                local = widen(&local);
            }
        } else {
            for q in fresh {
                window.push(q);
                local = widen(&local);
            }
        }
        let pos: Vec<usize> = qs.iter().map(|q| window.iter().position(|w| w == q).unwrap()).collect();
        apply_local(&mut local, gate_matrix(g, &cx).as_ref(), &pos, window.len())?;
    }
    if !window.is_empty() {
        apply_local(&mut u, local.as_ref(), &window, c.n)?;
    }
    let ph = c64::from_polar(1.0, c.phase);
    for j in 0..u.ncols() {
        for x in u.col_as_slice_mut(j) {
            *x *= ph;
        }
    }
    Ok(u)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
pub struct Metrics {
    pub cnot_count: usize,
    pub u3_count: usize,
    pub depth: usize,
}

/// Gate counts and as-soon-as-possible depth.
pub fn metrics(c: &Circuit) -> Metrics {
    let mut level = vec![0usize; c.n];
    let mut m = Metrics::default();
    for g in &c.gates {
        match g {
            Gate::U3 { .. } => m.u3_count += 1,
            Gate::Cnot { .. } => m.cnot_count += 1,
        }
        let qs = g.qubits();
        let d = qs.iter().map(|&q| level[q]).max().unwrap_or(0) + 1;
        for q in qs {
            level[q] = d;
        }
        m.depth = m.depth.max(d);
    }
    m
}
