//! CNOT-ladder circuits for single Pauli exponentials.

use std::f64::consts::FRAC_1_SQRT_2;

use super::circuit::{zyz_decompose, Circuit, Gate, Mat2};
use crate::error::Result;
use crate::numerics::c64;
use crate::pauli::{Pauli, PauliTerm};

fn h_mat() -> Mat2 {
    let r = c64::new(FRAC_1_SQRT_2, 0.0);
    [[r, r], [r, -r]]
}

/// Basis change `B` with `B·P·B† = Z`: `H` for X, `H·S†` for Y.
fn basis_change(p: Pauli) -> Option<Mat2> {
    let r = FRAC_1_SQRT_2;
    match p {
        Pauli::X => Some(h_mat()),
        // H·S† = (1/√2)[[1, −i], [1, i]]
        Pauli::Y => Some([
            [c64::new(r, 0.0), c64::new(0.0, -r)],
            [c64::new(r, 0.0), c64::new(0.0, r)],
        ]),
        _ => None,
    }
}

fn adjoint(m: &Mat2) -> Mat2 {
    [[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]]
}

fn push_mat2(c: &mut Circuit, q: usize, m: &Mat2) -> Result<()> {
    let (theta, phi, lambda, gamma) = zyz_decompose(m);
    c.add_phase(gamma);
    c.push(Gate::u3(q, theta, phi, lambda))
}

/// Circuit for `exp(i·angle·w·P)` where `term = w·P`, on `term.num_qubits()` qubits.
///
/// Basis changes, a `cx` chain onto the last support qubit, `exp(iθZ)` as
/// `e^{iθ}·U3(0, 0, −2θ)`, then the mirror image. The global phase is exact.
pub fn pauli_exp_circuit(term: &PauliTerm, angle: f64) -> Result<Circuit> {
    let n = term.num_qubits();
    let theta = angle * term.coefficient();
    let mut c = Circuit::new(n);
    let support = term.support();
    let Some(&root) = support.last() else {
        c.add_phase(theta);
        return Ok(c);
    };
    let changes: Vec<(usize, Mat2)> = support
        .iter()
        .filter_map(|&q| basis_change(term.string().get(q)).map(|b| (q, b)))
        .collect();
    for (q, b) in &changes {
        push_mat2(&mut c, *q, b)?;
    }
    for w in support.windows(2) {
        c.push(Gate::cnot(w[0], w[1]))?;
    }
    c.push(Gate::u3(root, 0.0, 0.0, -2.0 * theta))?;
    c.add_phase(theta);
    for w in support.windows(2).rev() {
        c.push(Gate::cnot(w[0], w[1]))?;
    }
    for (q, b) in &changes {
        push_mat2(&mut c, *q, &adjoint(b))?;
    }
    Ok(c)
}
