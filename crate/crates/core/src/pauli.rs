//! Pauli strings in symplectic (x-bits, z-bits) form.
//!
//! Qubit 0 is the leftmost character of a string and the leftmost tensor
//! factor of its matrix. Examples written 1-based elsewhere (`X₁X₂`) map to
//! qubits 0 and 1 here.

use std::collections::HashMap;
use std::fmt;

use faer::Mat;

use crate::error::{Error, Result};
use crate::numerics::{c64, dense_dim, DenseMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }
}

/// Power of `i` multiplying a Pauli product.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Phase {
    One,
    I,
    MinusOne,
    MinusI,
}

impl Phase {
    fn from_exponent(k: i64) -> Self {
        match k.rem_euclid(4) {
            0 => Phase::One,
            1 => Phase::I,
            2 => Phase::MinusOne,
            _ => Phase::MinusI,
        }
    }

    pub fn exponent(self) -> u8 {
        match self {
            Phase::One => 0,
            Phase::I => 1,
            Phase::MinusOne => 2,
            Phase::MinusI => 3,
        }
    }

    pub fn to_complex(self) -> c64 {
        match self {
            Phase::One => c64::new(1.0, 0.0),
            Phase::I => c64::new(0.0, 1.0),
            Phase::MinusOne => c64::new(-1.0, 0.0),
            Phase::MinusI => c64::new(0.0, -1.0),
        }
    }

    pub fn mul(self, other: Phase) -> Phase {
        Phase::from_exponent(self.exponent() as i64 + other.exponent() as i64)
    }
}

/// An unweighted Pauli string on `n` qubits, packed into 64-bit words.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    n: usize,
    x: Vec<u64>,
    z: Vec<u64>,
}

fn words(n: usize) -> usize {
    n.div_ceil(64)
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        PauliString {
            n,
            x: vec![0; words(n)],
            z: vec![0; words(n)],
        }
    }

    pub fn from_paulis(paulis: &[Pauli]) -> Self {
        let mut s = PauliString::identity(paulis.len());
        for (q, &p) in paulis.iter().enumerate() {
            s.set(q, p);
        }
        s
    }

    /// Sparse constructor: `(qubit, letter)` pairs, everything else identity.
    pub fn from_sparse(n: usize, ops: &[(usize, Pauli)]) -> Result<Self> {
        let mut s = PauliString::identity(n);
        for &(q, p) in ops {
            if q >= n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: q + 1,
                });
            }
            s.set(q, p);
        }
        Ok(s)
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn get(&self, q: usize) -> Pauli {
        let (w, b) = (q / 64, q % 64);
        Pauli::from_bits(self.x[w] >> b & 1 == 1, self.z[w] >> b & 1 == 1)
    }

    pub fn set(&mut self, q: usize, p: Pauli) {
        let (w, b) = (q / 64, q % 64);
        let (x, z) = p.bits();
        self.x[w] = (self.x[w] & !(1 << b)) | ((x as u64) << b);
        self.z[w] = (self.z[w] & !(1 << b)) | ((z as u64) << b);
    }

    pub fn paulis(&self) -> impl Iterator<Item = Pauli> + '_ {
        (0..self.n).map(|q| self.get(q))
    }

    /// Qubits carrying a non-identity factor, ascending.
    pub fn support(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for (w, (&x, &z)) in self.x.iter().zip(&self.z).enumerate() {
            let mut bits = x | z;
            while bits != 0 {
                out.push(w * 64 + bits.trailing_zeros() as usize);
                bits &= bits - 1;
            }
        }
        out
    }

    pub fn weight(&self) -> usize {
        self.x
            .iter()
            .zip(&self.z)
            .map(|(x, z)| (x | z).count_ones() as usize)
            .sum()
    }

    pub fn max_qubit(&self) -> Option<usize> {
        self.support().last().copied()
    }

    pub fn is_identity(&self) -> bool {
        self.weight() == 0
    }

    fn check_same_n(&self, other: &PauliString) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        Ok(())
    }

    /// Symplectic parity: anticommuting positions counted via `x₁z₂ ⊕ z₁x₂`.
    pub fn commutes_with(&self, other: &PauliString) -> Result<bool> {
        self.check_same_n(other)?;
        let mut parity = 0u32;
        for w in 0..self.x.len() {
            parity ^= ((self.x[w] & other.z[w]) ^ (self.z[w] & other.x[w])).count_ones() & 1;
        }
        Ok(parity == 0)
    }

    /// `self · other = phase · result`.
    pub fn mul(&self, other: &PauliString) -> Result<(Phase, PauliString)> {
        self.check_same_n(other)?;
        let mut plus = 0i64;
        let mut minus = 0i64;
        let mut out = PauliString::identity(self.n);
        for w in 0..self.x.len() {
            let (x1, z1, x2, z2) = (self.x[w], self.z[w], other.x[w], other.z[w]);
            let (px, py, pz) = (x1 & !z1, x1 & z1, !x1 & z1);
            let (qx, qy, qz) = (x2 & !z2, x2 & z2, !x2 & z2);
            // XY = iZ, YZ = iX, ZX = iY; reversed orders pick up −i.
            plus += ((px & qy) | (py & qz) | (pz & qx)).count_ones() as i64;
            minus += ((py & qx) | (pz & qy) | (px & qz)).count_ones() as i64;
            out.x[w] = x1 ^ x2;
            out.z[w] = z1 ^ z2;
        }
        Ok((Phase::from_exponent(plus - minus), out))
    }

    /// Restrict to `qubits` (in that order), dropping all other positions.
    pub fn restrict(&self, qubits: &[usize]) -> PauliString {
        let ops: Vec<Pauli> = qubits.iter().map(|&q| self.get(q)).collect();
        PauliString::from_paulis(&ops)
    }
}

impl std::str::FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let ops = s
            .chars()
            .enumerate()
            .map(|(position, letter)| {
                Pauli::from_char(letter).ok_or(Error::InvalidPauli { letter, position })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PauliString::from_paulis(&ops))
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in self.paulis() {
            write!(f, "{}", p.as_char())?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliString({self})")
    }
}

/// A real-weighted Pauli string `w·P`.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliTerm {
    coefficient: f64,
    string: PauliString,
}

impl PauliTerm {
    pub fn new(coefficient: f64, string: PauliString) -> Result<Self> {
        if !coefficient.is_finite() {
            return Err(Error::InvalidCoefficient(coefficient));
        }
        Ok(PauliTerm {
            coefficient,
            string,
        })
    }

    /// Parse a letter string such as `"XIZ"`.
    pub fn parse(coefficient: f64, paulis: &str) -> Result<Self> {
        PauliTerm::new(coefficient, paulis.parse()?)
    }

    pub fn sparse(coefficient: f64, n: usize, ops: &[(usize, Pauli)]) -> Result<Self> {
        PauliTerm::new(coefficient, PauliString::from_sparse(n, ops)?)
    }

    pub fn coefficient(&self) -> f64 {
        self.coefficient
    }

    pub fn string(&self) -> &PauliString {
        &self.string
    }

    pub fn num_qubits(&self) -> usize {
        self.string.n
    }

    pub fn support(&self) -> Vec<usize> {
        self.string.support()
    }

    pub fn weight(&self) -> usize {
        self.string.weight()
    }

    pub fn with_coefficient(&self, coefficient: f64) -> Result<Self> {
        PauliTerm::new(coefficient, self.string.clone())
    }
}

impl fmt::Display for PauliTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}·{}", self.coefficient, self.string)
    }
}

/// True iff `[P, Q] = 0`.
pub fn commutes(p: &PauliTerm, q: &PauliTerm) -> Result<bool> {
    p.string.commutes_with(&q.string)
}

/// `P·Q = phase·R`, with the coefficient of `R` the product of coefficients.
pub fn multiply(p: &PauliTerm, q: &PauliTerm) -> Result<(Phase, PauliTerm)> {
    let (phase, string) = p.string.mul(&q.string)?;
    Ok((
        phase,
        PauliTerm::new(p.coefficient * q.coefficient, string)?,
    ))
}

/// `Σ wᵢ Pᵢ` as a dense `2^k × 2^k` matrix on `qubit_order` (first entry is
/// the leftmost factor).
pub fn to_matrix(terms: &[PauliTerm], qubit_order: &[usize], dense_limit: usize) -> Result<DenseMatrix> {
    let k = qubit_order.len();
    let dim = dense_dim(k, dense_limit)?;
    let mut m = Mat::<c64>::zeros(dim, dim);
    for term in terms {
        let mut xmask = 0usize;
        let mut zmask = 0usize;
        let mut ys = 0usize;
        for q in term.support() {
            let Some(pos) = qubit_order.iter().position(|&o| o == q) else {
                return Err(Error::SupportOutsideOrder { qubit: q });
            };
            let bit = 1usize << (k - 1 - pos);
            let (x, z) = term.string.get(q).bits();
            if x {
                xmask |= bit;
            }
            if z {
                zmask |= bit;
            }
            if x && z {
                ys += 1;
            }
        }
        // P|b⟩ = i^{#Y} (−1)^{|b ∧ z|} |b ⊕ x⟩
        let base = Phase::from_exponent(ys as i64).to_complex() * term.coefficient;
        for b in 0..dim {
            let sign = if (b & zmask).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            m[(b ^ xmask, b)] += base * sign;
        }
    }
    Ok(m)
}

/// For Pauli sums `A` and `B`, the Hermitian `C` with `[A, B] = i·C`.
///
/// Only anticommuting pairs contribute (`[wP, vQ] = 2wv·PQ`); equal strings
/// are combined, so cancellations between pairs are exact.
pub fn commutator(a: &[PauliTerm], b: &[PauliTerm]) -> Result<Vec<PauliTerm>> {
    let mut index: HashMap<PauliString, usize> = HashMap::new();
    let mut out: Vec<(PauliString, f64)> = Vec::new();
    for p in a {
        for q in b {
            if p.string.commutes_with(&q.string)? {
                continue;
            }
            let (phase, r) = p.string.mul(&q.string)?;
            // phase is ±i for anticommuting strings; divide out the i.
            let sign = if phase == Phase::I { 1.0 } else { -1.0 };
            let w = 2.0 * p.coefficient * q.coefficient * sign;
            match index.get(&r) {
                Some(&k) => out[k].1 += w,
                None => {
                    index.insert(r.clone(), out.len());
                    out.push((r, w));
                }
            }
        }
    }
    out.into_iter()
        .filter(|(_, w)| *w != 0.0)
        .map(|(s, w)| PauliTerm::new(w, s))
        .collect()
}

/// `‖Σ wᵢPᵢ‖_F` on `k` qubits: Pauli strings are orthogonal with `‖P‖²_F = 2^k`.
pub fn pauli_sum_frobenius(terms: &[PauliTerm], k: usize) -> f64 {
    let sq: f64 = terms.iter().map(|t| t.coefficient * t.coefficient).sum();
    (sq * (k as f64).exp2()).sqrt()
}

/// A Pauli-sum Hamiltonian `H = Σᵢ wᵢPᵢ` on `n` qubits.
///
/// Identity strings never appear in `terms`: their coefficients are folded
/// into `identity_offset`, which only contributes a global phase to `e^{iHt}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Hamiltonian {
    n: usize,
    terms: Vec<PauliTerm>,
    identity_offset: f64,
}

impl Hamiltonian {
    pub fn new(n: usize, terms: Vec<PauliTerm>) -> Result<Self> {
        Hamiltonian::with_offset(n, terms, 0.0)
    }

    pub fn with_offset(n: usize, terms: Vec<PauliTerm>, identity_offset: f64) -> Result<Self> {
        if !identity_offset.is_finite() {
            return Err(Error::InvalidCoefficient(identity_offset));
        }
        let mut offset = identity_offset;
        let mut kept = Vec::with_capacity(terms.len());
        for term in terms {
            if term.num_qubits() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: term.num_qubits(),
                });
            }
            if term.string.is_identity() {
                offset += term.coefficient;
            } else {
                kept.push(term);
            }
        }
        Ok(Hamiltonian {
            n,
            terms: kept,
            identity_offset: offset,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    pub fn identity_offset(&self) -> f64 {
        self.identity_offset
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Dense matrix of the non-identity part on all qubits.
    pub fn to_matrix(&self, dense_limit: usize) -> Result<DenseMatrix> {
        let order: Vec<usize> = (0..self.n).collect();
        to_matrix(&self.terms, &order, dense_limit)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::DENSE_LIMIT;
    use proptest::prelude::*;

    fn term(s: &str) -> PauliTerm {
        PauliTerm::parse(1.0, s).unwrap()
    }

    fn single(p: Pauli) -> DenseMatrix {
        to_matrix(&[PauliTerm::new(1.0, PauliString::from_paulis(&[p])).unwrap()], &[0], 1).unwrap()
    }

    fn kron_all(ps: &[Pauli]) -> DenseMatrix {
        let mut acc = Mat::<c64>::identity(1, 1);
        for &p in ps {
            let s = single(p);
            let (ra, rb) = (acc.nrows(), 2);
            acc = Mat::from_fn(ra * rb, ra * rb, |i, j| acc[(i / rb, j / rb)] * s[(i % rb, j % rb)]);
        }
        acc
    }

    fn max_abs_diff(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
        let mut m: f64 = 0.0;
        for j in 0..a.ncols() {
            for i in 0..a.nrows() {
                m = m.max((a[(i, j)] - b[(i, j)]).norm());
            }
        }
        m
    }

    #[test]
    fn single_qubit_matrices() {
        let x = single(Pauli::X);
        let y = single(Pauli::Y);
        let z = single(Pauli::Z);
        assert_eq!(x[(0, 1)], c64::new(1.0, 0.0));
        assert_eq!(y[(0, 1)], c64::new(0.0, -1.0));
        assert_eq!(y[(1, 0)], c64::new(0.0, 1.0));
        assert_eq!(z[(1, 1)], c64::new(-1.0, 0.0));
    }

    #[test]
    fn x_and_z_anticommute() {
        assert!(!commutes(&term("X"), &term("Z")).unwrap());
    }

    #[test]
    fn string_commutes_with_itself() {
        assert!(commutes(&term("XYZ"), &term("XYZ")).unwrap());
    }

    #[test]
    fn four_string_example_commutation_pattern() {
        // Matrix oracle: every pair anticommutes except XYZ/XZX, which differ
        // at two positions (an even count) and therefore commute.
        let hs = ["XYZ", "YZX", "ZXY", "XZX"].map(term);
        for i in 0..4 {
            for j in i + 1..4 {
                let expected = (i, j) == (0, 3);
                assert_eq!(commutes(&hs[i], &hs[j]).unwrap(), expected, "{i} {j}");
            }
        }
    }

    #[test]
    fn mismatched_lengths_are_rejected() {
        assert!(matches!(
            commutes(&term("X"), &term("XX")),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(multiply(&term("X"), &term("XX")).is_err());
    }

    #[test]
    fn x_times_y_is_i_z() {
        let (phase, r) = multiply(&term("X"), &term("Y")).unwrap();
        assert_eq!(phase, Phase::I);
        assert_eq!(r.string().to_string(), "Z");
    }

    #[test]
    fn x_times_identity_is_x() {
        let (phase, r) = multiply(&term("X"), &term("I")).unwrap();
        assert_eq!(phase, Phase::One);
        assert_eq!(r.string().to_string(), "X");
    }

    #[test]
    fn xx_times_zz_is_minus_yy() {
        // Oracle: explicit 4×4 matrix product.
        let xx = kron_all(&[Pauli::X, Pauli::X]);
        let zz = kron_all(&[Pauli::Z, Pauli::Z]);
        let yy = kron_all(&[Pauli::Y, Pauli::Y]);
        let prod = &xx * &zz;
        let neg_yy = Mat::from_fn(4, 4, |i, j| -yy[(i, j)]);
        assert!(max_abs_diff(&prod, &neg_yy) < 1e-15);

        let (phase, r) = multiply(&term("XX"), &term("ZZ")).unwrap();
        assert_eq!(phase, Phase::MinusOne);
        assert_eq!(r.string().to_string(), "YY");
    }

    #[test]
    fn coefficients_multiply() {
        let (_, r) = multiply(
            &PauliTerm::parse(2.0, "X").unwrap(),
            &PauliTerm::parse(-0.5, "Z").unwrap(),
        )
        .unwrap();
        assert_eq!(r.coefficient(), -1.0);
    }

    #[test]
    fn support_and_weight() {
        let t = PauliTerm::sparse(1.0, 4, &[(1, Pauli::X), (2, Pauli::X), (3, Pauli::X)]).unwrap();
        assert_eq!(t.support(), vec![1, 2, 3]);
        assert_eq!(t.weight(), 3);
        assert_eq!(term("IIII").support(), Vec::<usize>::new());
        assert_eq!(term("IIII").weight(), 0);
        let t = PauliTerm::sparse(1.0, 5, &[(3, Pauli::X), (4, Pauli::X)]).unwrap();
        assert_eq!(t.support(), vec![3, 4]);
    }

    #[test]
    fn support_spans_word_boundaries() {
        let t = PauliTerm::sparse(1.0, 130, &[(3, Pauli::Z), (64, Pauli::Y), (129, Pauli::X)]).unwrap();
        assert_eq!(t.support(), vec![3, 64, 129]);
        let u = PauliTerm::sparse(1.0, 130, &[(64, Pauli::X)]).unwrap();
        assert!(!commutes(&t, &u).unwrap());
    }

    #[test]
    fn invalid_letter_is_reported() {
        assert!(matches!(
            PauliTerm::parse(1.0, "XQ"),
            Err(Error::InvalidPauli { letter: 'Q', position: 1 })
        ));
    }

    #[test]
    fn non_finite_coefficient_is_rejected() {
        assert!(PauliTerm::parse(f64::NAN, "X").is_err());
        assert!(PauliTerm::parse(f64::INFINITY, "X").is_err());
    }

    #[test]
    fn to_matrix_examples() {
        let z = to_matrix(&[term("Z")], &[0], DENSE_LIMIT).unwrap();
        assert_eq!(z[(0, 0)], c64::new(1.0, 0.0));
        assert_eq!(z[(1, 1)], c64::new(-1.0, 0.0));

        let xz = to_matrix(&[term("X"), term("Z")], &[0], DENSE_LIMIT).unwrap();
        let expected = Mat::from_fn(2, 2, |i, j| {
            c64::new([[1.0, 1.0], [1.0, -1.0]][i][j], 0.0)
        });
        assert!(max_abs_diff(&xz, &expected) < 1e-15);

        let half_xx = PauliTerm::sparse(0.5, 3, &[(1, Pauli::X), (2, Pauli::X)]).unwrap();
        let m = to_matrix(&[half_xx], &[1, 2], DENSE_LIMIT).unwrap();
        let kron = kron_all(&[Pauli::X, Pauli::X]);
        let expected = Mat::from_fn(4, 4, |i, j| kron[(i, j)] * 0.5);
        assert!(max_abs_diff(&m, &expected) < 1e-15);
    }

    #[test]
    fn to_matrix_rejects_support_outside_order() {
        assert!(matches!(
            to_matrix(&[term("XX")], &[0], DENSE_LIMIT),
            Err(Error::SupportOutsideOrder { qubit: 1 })
        ));
        assert!(matches!(
            to_matrix(&[], &(0..13).collect::<Vec<_>>(), DENSE_LIMIT),
            Err(Error::DenseLimit { .. })
        ));
    }

    #[test]
    fn hamiltonian_folds_identity_terms() {
        let h = Hamiltonian::new(2, vec![term("ZZ"), PauliTerm::parse(0.0, "II").unwrap()]).unwrap();
        assert_eq!(h.terms().len(), 1);
        assert_eq!(h.identity_offset(), 0.0);
        let h = Hamiltonian::new(2, vec![PauliTerm::parse(0.7, "II").unwrap()]).unwrap();
        assert!(h.is_empty());
        assert_eq!(h.identity_offset(), 0.7);
        assert!(Hamiltonian::new(2, vec![term("Z")]).is_err());
    }

    #[test]
    fn symbolic_commutator_matches_matrices() {
        let a = vec![PauliTerm::parse(0.3, "XYZ").unwrap(), PauliTerm::parse(-1.1, "ZZI").unwrap()];
        let b = vec![PauliTerm::parse(0.7, "YZX").unwrap(), PauliTerm::parse(2.0, "IXI").unwrap()];
        let order = [0, 1, 2];
        let ma = to_matrix(&a, &order, DENSE_LIMIT).unwrap();
        let mb = to_matrix(&b, &order, DENSE_LIMIT).unwrap();
        let direct = &(&ma * &mb) - &(&mb * &ma);
        let c = to_matrix(&commutator(&a, &b).unwrap(), &order, DENSE_LIMIT).unwrap();
        let ic = Mat::from_fn(8, 8, |i, j| c[(i, j)] * c64::new(0.0, 1.0));
        assert!(max_abs_diff(&direct, &ic) < 1e-12);
        let f = crate::numerics::frobenius_norm(direct.as_ref());
        assert!((pauli_sum_frobenius(&commutator(&a, &b).unwrap(), 3) - f).abs() < 1e-12);
    }

    #[test]
    fn commutator_cancellation_is_exact() {
        // ZZ and XX commute although every factor pair anticommutes.
        let c = commutator(&[term("ZZ")], &[term("XX")]).unwrap();
        assert!(c.is_empty());
    }

    fn pauli_strategy(n: usize) -> impl Strategy<Value = Vec<Pauli>> {
        proptest::collection::vec(
            prop_oneof![Just(Pauli::I), Just(Pauli::X), Just(Pauli::Y), Just(Pauli::Z)],
            n,
        )
    }

    fn pair_strategy() -> impl Strategy<Value = (Vec<Pauli>, Vec<Pauli>)> {
        (1usize..=4).prop_flat_map(|n| (pauli_strategy(n), pauli_strategy(n)))
    }

    #[test]
    fn commutation_matches_matrix_test_exhaustively_up_to_three_qubits() {
        let letters = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
        for n in 1..=3usize {
            let all: Vec<Vec<Pauli>> = (0..4usize.pow(n as u32))
                .map(|mut k| {
                    (0..n)
                        .map(|_| {
                            let p = letters[k % 4];
                            k /= 4;
                            p
                        })
                        .collect()
                })
                .collect();
            let mats: Vec<DenseMatrix> = all.iter().map(|p| kron_all(p)).collect();
            for (i, p) in all.iter().enumerate() {
                for (j, q) in all.iter().enumerate() {
                    let comm = &(&mats[i] * &mats[j]) - &(&mats[j] * &mats[i]);
                    let matrix_commutes = crate::numerics::frobenius_norm(comm.as_ref()) < 1e-12;
                    let a = PauliString::from_paulis(p);
                    let b = PauliString::from_paulis(q);
                    assert_eq!(a.commutes_with(&b).unwrap(), matrix_commutes);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn commutation_agrees_with_matrices((p, q) in pair_strategy()) {
            let a = PauliString::from_paulis(&p);
            let b = PauliString::from_paulis(&q);
            let (ma, mb) = (kron_all(&p), kron_all(&q));
            let comm = &(&ma * &mb) - &(&mb * &ma);
            let matrix_commutes = crate::numerics::frobenius_norm(comm.as_ref()) < 1e-12;
            prop_assert_eq!(a.commutes_with(&b).unwrap(), matrix_commutes);
        }

        #[test]
        fn product_matches_matrix_product((p, q) in pair_strategy()) {
            let a = PauliString::from_paulis(&p);
            let b = PauliString::from_paulis(&q);
            let (phase, r) = a.mul(&b).unwrap();
            let lhs = &kron_all(&p) * &kron_all(&q);
            let rm = kron_all(&r.paulis().collect::<Vec<_>>());
            let ph = phase.to_complex();
            let rhs = Mat::from_fn(rm.nrows(), rm.ncols(), |i, j| rm[(i, j)] * ph);
            prop_assert!(max_abs_diff(&lhs, &rhs) < 1e-12);
        }

        #[test]
        fn product_sign_follows_parity_rule((p, q) in pair_strategy()) {
            let a = PauliString::from_paulis(&p);
            let b = PauliString::from_paulis(&q);
            let (pa, ra) = a.mul(&b).unwrap();
            let (pb, rb) = b.mul(&a).unwrap();
            prop_assert_eq!(&ra, &rb);
            let same = pa == pb;
            prop_assert_eq!(same, a.commutes_with(&b).unwrap());
        }

        #[test]
        fn product_is_associative(
            (p, q, r) in (1usize..=4).prop_flat_map(|n| (pauli_strategy(n), pauli_strategy(n), pauli_strategy(n)))
        ) {
            let (a, b, c) = (PauliString::from_paulis(&p), PauliString::from_paulis(&q), PauliString::from_paulis(&r));
            let (p1, ab) = a.mul(&b).unwrap();
            let (p2, ab_c) = ab.mul(&c).unwrap();
            let (p3, bc) = b.mul(&c).unwrap();
            let (p4, a_bc) = a.mul(&bc).unwrap();
            prop_assert_eq!(ab_c, a_bc);
            prop_assert_eq!(p1.mul(p2), p3.mul(p4));
        }

        #[test]
        fn single_term_matrix_squares_to_scaled_identity(p in (1usize..=4).prop_flat_map(pauli_strategy), w in -3.0f64..3.0) {
            let t = PauliTerm::new(w, PauliString::from_paulis(&p)).unwrap();
            let order: Vec<usize> = (0..p.len()).collect();
            let m = to_matrix(&[t], &order, DENSE_LIMIT).unwrap();
            prop_assert!(crate::numerics::hermitian_deviation(m.as_ref()) < 1e-12);
            let sq = &m * &m;
            let expected = Mat::from_fn(m.nrows(), m.ncols(), |i, j| {
                if i == j { c64::new(w * w, 0.0) } else { c64::new(0.0, 0.0) }
            });
            prop_assert!(max_abs_diff(&sq, &expected) < 1e-12);
        }
    }
}
