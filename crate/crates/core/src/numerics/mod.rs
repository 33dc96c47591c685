//! Dense complex linear algebra used for verification and block synthesis.
//!
//! Qubit ordering: qubit 0 is the leftmost tensor factor, i.e. the most
//! significant bit of a basis index. A k-qubit operator acting on qubits
//! `[q0, q1, ...]` places `q0` as its own leftmost factor.

mod lsq;

pub use lsq::{
    damped_least_squares, FnProblem, LeastSquaresProblem, LsqOptions, LsqReport, Stall,
    Termination,
};

use faer::{Mat, MatRef, Side};

use crate::error::{Error, Result};

pub use faer::c64;

/// Row/column dimension is a power of two; entries are complex doubles.
pub type DenseMatrix = Mat<c64>;

/// Largest qubit count for which any dense operator is formed.
pub const DENSE_LIMIT: usize = 12;

pub fn dense_dim(qubits: usize, limit: usize) -> Result<usize> {
    if qubits > limit {
        return Err(Error::DenseLimit { qubits, limit });
    }
    Ok(1usize << qubits)
}

pub fn identity(dim: usize) -> DenseMatrix {
    Mat::identity(dim, dim)
}

/// `log2(dim)` for a power-of-two dimension.
pub fn qubits_of(m: MatRef<'_, c64>) -> usize {
    debug_assert!(m.nrows().is_power_of_two());
    m.nrows().trailing_zeros() as usize
}

pub fn frobenius_norm(m: MatRef<'_, c64>) -> f64 {
    let mut acc = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            acc += m[(i, j)].norm_sqr();
        }
    }
    acc.sqrt()
}

pub fn spectral_norm(m: MatRef<'_, c64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    let sv = m.singular_values().expect("svd did not converge");
    sv.first().copied().unwrap_or(0.0)
}

/// Largest `|λ|` of a Hermitian matrix (cheaper than an SVD).
pub fn hermitian_spectral_norm(h: MatRef<'_, c64>) -> Result<f64> {
    if h.nrows() == 0 {
        return Ok(0.0);
    }
    let eig = h
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::NonFinite(format!("eigendecomposition failed: {e:?}")))?;
    let s = eig.S().column_vector();
    Ok((0..h.nrows()).map(|i| s[i].re.abs()).fold(0.0, f64::max))
}

pub fn hermitian_deviation(m: MatRef<'_, c64>) -> f64 {
    let mut acc = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            acc += (m[(i, j)] - m[(j, i)].conj()).norm_sqr();
        }
    }
    acc.sqrt()
}

/// `‖U†U − I‖_F`.
pub fn unitarity_deviation(u: MatRef<'_, c64>) -> f64 {
    let g = u.adjoint() * u;
    let mut acc = 0.0;
    for j in 0..g.ncols() {
        for i in 0..g.nrows() {
            let e = if i == j { g[(i, j)] - c64::new(1.0, 0.0) } else { g[(i, j)] };
            acc += e.norm_sqr();
        }
    }
    acc.sqrt()
}

/// `exp(i·t·H)` for Hermitian `H` via the eigendecomposition `V·diag(e^{itλ})·V†`.
pub fn expm_i_hermitian(h: MatRef<'_, c64>, t: f64) -> Result<DenseMatrix> {
    let dev = hermitian_deviation(h);
    let scale = frobenius_norm(h).max(1.0);
    if dev > 1e-10 * scale {
        return Err(Error::NotHermitian(dev));
    }
    let dim = h.nrows();
    if dim == 0 {
        return Ok(Mat::zeros(0, 0));
    }
    let eig = h
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::NonFinite(format!("eigendecomposition failed: {e:?}")))?;
    let v = eig.U();
    let s = eig.S().column_vector();
    let scaled = Mat::from_fn(dim, dim, |i, j| {
        let phase = c64::from_polar(1.0, t * s[j].re);
        v[(i, j)] * phase
    });
    Ok(&scaled * v.adjoint())
}

/// Global phase `α` minimizing `‖e^{iα}·a − b‖_F`, i.e. `arg tr(a† b)`.
pub fn optimal_phase(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> f64 {
    let mut tr = c64::new(0.0, 0.0);
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            tr += a[(i, j)].conj() * b[(i, j)];
        }
    }
    if tr.norm() == 0.0 {
        0.0
    } else {
        tr.arg()
    }
}

/// `min_α ‖e^{iα}·a − b‖_F`, evaluated entrywise (no cancellation at small errors).
pub fn phase_aligned_frobenius(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> f64 {
    let phase = c64::from_polar(1.0, optimal_phase(a, b));
    let mut acc = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            acc += (phase * a[(i, j)] - b[(i, j)]).norm_sqr();
        }
    }
    acc.sqrt()
}

/// `min_α ‖e^{iα}·a − b‖₂` for unitary `a`, `b`.
///
/// With `W = b†a` the distance is `max_k |e^{iθ_k} − e^{-iα}|` over the
/// eigenphases of `W`, minimized by centering `α` on the smallest arc that
/// holds every eigenphase: the result is `2·sin(L/4)` for arc length `L`.
/// Falls back to the spectral norm at the Frobenius-optimal phase when the
/// inputs are not unitary.
pub fn phase_aligned_spectral(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> f64 {
    let dim = a.nrows();
    if dim == 0 {
        return 0.0;
    }
    let w = b.adjoint() * a;
    let eigenvalues = match w.eigenvalues() {
        Ok(ev) => ev,
        Err(_) => return aligned_spectral_fallback(a, b),
    };
    if eigenvalues.iter().any(|l| (l.norm() - 1.0).abs() > 1e-8) {
        return aligned_spectral_fallback(a, b);
    }
    let mut angles: Vec<f64> = eigenvalues.iter().map(|l| l.arg()).collect();
    angles.sort_by(f64::total_cmp);
    let mut largest_gap = angles[0] + 2.0 * std::f64::consts::PI - angles[angles.len() - 1];
    for pair in angles.windows(2) {
        largest_gap = largest_gap.max(pair[1] - pair[0]);
    }
    let arc = (2.0 * std::f64::consts::PI - largest_gap).max(0.0);
    2.0 * (arc / 4.0).sin()
}

fn aligned_spectral_fallback(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> f64 {
    let phase = c64::from_polar(1.0, optimal_phase(a, b));
    let diff = Mat::from_fn(a.nrows(), a.ncols(), |i, j| phase * a[(i, j)] - b[(i, j)]);
    spectral_norm(diff.as_ref())
}

/// Both phase-aligned distances between two operators.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Distance {
    pub spectral: f64,
    pub frobenius: f64,
}

pub fn phase_aligned_distance(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> Distance {
    Distance {
        spectral: phase_aligned_spectral(a, b),
        frobenius: phase_aligned_frobenius(a, b),
    }
}

/// Positions of a local operator's basis states inside the full register.
struct LocalLayout {
    offsets: Vec<usize>,
    mask: usize,
}

impl LocalLayout {
    fn new(qubits: &[usize], n: usize) -> Self {
        let k = qubits.len();
        let bits: Vec<usize> = qubits.iter().map(|&q| 1usize << (n - 1 - q)).collect();
        let offsets = (0..1usize << k)
            .map(|a| {
                (0..k)
                    .filter(|&i| a >> (k - 1 - i) & 1 == 1)
                    .map(|i| bits[i])
                    .sum()
            })
            .collect();
        LocalLayout {
            offsets,
            mask: bits.iter().fold(0, |m, b| m | b),
        }
    }

    /// Every basis index with zeros on the local qubits.
    fn bases(&self, dim: usize) -> impl Iterator<Item = usize> + '_ {
        let mask = self.mask;
        let mut next = Some(0usize);
        std::iter::from_fn(move || {
            let cur = next?;
            let succ = ((cur | mask) + 1) & !mask;
            next = if succ == 0 || succ >= dim { None } else { Some(succ) };
            Some(cur)
        })
    }
}

fn check_local(u: MatRef<'_, c64>, qubits: &[usize], n: usize) -> Result<()> {
    if u.nrows() != 1usize << qubits.len() || u.ncols() != u.nrows() {
        return Err(Error::DimensionMismatch {
            expected: 1usize << qubits.len(),
            found: u.nrows(),
        });
    }
    for (i, &q) in qubits.iter().enumerate() {
        if q >= n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: q + 1,
            });
        }
        if qubits[..i].contains(&q) {
            return Err(Error::InvalidConfig(format!("qubit {q} repeated")));
        }
    }
    Ok(())
}

/// `m ← (u on qubits) · m`, where `m` spans `n` qubits.
pub fn apply_local(m: &mut DenseMatrix, u: MatRef<'_, c64>, qubits: &[usize], n: usize) -> Result<()> {
    check_local(u, qubits, n)?;
    let dim = 1usize << n;
    if m.nrows() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: m.nrows(),
        });
    }
    let layout = LocalLayout::new(qubits, n);
    let ld = layout.offsets.len();
    let small: Vec<c64> = (0..ld * ld).map(|idx| u[(idx / ld, idx % ld)]).collect();
    let bases: Vec<usize> = layout.bases(dim).collect();
    let mut gathered = vec![c64::new(0.0, 0.0); ld];
    for j in 0..m.ncols() {
        let col = m.col_as_slice_mut(j);
        for &base in &bases {
            for (a, g) in gathered.iter_mut().enumerate() {
                *g = col[base + layout.offsets[a]];
            }
            for a in 0..ld {
                let row = &small[a * ld..(a + 1) * ld];
                let mut acc = c64::new(0.0, 0.0);
                for (x, y) in row.iter().zip(&gathered) {
                    acc += x * y;
                }
                col[base + layout.offsets[a]] = acc;
            }
        }
    }
    Ok(())
}

/// Lift `u` acting on `support` to the full `n`-qubit space.
pub fn embed(u: MatRef<'_, c64>, support: &[usize], n: usize) -> Result<DenseMatrix> {
    let dim = dense_dim(n, DENSE_LIMIT)?;
    check_local(u, support, n)?;
    let mut m = identity(dim);
    apply_local(&mut m, u, support, n)?;
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn c(re: f64, im: f64) -> c64 {
        c64::new(re, im)
    }

    fn from_rows(rows: &[&[c64]]) -> DenseMatrix {
        Mat::from_fn(rows.len(), rows.len(), |i, j| rows[i][j])
    }

    #[test]
    fn hermitian_norm_matches_svd() {
        let h = from_rows(&[
            &[c(1., 0.), c(0., 2.), c(0.5, 0.)],
            &[c(0., -2.), c(-3., 0.), c(0., 0.)],
            &[c(0.5, 0.), c(0., 0.), c(0.25, 0.)],
        ]);
        let a = hermitian_spectral_norm(h.as_ref()).unwrap();
        assert!((a - spectral_norm(h.as_ref())).abs() < 1e-12);
    }

    fn pauli_x() -> DenseMatrix {
        from_rows(&[&[c(0., 0.), c(1., 0.)], &[c(1., 0.), c(0., 0.)]])
    }

    fn pauli_z() -> DenseMatrix {
        from_rows(&[&[c(1., 0.), c(0., 0.)], &[c(0., 0.), c(-1., 0.)]])
    }

    fn max_abs_diff(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> f64 {
        let mut m: f64 = 0.0;
        for j in 0..a.ncols() {
            for i in 0..a.nrows() {
                m = m.max((a[(i, j)] - b[(i, j)]).norm());
            }
        }
        m
    }

    fn kron(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> DenseMatrix {
        let (ra, rb) = (a.nrows(), b.nrows());
        Mat::from_fn(ra * rb, ra * rb, |i, j| a[(i / rb, j / rb)] * b[(i % rb, j % rb)])
    }

    fn random_hermitian(dim: usize, seed: u64) -> DenseMatrix {
        let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = move || {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let a = Mat::from_fn(dim, dim, |_, _| c(next(), next()));
        Mat::from_fn(dim, dim, |i, j| a[(i, j)] + a[(j, i)].conj())
    }

    #[test]
    fn expm_of_z_is_diagonal_phases() {
        let theta = 0.37;
        let u = expm_i_hermitian(pauli_z().as_ref(), theta).unwrap();
        let expected = from_rows(&[
            &[c64::from_polar(1.0, theta), c(0., 0.)],
            &[c(0., 0.), c64::from_polar(1.0, -theta)],
        ]);
        assert!(max_abs_diff(u.as_ref(), expected.as_ref()) < 1e-14);
    }

    #[test]
    fn expm_at_zero_time_is_identity() {
        let h = random_hermitian(8, 3);
        let u = expm_i_hermitian(h.as_ref(), 0.0).unwrap();
        assert!(max_abs_diff(u.as_ref(), identity(8).as_ref()) < 1e-12);
    }

    #[test]
    fn expm_of_x_at_quarter_turn_is_i_x() {
        // Taylor series oracle: cos(t)·I + i·sin(t)·X since X² = I.
        let u = expm_i_hermitian(pauli_x().as_ref(), FRAC_PI_2).unwrap();
        let expected = from_rows(&[&[c(0., 0.), c(0., 1.)], &[c(0., 1.), c(0., 0.)]]);
        assert!(max_abs_diff(u.as_ref(), expected.as_ref()) < 1e-14);
    }

    #[test]
    fn expm_matches_truncated_taylor_series() {
        let h = random_hermitian(4, 11);
        let t = 0.3;
        let u = expm_i_hermitian(h.as_ref(), t).unwrap();
        let mut term = identity(4);
        let mut sum = identity(4);
        for k in 1..60 {
            term = Mat::from_fn(4, 4, |i, j| {
                let mut acc = c(0., 0.);
                for l in 0..4 {
                    acc += term[(i, l)] * h[(l, j)];
                }
                acc * c(0., t / k as f64)
            });
            sum = &sum + &term;
        }
        assert!(max_abs_diff(u.as_ref(), sum.as_ref()) < 1e-12);
    }

    #[test]
    fn expm_rejects_non_hermitian() {
        let m = from_rows(&[&[c(0., 0.), c(1., 0.)], &[c(0., 0.), c(0., 0.)]]);
        assert!(matches!(expm_i_hermitian(m.as_ref(), 1.0), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn expm_forward_and_backward_cancel() {
        let h = random_hermitian(16, 5);
        let a = expm_i_hermitian(h.as_ref(), 0.7).unwrap();
        let b = expm_i_hermitian(h.as_ref(), -0.7).unwrap();
        let p = &a * &b;
        assert!(max_abs_diff(p.as_ref(), identity(16).as_ref()) < 1e-10);
        assert!(unitarity_deviation(a.as_ref()) < 1e-10);
    }

    #[test]
    fn expm_is_additive_in_time() {
        let h = random_hermitian(8, 9);
        let a = expm_i_hermitian(h.as_ref(), 0.2).unwrap();
        let b = expm_i_hermitian(h.as_ref(), 0.5).unwrap();
        let ab = expm_i_hermitian(h.as_ref(), 0.7).unwrap();
        let p = &a * &b;
        assert!(max_abs_diff(p.as_ref(), ab.as_ref()) < 1e-10);
    }

    #[test]
    fn norms_of_identity_and_zero() {
        let i4 = identity(4);
        assert!((spectral_norm(i4.as_ref()) - 1.0).abs() < 1e-14);
        assert!((frobenius_norm(i4.as_ref()) - 2.0).abs() < 1e-14);
        let z: DenseMatrix = Mat::zeros(4, 4);
        assert_eq!(spectral_norm(z.as_ref()), 0.0);
        assert_eq!(frobenius_norm(z.as_ref()), 0.0);
    }

    #[test]
    fn rank_one_outer_product_has_unit_norms() {
        let u = [c(0.6, 0.0), c(0.0, 0.8), c(0.0, 0.0)];
        let v = [c(0.0, 0.0), c(1.0, 0.0) * (0.5f64).sqrt(), c(0.0, 1.0) * (0.5f64).sqrt()];
        let m = Mat::from_fn(3, 3, |i, j| u[i] * v[j].conj());
        assert!((spectral_norm(m.as_ref()) - 1.0).abs() < 1e-12);
        assert!((frobenius_norm(m.as_ref()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spectral_norm_is_unitarily_invariant() {
        let m = random_hermitian(8, 21);
        let u = expm_i_hermitian(random_hermitian(8, 22).as_ref(), 1.3).unwrap();
        let v = expm_i_hermitian(random_hermitian(8, 23).as_ref(), -0.4).unwrap();
        let rotated = &(&u * &m) * &v;
        let a = spectral_norm(m.as_ref());
        let b = spectral_norm(rotated.as_ref());
        assert!((a - b).abs() < 1e-10 * a.max(1.0));
        assert!(a <= frobenius_norm(m.as_ref()) + 1e-12);
    }

    #[test]
    fn phase_aligned_distances_ignore_global_phase() {
        let u = expm_i_hermitian(random_hermitian(8, 31).as_ref(), 0.9).unwrap();
        let rotated = Mat::from_fn(8, 8, |i, j| u[(i, j)] * c64::from_polar(1.0, 1.1));
        let d = phase_aligned_distance(rotated.as_ref(), u.as_ref());
        assert!(d.spectral < 1e-7, "{d:?}");
        assert!(d.frobenius < 1e-12, "{d:?}");
    }

    #[test]
    fn phase_aligned_spectral_matches_brute_force_phase_scan() {
        let h = random_hermitian(4, 41);
        let a = expm_i_hermitian(h.as_ref(), 0.3).unwrap();
        let b = expm_i_hermitian(h.as_ref(), 0.25).unwrap();
        let exact = phase_aligned_spectral(a.as_ref(), b.as_ref());
        let mut best = f64::INFINITY;
        for step in 0..20000 {
            let alpha = step as f64 / 20000.0 * 2.0 * std::f64::consts::PI;
            let ph = c64::from_polar(1.0, alpha);
            let diff = Mat::from_fn(4, 4, |i, j| ph * a[(i, j)] - b[(i, j)]);
            best = best.min(spectral_norm(diff.as_ref()));
        }
        assert!(exact <= best + 1e-9);
        assert!(best - exact < 1e-3, "exact {exact} scan {best}");
    }

    #[test]
    fn embed_places_leftmost_factor_on_qubit_zero() {
        let e = embed(pauli_x().as_ref(), &[0], 2).unwrap();
        let expected = kron(pauli_x().as_ref(), identity(2).as_ref());
        assert!(max_abs_diff(e.as_ref(), expected.as_ref()) < 1e-15);
        let e1 = embed(pauli_x().as_ref(), &[1], 2).unwrap();
        let expected1 = kron(identity(2).as_ref(), pauli_x().as_ref());
        assert!(max_abs_diff(e1.as_ref(), expected1.as_ref()) < 1e-15);
    }

    #[test]
    fn embed_on_full_support_is_identity_map() {
        let u = expm_i_hermitian(random_hermitian(4, 7).as_ref(), 0.4).unwrap();
        let e = embed(u.as_ref(), &[0, 1], 2).unwrap();
        assert!(max_abs_diff(e.as_ref(), u.as_ref()) < 1e-15);
    }

    #[test]
    fn embed_respects_support_order() {
        let zx = kron(pauli_z().as_ref(), pauli_x().as_ref());
        let reversed = embed(zx.as_ref(), &[1, 0], 2).unwrap();
        let expected = kron(pauli_x().as_ref(), pauli_z().as_ref());
        assert!(max_abs_diff(reversed.as_ref(), expected.as_ref()) < 1e-15);
    }

    #[test]
    fn embed_composes() {
        let u = expm_i_hermitian(random_hermitian(2, 8).as_ref(), 0.4).unwrap();
        let inner = embed(u.as_ref(), &[1], 2).unwrap();
        let outer = embed(inner.as_ref(), &[0, 2], 3).unwrap();
        let direct = embed(u.as_ref(), &[2], 3).unwrap();
        assert!(max_abs_diff(outer.as_ref(), direct.as_ref()) < 1e-15);
    }

    #[test]
    fn embed_over_dense_limit_fails() {
        assert!(matches!(
            embed(pauli_x().as_ref(), &[0], 13),
            Err(Error::DenseLimit { .. })
        ));
    }
}
