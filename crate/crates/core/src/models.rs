//! Benchmark Hamiltonians on small grids and the JSON term-list format.
//!
//! Sites are numbered row-major: site `r·cols + c`.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{Hamiltonian, Pauli, PauliString, PauliTerm};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Topology {
    Line,
    Square,
    Triangular,
}

impl FromStr for Topology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "line" => Ok(Topology::Line),
            "square" => Ok(Topology::Square),
            "triangular" => Ok(Topology::Triangular),
            other => Err(Error::InvalidGrid(format!("unknown topology {other:?}"))),
        }
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Topology::Line => "line",
            Topology::Square => "square",
            Topology::Triangular => "triangular",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GridSpec {
    rows: usize,
    cols: usize,
    topology: Topology,
}

impl GridSpec {
    pub fn new(rows: usize, cols: usize, topology: Topology) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidGrid(format!("{rows}×{cols} has no sites")));
        }
        if topology == Topology::Line && rows != 1 && cols != 1 {
            return Err(Error::InvalidGrid(format!(
                "a line needs rows == 1 or cols == 1, got {rows}×{cols}"
            )));
        }
        Ok(GridSpec {
            rows,
            cols,
            topology,
        })
    }

    pub fn line(sites: usize) -> Result<Self> {
        GridSpec::new(sites, 1, Topology::Line)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn sites(&self) -> usize {
        self.rows * self.cols
    }
}

/// Model coefficients. Spin models use `j` and `h`; Fermi–Hubbard uses
/// `t_hop` and `u`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    pub j: f64,
    pub h: f64,
    pub t_hop: f64,
    pub u: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            j: 1.0,
            h: 1.0,
            t_hop: 1.0,
            u: 2.0,
        }
    }
}

impl ModelParams {
    fn validate(&self) -> Result<()> {
        for v in [self.j, self.h, self.t_hop, self.u] {
            if !v.is_finite() {
                return Err(Error::InvalidCoefficient(v));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Model {
    Ising,
    Heisenberg,
    FermiHubbard,
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ising" => Ok(Model::Ising),
            "heisenberg" => Ok(Model::Heisenberg),
            "fh" | "fermi-hubbard" => Ok(Model::FermiHubbard),
            other => Err(Error::InvalidConfig(format!("unknown model {other:?}"))),
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::Ising => "ising",
            Model::Heisenberg => "heisenberg",
            Model::FermiHubbard => "fh",
        })
    }
}

pub fn build_model(model: Model, g: GridSpec, p: ModelParams) -> Result<Hamiltonian> {
    match model {
        Model::Ising => build_ising(g, p),
        Model::Heisenberg => build_heisenberg(g, p),
        Model::FermiHubbard => build_fermi_hubbard(g, p),
    }
}

/// Nearest-neighbour bonds. Triangular grids add the down-right diagonal of
/// every plaquette to the square bonds.
pub fn grid_edges(g: GridSpec) -> Result<Vec<(usize, usize)>> {
    if g.sites() < 2 {
        return Err(Error::InvalidGrid("a grid needs at least two sites".into()));
    }
    let site = |r: usize, c: usize| r * g.cols + c;
    let mut edges = Vec::new();
    for r in 0..g.rows {
        for c in 0..g.cols {
            if c + 1 < g.cols {
                edges.push((site(r, c), site(r, c + 1)));
            }
            if r + 1 < g.rows {
                edges.push((site(r, c), site(r + 1, c)));
            }
            if g.topology == Topology::Triangular && r + 1 < g.rows && c + 1 < g.cols {
                edges.push((site(r, c), site(r + 1, c + 1)));
            }
        }
    }
    Ok(edges)
}

fn two_body(n: usize, coeff: f64, a: usize, b: usize, p: Pauli) -> Result<PauliTerm> {
    PauliTerm::sparse(coeff, n, &[(a, p), (b, p)])
}

/// Transverse-field Ising: `Σ_edges J·ZᵢZⱼ + Σ_sites h·Xᵢ`.
pub fn build_ising(g: GridSpec, p: ModelParams) -> Result<Hamiltonian> {
    p.validate()?;
    let n = g.sites();
    let mut terms = Vec::new();
    for (a, b) in grid_edges(g)? {
        terms.push(two_body(n, p.j, a, b, Pauli::Z)?);
    }
    for s in 0..n {
        terms.push(PauliTerm::sparse(p.h, n, &[(s, Pauli::X)])?);
    }
    Hamiltonian::new(n, terms)
}

/// `Σ_edges J·(XX + YY + ZZ)`.
pub fn build_heisenberg(g: GridSpec, p: ModelParams) -> Result<Hamiltonian> {
    p.validate()?;
    let n = g.sites();
    let mut terms = Vec::new();
    for (a, b) in grid_edges(g)? {
        for pauli in [Pauli::X, Pauli::Y, Pauli::Z] {
            terms.push(two_body(n, p.j, a, b, pauli)?);
        }
    }
    Hamiltonian::new(n, terms)
}

/// Spin-`σ` orbital of `site` under the interleaved Jordan–Wigner order.
pub fn fh_qubit(site: usize, spin_down: bool) -> usize {
    2 * site + spin_down as usize
}

/// Jordan–Wigner Fermi–Hubbard on `2·sites` qubits.
///
/// Hopping `−t(c†ᵢcⱼ + h.c.)` becomes `−t/2·(XᵢZ…Xⱼ + YᵢZ…Yⱼ)`; the on-site
/// `U·n↑n↓` becomes `U/4·(I − Z↑ − Z↓ + Z↑Z↓)`, whose identity part goes to
/// the Hamiltonian's identity offset.
pub fn build_fermi_hubbard(g: GridSpec, p: ModelParams) -> Result<Hamiltonian> {
    p.validate()?;
    let sites = g.sites();
    let n = 2 * sites;
    let mut terms = Vec::new();
    for (i, j) in grid_edges(g)? {
        for down in [false, true] {
            let (a, b) = {
                let (a, b) = (fh_qubit(i, down), fh_qubit(j, down));
                (a.min(b), a.max(b))
            };
            for end in [Pauli::X, Pauli::Y] {
                let mut ops = vec![(a, end), (b, end)];
                ops.extend((a + 1..b).map(|q| (q, Pauli::Z)));
                terms.push(PauliTerm::sparse(-p.t_hop / 2.0, n, &ops)?);
            }
        }
    }
    let mut offset = 0.0;
    for s in 0..sites {
        let (up, dn) = (fh_qubit(s, false), fh_qubit(s, true));
        let w = p.u / 4.0;
        terms.push(PauliTerm::sparse(-w, n, &[(up, Pauli::Z)])?);
        terms.push(PauliTerm::sparse(-w, n, &[(dn, Pauli::Z)])?);
        terms.push(PauliTerm::sparse(w, n, &[(up, Pauli::Z), (dn, Pauli::Z)])?);
        offset += w;
    }
    Hamiltonian::with_offset(n, terms, offset)
}

#[derive(Serialize)]
struct FileOut<'a> {
    num_qubits: usize,
    terms: Vec<TermOut<'a>>,
}

#[derive(Serialize)]
struct TermOut<'a> {
    coeff: f64,
    pauli: std::borrow::Cow<'a, str>,
}

#[derive(Deserialize)]
struct FileIn {
    num_qubits: usize,
    terms: Vec<TermIn>,
}

#[derive(Deserialize)]
struct TermIn {
    coeff: serde_json::Value,
    pauli: String,
}

/// Line (1-based) of the `index`-th `"pauli"` key, for diagnostics.
fn term_line(text: &str, index: usize) -> usize {
    text.match_indices("\"pauli\"")
        .nth(index)
        .map(|(pos, _)| text[..pos].matches('\n').count() + 1)
        .unwrap_or(0)
}

pub fn hamiltonian_from_json(text: &str) -> Result<Hamiltonian> {
    let raw: FileIn =
        serde_json::from_str(text).map_err(|e| Error::parse(e.line(), e.to_string()))?;
    let n = raw.num_qubits;
    let mut terms = Vec::with_capacity(raw.terms.len());
    for (k, t) in raw.terms.iter().enumerate() {
        let fail = |msg: String| Error::parse(term_line(text, k), format!("term {k}: {msg}"));
        let coeff = t
            .coeff
            .as_f64()
            .ok_or_else(|| fail(format!("coefficient must be a real number, got {}", t.coeff)))?;
        let len = t.pauli.chars().count();
        if len != n {
            return Err(fail(format!(
                "pauli string {:?} has length {len}, expected {n}",
                t.pauli
            )));
        }
        let string: PauliString = t.pauli.parse().map_err(|e: Error| fail(e.to_string()))?;
        terms.push(PauliTerm::new(coeff, string).map_err(|e| fail(e.to_string()))?);
    }
    Hamiltonian::new(n, terms)
}

/// Serialize; a nonzero identity offset is written as an all-`I` term.
pub fn hamiltonian_to_json(h: &Hamiltonian) -> Result<String> {
    let n = h.num_qubits();
    let mut terms: Vec<TermOut> = h
        .terms()
        .iter()
        .map(|t| TermOut {
            coeff: t.coefficient(),
            pauli: t.string().to_string().into(),
        })
        .collect();
    if h.identity_offset() != 0.0 {
        terms.push(TermOut {
            coeff: h.identity_offset(),
            pauli: "I".repeat(n).into(),
        });
    }
    Ok(serde_json::to_string_pretty(&FileOut {
        num_qubits: n,
        terms,
    })?)
}

pub fn load_hamiltonian(path: impl AsRef<Path>) -> Result<Hamiltonian> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    hamiltonian_from_json(&text)
}

pub fn save_hamiltonian(h: &Hamiltonian, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = hamiltonian_to_json(h)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
