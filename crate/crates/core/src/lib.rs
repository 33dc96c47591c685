//! Partial-Trotterization compiler: Pauli-sum Hamiltonians in, optimized
//! `u3`/`cx` circuits approximating `e^{iHt}` out.

pub mod compile;
pub mod error;
pub mod numerics;
pub mod models;
pub mod partition;
pub mod pauli;
pub mod qasm;
pub mod schedule;
pub mod suite;
pub mod synth;

pub use error::{Error, Result};
pub use pauli::{commutator, commutes, multiply, to_matrix, Hamiltonian, Pauli, PauliString, PauliTerm, Phase};
pub use compile::{analyze, compile, verify, CompileOptions, CompileReport, Compiled, Method};
