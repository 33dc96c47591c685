//! Circuit synthesis: exact Pauli ladders and search-based block synthesis.

pub mod cache;
pub mod circuit;
pub mod exact;
pub mod fit;
pub mod mcts;

pub use cache::{fingerprint, synthesize_cached, SynthCache};
pub use circuit::{circuit_to_matrix, metrics, simplify, u3_matrix, zyz_decompose, Circuit, Gate, Metrics};
pub use exact::pauli_exp_circuit;
pub use mcts::{reward, synthesize, uct_score, SynthConfig, SynthResult};
