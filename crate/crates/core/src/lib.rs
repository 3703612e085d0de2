//! Quantum backflow for a particle on a ring, simulated on qubits.
//!
//! `N` qubits encode the momentum states `|0⟩ … |2^N - 1⟩`. The crate builds
//! the Pauli decomposition of the current operator ([`pauli`]), simulates
//! statevectors ([`statevector`]), synthesizes preparation and readout
//! circuits ([`circuit`]) and estimates the current of the backflowing state
//! exactly, from shots, or from externally measured data ([`experiment`]).

pub mod circuit;
mod dd;
pub mod error;
pub mod experiment;
pub mod pauli;
pub mod statevector;

pub use error::{Error, Result};
