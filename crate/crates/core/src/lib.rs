//! Simulation of a multi-controlled phase gate on qutrits held in separate
//! cavities and coupled through a shared ancilla qutrit.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod hamiltonian;
pub mod hilbert;
pub mod ideal;
pub mod lindblad;
pub mod schedule;

pub use error::{Error, Result};
