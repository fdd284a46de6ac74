//! Ground-state solver for small molecules built from two-body exponential
//! transformations.
//!
//! The crate is layered bottom-up:
//!
//! * [`integrals`] - s-type Gaussian integrals for hydrogen chains and FCIDUMP I/O.
//! * [`fockspace`] - fixed-(N, Sz) determinant sectors, second-quantized operators,
//!   the Hamiltonian, 2-RDMs and exact diagonalization.
//! * [`cse`] - contracted Schrodinger equation residuals, exponential updates,
//!   line search and the filtered eigensolver baseline.
//! * [`rlenv`] - the eigensolver iteration exposed as a Markov decision process.
//! * [`dqn`] - dueling double deep Q-network with prioritized replay.
//! * [`harness`] - experiment configuration, orchestration and artifact output.

pub mod cse;
pub mod dqn;
mod error;
pub mod fockspace;
pub mod harness;
pub mod integrals;
pub mod rlenv;

pub use error::{Error, Result};

/// Hartree to millihartree.
pub const MILLIHARTREE: f64 = 1e3;

/// Energy error treated as chemically accurate, in hartree.
pub const CHEMICAL_ACCURACY: f64 = 1.6e-3;
