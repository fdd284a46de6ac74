//! Fixed-(N, Sz) determinant spaces and second-quantized operators on them.
//!
//! Spin orbitals are ordered with every alpha orbital first, then every beta
//! orbital: spin orbital `p < n_spatial` is `(p, alpha)` and `p >= n_spatial`
//! is `(p - n_spatial, beta)`. Amplitudes are real: every operator built here
//! from real integrals has a real matrix.

mod hamiltonian;
mod operators;
mod rdm;
mod sector;

pub use hamiltonian::{build_hamiltonian, build_s_squared, exact_ground_state, project_lowest_spin, spectrum};
pub use operators::{build_gamma, canonical_generators, Flavor, Generator, GeneratorMatrix};
pub use rdm::{build_reduced_hamiltonian, compute_2rdm, transition_2rdm, ReducedHamiltonian, TwoBodyTensor};
pub use sector::{
    annihilate, apply_pair_excitation, apply_single_excitation, create, enumerate_sector, spin_orbital,
    split_spin_orbital, Determinant, PairExcitation, PairIndex, SectorBasis, MAX_SPATIAL,
};

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Allowed deviation of `||psi||` from one before a state is rejected.
pub const NORM_TOLERANCE: f64 = 1e-10;

/// Unit-norm real amplitude vector over a sector basis.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(DVector<f64>);

impl StateVector {
    /// Wraps amplitudes that are already normalized.
    pub fn new(amplitudes: DVector<f64>) -> Result<Self> {
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized(norm));
        }
        Ok(StateVector(amplitudes))
    }

    pub fn from_unnormalized(amplitudes: DVector<f64>) -> Result<Self> {
        let norm = amplitudes.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::NotNormalized(norm));
        }
        Ok(StateVector(amplitudes / norm))
    }

    pub fn basis_state(dim: usize, index: usize) -> Self {
        let mut v = DVector::zeros(dim);
        v[index] = 1.0;
        StateVector(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn amplitudes(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn into_inner(self) -> DVector<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    /// `<psi|M|psi>`.
    pub fn expectation(&self, m: &DMatrix<f64>) -> f64 {
        (m * &self.0).dot(&self.0)
    }

    /// `|| self - other ||_2`.
    pub fn distance(&self, other: &StateVector) -> f64 {
        (&self.0 - &other.0).norm()
    }
}
