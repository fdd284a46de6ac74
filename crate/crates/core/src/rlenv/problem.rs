use nalgebra::DMatrix;

use crate::fockspace::{build_hamiltonian, exact_ground_state, SectorBasis, StateVector};
use crate::integrals::{hydrogen_chain_integrals, IntegralSet, OrbitalBasis};
use crate::{Error, Result};

/// One Hamiltonian on a shared sector together with its exact solution.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    /// Human-readable identifier, e.g. `1.5;2.5` for chain distances.
    pub label: String,
    /// Bond lengths in bohr for chains; empty for external integrals.
    pub distances: Vec<f64>,
    pub hamiltonian: DMatrix<f64>,
    pub e_exact: f64,
    pub ground_state: StateVector,
    /// Index of the determinant with the lowest diagonal energy.
    pub lowest_determinant: usize,
}

impl Problem {
    pub fn from_integrals(label: impl Into<String>, ints: &IntegralSet, basis: &SectorBasis) -> Result<Self> {
        let hamiltonian = build_hamiltonian(ints, basis)?;
        Self::from_hamiltonian(label, Vec::new(), hamiltonian)
    }

    pub fn from_hamiltonian(label: impl Into<String>, distances: Vec<f64>, hamiltonian: DMatrix<f64>) -> Result<Self> {
        let (e_exact, ground_state) = exact_ground_state(&hamiltonian)?;
        let lowest_determinant = (0..hamiltonian.nrows())
            .min_by(|&a, &b| hamiltonian[(a, a)].total_cmp(&hamiltonian[(b, b)]))
            .ok_or_else(|| Error::Dimension("empty Hamiltonian".into()))?;
        Ok(Problem { label: label.into(), distances, hamiltonian, e_exact, ground_state, lowest_determinant })
    }

    /// Linear hydrogen chain in STO-3G with the requested orbitals.
    pub fn hydrogen_chain(distances: &[f64], basis: &SectorBasis, orbitals: OrbitalBasis) -> Result<Self> {
        let mut ints = hydrogen_chain_integrals(distances)?;
        match orbitals {
            OrbitalBasis::Lowdin => {}
            OrbitalBasis::CoreHamiltonian => ints = ints.in_core_hamiltonian_orbitals()?,
            OrbitalBasis::External => {
                return Err(Error::config("orbitals", "external orbitals need integrals from a file"));
            }
        }
        let mut p = Self::from_integrals(chain_label(distances), &ints, basis)?;
        p.distances = distances.to_vec();
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.nrows()
    }
}

/// `d1;d2;...` using the shortest exact decimal for each distance.
pub fn chain_label(distances: &[f64]) -> String {
    distances.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(";")
}
