use nalgebra::DMatrix;

use super::hamiltonian::{spin_orbital_h, spin_orbital_u};
use super::sector::{PairIndex, SectorBasis};
use super::StateVector;
use crate::integrals::IntegralSet;
use crate::{Error, Result};

/// Rank-4 tensor `T^{ij}_{kl}` antisymmetric in `(i, j)` and in `(k, l)`,
/// stored as the matrix `T[(i<j), (k<l)]` over canonical pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoBodyTensor {
    pairs: PairIndex,
    data: DMatrix<f64>,
}

impl TwoBodyTensor {
    pub fn zeros(n_spin_orbitals: usize) -> Self {
        let pairs = PairIndex::new(n_spin_orbitals);
        let m = pairs.len();
        TwoBodyTensor { pairs, data: DMatrix::zeros(m, m) }
    }

    pub fn from_pair_matrix(pairs: PairIndex, data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() != pairs.len() || data.ncols() != pairs.len() {
            return Err(Error::Dimension("pair matrix does not match pair index".into()));
        }
        Ok(TwoBodyTensor { pairs, data })
    }

    pub fn n_spin_orbitals(&self) -> usize {
        self.pairs.n_spin_orbitals()
    }

    pub fn pair_index(&self) -> &PairIndex {
        &self.pairs
    }

    /// Canonical block `T[(i<j), (k<l)]`.
    pub fn pair_matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn pair_matrix_mut(&mut self) -> &mut DMatrix<f64> {
        &mut self.data
    }

    /// Element for arbitrary index order, using the antisymmetry.
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        if i == j || k == l {
            return 0.0;
        }
        let (p, s1) = if i < j { (self.pairs.index(i, j), 1.0) } else { (self.pairs.index(j, i), -1.0) };
        let (q, s2) = if k < l { (self.pairs.index(k, l), 1.0) } else { (self.pairs.index(l, k), -1.0) };
        s1 * s2 * self.data[(p, q)]
    }

    /// Conjugate swap `(ij) <-> (kl)`.
    pub fn adjoint(&self) -> Self {
        TwoBodyTensor { pairs: self.pairs.clone(), data: self.data.transpose() }
    }

    /// `sum_{ijkl} A^{ij}_{kl} B^{ij}_{kl}` over all index orders.
    pub fn contract(&self, other: &TwoBodyTensor) -> f64 {
        4.0 * self.data.dot(&other.data)
    }

    /// Frobenius norm over every index quadruple.
    pub fn frobenius_norm(&self) -> f64 {
        2.0 * self.data.norm()
    }

    /// `sum_{ij} T^{ij}_{ij}` over all ordered pairs.
    pub fn trace(&self) -> f64 {
        2.0 * self.data.trace()
    }
}

/// Transition 2-RDM `<bra| a+_i a+_j a_l a_k |ket>`.
pub fn transition_2rdm(bra: &[f64], ket: &[f64], basis: &SectorBasis) -> TwoBodyTensor {
    let mut t = TwoBodyTensor::zeros(basis.n_spin_orbitals());
    let m = &mut t.data;
    for e in basis.pair_excitations() {
        let c = ket[e.ket as usize];
        if c == 0.0 {
            continue;
        }
        m[(e.upper as usize, e.lower as usize)] += bra[e.bra as usize] * e.sign * c;
    }
    t
}

/// 2-RDM `D^{ij}_{kl} = <psi| a+_i a+_j a_l a_k |psi>`.
pub fn compute_2rdm(state: &StateVector, basis: &SectorBasis) -> TwoBodyTensor {
    let psi = state.amplitudes().as_slice();
    transition_2rdm(psi, psi, basis)
}

/// Two-electron reduced Hamiltonian `K` with `Tr[K D] = <H_elec>`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedHamiltonian {
    pub k2: TwoBodyTensor,
    pub n_electrons: usize,
    /// Constant not carried by `k2`.
    pub e_nuc: f64,
}

impl ReducedHamiltonian {
    /// Electronic energy `Tr[K D]`.
    pub fn electronic_energy(&self, d2: &TwoBodyTensor) -> f64 {
        self.k2.contract(d2)
    }

    /// Total energy including nuclear repulsion.
    pub fn energy(&self, d2: &TwoBodyTensor) -> f64 {
        self.electronic_energy(d2) + self.e_nuc
    }
}

/// `K^{ij}_{kl} = (1/(N-1)) (h ^ delta)^{ij}_{kl} + (1/2) u^{ij}_{kl}`, with the wedge
/// product and `u` antisymmetrized over both index pairs.
pub fn build_reduced_hamiltonian(ints: &IntegralSet, n_electrons: usize) -> Result<ReducedHamiltonian> {
    if n_electrons < 2 {
        return Err(Error::Domain(format!("reduced Hamiltonian needs at least two electrons, got {n_electrons}")));
    }
    let n_so = 2 * ints.n_spatial;
    let pairs = PairIndex::new(n_so);
    let m = pairs.len();
    let scale = 1.0 / (n_electrons as f64 - 1.0);
    let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let data = DMatrix::from_fn(m, m, |p, q| {
        let (i, j) = pairs.pair(p);
        let (k, l) = pairs.pair(q);
        let h = |a, b| spin_orbital_h(ints, a, b);
        let one = 0.25
            * scale
            * (delta(i, k) * h(j, l) - delta(i, l) * h(j, k) - delta(j, k) * h(i, l) + delta(j, l) * h(i, k));
        let two = 0.25 * (spin_orbital_u(ints, i, j, k, l) - spin_orbital_u(ints, i, j, l, k));
        one + two
    });
    Ok(ReducedHamiltonian { k2: TwoBodyTensor { pairs, data }, n_electrons, e_nuc: ints.e_nuc })
}
