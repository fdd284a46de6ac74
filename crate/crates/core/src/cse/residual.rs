use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::fockspace::{transition_2rdm, Flavor, Generator, SectorBasis, StateVector, TwoBodyTensor};
use crate::{Error, Result};

/// Which part of the residual a scalar norm is taken over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResidualNorm {
    /// Frobenius norm of the whole tensor.
    #[default]
    Full,
    /// Frobenius norm of the anti-Hermitian part only.
    AntiHermitian,
}

/// `R^{ij}_{kl} = <psi| Gamma^{ij}_{kl} (H - E) |psi>` with `E = <psi|H|psi>`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualTensor {
    tensor: TwoBodyTensor,
    energy: f64,
}

impl ResidualTensor {
    pub fn tensor(&self) -> &TwoBodyTensor {
        &self.tensor
    }

    /// Energy `<psi|H|psi>` the residual was taken at.
    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.tensor.get(i, j, k, l)
    }

    /// `(1/2) <{Gamma, H - E}>`.
    pub fn hermitian_part(&self) -> TwoBodyTensor {
        let m = self.tensor.pair_matrix();
        self.part(0.5 * (m + m.transpose()))
    }

    /// `(1/2) <[Gamma, H]>`.
    pub fn anti_hermitian_part(&self) -> TwoBodyTensor {
        let m = self.tensor.pair_matrix();
        self.part(0.5 * (m - m.transpose()))
    }

    fn part(&self, m: DMatrix<f64>) -> TwoBodyTensor {
        TwoBodyTensor::from_pair_matrix(self.tensor.pair_index().clone(), m).expect("same shape")
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.tensor.frobenius_norm()
    }

    pub fn norm(&self, kind: ResidualNorm) -> f64 {
        match kind {
            ResidualNorm::Full => self.frobenius_norm(),
            ResidualNorm::AntiHermitian => {
                let m = self.tensor.pair_matrix();
                (m - m.transpose()).norm()
            }
        }
    }

    fn pq(&self, g: &Generator) -> (usize, usize) {
        let [i, j, k, l] = g.indices();
        let pairs = self.tensor.pair_index();
        (pairs.index(i, j), pairs.index(k, l))
    }

    /// Residual coefficient matching the generator's flavor: the anti-Hermitian
    /// part, the Hermitian part, or the raw element for bare operators.
    pub fn coefficient(&self, g: &Generator) -> f64 {
        let (p, q) = self.pq(g);
        let m = self.tensor.pair_matrix();
        match g.flavor() {
            Flavor::Bare => m[(p, q)],
            Flavor::AntiHermitian => 0.5 * (m[(p, q)] - m[(q, p)]),
            Flavor::Hermitian => 0.5 * (m[(p, q)] + m[(q, p)]),
        }
    }

    /// `dE/dtheta` at `theta = 0` for `exp(theta A) |psi>`, renormalized where needed.
    pub fn energy_gradient(&self, g: &Generator) -> f64 {
        let (p, q) = self.pq(g);
        let m = self.tensor.pair_matrix();
        match g.flavor() {
            Flavor::Bare => 2.0 * m[(q, p)],
            Flavor::AntiHermitian => -2.0 * (m[(p, q)] - m[(q, p)]),
            Flavor::Hermitian => 2.0 * (m[(p, q)] + m[(q, p)]),
        }
    }
}

/// Energy and `(H - E) psi` for a normalized state.
pub(crate) fn energy_and_shifted(psi: &[f64], h: &DMatrix<f64>) -> (f64, Vec<f64>) {
    let n = psi.len();
    let mut hpsi = vec![0.0; n];
    for c in 0..n {
        let x = psi[c];
        if x == 0.0 {
            continue;
        }
        let col = h.column(c);
        for (r, v) in hpsi.iter_mut().enumerate() {
            *v += col[r] * x;
        }
    }
    let e: f64 = hpsi.iter().zip(psi).map(|(a, b)| a * b).sum();
    for (v, x) in hpsi.iter_mut().zip(psi) {
        *v -= e * x;
    }
    (e, hpsi)
}

pub(crate) fn residual_of_slice(psi: &[f64], h: &DMatrix<f64>, basis: &SectorBasis) -> ResidualTensor {
    let (energy, phi) = energy_and_shifted(psi, h);
    ResidualTensor { tensor: transition_2rdm(psi, &phi, basis), energy }
}

/// Residual tensor of a normalized state.
pub fn residual_tensor(psi: &StateVector, h: &DMatrix<f64>, basis: &SectorBasis) -> Result<ResidualTensor> {
    if psi.dim() != basis.dim() || h.nrows() != basis.dim() || h.ncols() != basis.dim() {
        return Err(Error::Dimension(format!(
            "state of length {} and {}x{} Hamiltonian on a sector of dimension {}",
            psi.dim(),
            h.nrows(),
            h.ncols(),
            basis.dim()
        )));
    }
    let norm = psi.norm();
    if (norm - 1.0).abs() > crate::fockspace::NORM_TOLERANCE {
        return Err(Error::NotNormalized(norm));
    }
    Ok(residual_of_slice(psi.as_slice(), h, basis))
}
