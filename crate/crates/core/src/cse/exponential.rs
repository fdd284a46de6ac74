use crate::fockspace::{Flavor, Generator, GeneratorMatrix, SectorBasis, StateVector};
use crate::{Error, Result};

/// Result of `exp(theta A) |psi>`.
#[derive(Debug, Clone, PartialEq)]
pub struct Exponentiated {
    pub state: StateVector,
    /// Norm before renormalization; 1 up to rounding for anti-Hermitian generators.
    pub pre_norm: f64,
}

/// Writes the unnormalized `exp(theta A) psi` into `out` and returns its norm.
///
/// Each non-diagonal coupling spans an invariant two-dimensional block, so the
/// exponential is a product of independent closed-form block exponentials:
/// rotations, boosts, or shears by flavor. A number pair is diagonal.
pub fn exp_action_into(m: &GeneratorMatrix, psi: &[f64], theta: f64, out: &mut [f64]) -> f64 {
    out.copy_from_slice(psi);
    let flavor = m.generator.flavor();
    if m.generator.is_number_pair() {
        let rate = match flavor {
            Flavor::AntiHermitian => 0.0,
            Flavor::Bare => 1.0,
            Flavor::Hermitian => 2.0,
        };
        for &(ket, _, s) in &m.couplings {
            out[ket] = psi[ket] * (rate * s * theta).exp();
        }
    } else {
        match flavor {
            Flavor::Bare => {
                for &(ket, bra, s) in &m.couplings {
                    out[bra] = psi[bra] + theta * s * psi[ket];
                }
            }
            Flavor::AntiHermitian => {
                let (sn, cs) = theta.sin_cos();
                for &(ket, bra, s) in &m.couplings {
                    let (a, b) = (psi[ket], psi[bra]);
                    out[bra] = cs * b + s * sn * a;
                    out[ket] = cs * a - s * sn * b;
                }
            }
            Flavor::Hermitian => {
                let (sh, ch) = (theta.sinh(), theta.cosh());
                for &(ket, bra, s) in &m.couplings {
                    let (a, b) = (psi[ket], psi[bra]);
                    out[bra] = ch * b + s * sh * a;
                    out[ket] = ch * a + s * sh * b;
                }
            }
        }
    }
    out.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Applies a prebuilt generator matrix; see [`apply_exponential`].
pub fn apply_exponential_matrix(m: &GeneratorMatrix, psi: &StateVector, theta: f64) -> Result<Exponentiated> {
    if !theta.is_finite() {
        return Err(Error::NonFinite("theta"));
    }
    if psi.dim() != m.dim {
        return Err(Error::Dimension(format!("state of length {} for generator on {}", psi.dim(), m.dim)));
    }
    let mut out = vec![0.0; m.dim];
    let pre_norm = exp_action_into(m, psi.as_slice(), theta, &mut out);
    let v = nalgebra::DVector::from_vec(out);
    let state = if m.generator.flavor() == Flavor::AntiHermitian {
        StateVector::new(v)?
    } else {
        StateVector::from_unnormalized(v)?
    };
    Ok(Exponentiated { state, pre_norm })
}

/// `exp(theta A) |psi>` for the flavored generator `A`; non-unitary flavors are renormalized.
pub fn apply_exponential(psi: &StateVector, gen: &Generator, theta: f64, basis: &SectorBasis) -> Result<Exponentiated> {
    let m = GeneratorMatrix::new(*gen, basis)?;
    apply_exponential_matrix(&m, psi, theta)
}
