use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::sector::{split_spin_orbital, SectorBasis};
use crate::{Error, Result};

/// How a bare two-body operator is combined with its adjoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Flavor {
    /// `Gamma^{ij}_{kl}` itself.
    Bare,
    /// `Gamma - Gamma^dagger`; its exponential is unitary.
    AntiHermitian,
    /// `Gamma + Gamma^dagger`.
    Hermitian,
}

impl Flavor {
    pub fn as_str(self) -> &'static str {
        match self {
            Flavor::Bare => "bare",
            Flavor::AntiHermitian => "anti-hermitian",
            Flavor::Hermitian => "hermitian",
        }
    }

    pub fn parse(s: &str) -> Option<Flavor> {
        match s {
            "bare" => Some(Flavor::Bare),
            "anti-hermitian" => Some(Flavor::AntiHermitian),
            "hermitian" => Some(Flavor::Hermitian),
            _ => None,
        }
    }
}

impl std::fmt::Display for Flavor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A spin-conserving two-body operator `a+_i a+_j a_l a_k` with `i < j`,
/// `k < l`, in one of three flavors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Generator {
    i: usize,
    j: usize,
    k: usize,
    l: usize,
    flavor: Flavor,
}

impl Generator {
    pub fn new(n_spatial: usize, [i, j, k, l]: [usize; 4], flavor: Flavor) -> Result<Self> {
        let n_so = 2 * n_spatial;
        if i >= j || k >= l {
            return Err(Error::Generator(format!("indices ({i},{j};{k},{l}) need i<j and k<l")));
        }
        if j >= n_so || l >= n_so {
            return Err(Error::Generator(format!("indices ({i},{j};{k},{l}) out of range for {n_so} spin orbitals")));
        }
        let betas = |a: usize, b: usize| {
            usize::from(split_spin_orbital(n_spatial, a).1) + usize::from(split_spin_orbital(n_spatial, b).1)
        };
        if betas(i, j) != betas(k, l) {
            return Err(Error::Generator(format!("({i},{j};{k},{l}) does not conserve spin")));
        }
        Ok(Generator { i, j, k, l, flavor })
    }

    pub fn indices(&self) -> [usize; 4] {
        [self.i, self.j, self.k, self.l]
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    pub fn with_flavor(self, flavor: Flavor) -> Self {
        Generator { flavor, ..self }
    }

    /// Creation and annihilation pairs coincide: the bare operator is `n_i n_j`.
    pub fn is_number_pair(&self) -> bool {
        self.i == self.k && self.j == self.l
    }
}

/// Sparse sector matrix of `Gamma^{ij}_{kl}` for one generator.
///
/// For a non-diagonal generator every determinant appears in at most one
/// coupling (the annihilated set and the created set differ, so a determinant
/// cannot be both a source and an image), which makes the exponential a set
/// of independent two-level rotations.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorMatrix {
    pub generator: Generator,
    pub dim: usize,
    /// `(ket, bra, sign)` with `Gamma |ket> = sign |bra>`.
    pub couplings: Vec<(usize, usize, f64)>,
}

impl GeneratorMatrix {
    pub fn new(generator: Generator, basis: &SectorBasis) -> Result<Self> {
        let [i, j, k, l] = generator.indices();
        let n_so = basis.n_spin_orbitals();
        if j >= n_so || l >= n_so {
            return Err(Error::Generator(format!("generator indices exceed {n_so} spin orbitals")));
        }
        let pairs = basis.pair_index();
        let upper = pairs.index(i, j) as u32;
        let lower = pairs.index(k, l) as u32;
        let couplings = basis
            .pair_excitations()
            .iter()
            .filter(|e| e.upper == upper && e.lower == lower)
            .map(|e| (e.ket as usize, e.bra as usize, e.sign))
            .collect();
        Ok(GeneratorMatrix { generator, dim: basis.dim(), couplings })
    }

    /// The generator acts as the zero operator on this sector.
    pub fn is_zero(&self) -> bool {
        self.couplings.is_empty() || (self.generator.is_number_pair() && self.generator.flavor == Flavor::AntiHermitian)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut g = DMatrix::zeros(self.dim, self.dim);
        for &(ket, bra, s) in &self.couplings {
            g[(bra, ket)] += s;
        }
        match self.generator.flavor {
            Flavor::Bare => g,
            Flavor::AntiHermitian => &g - g.transpose(),
            Flavor::Hermitian => &g + g.transpose(),
        }
    }

    /// `y = A x` for the flavored operator `A`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for &(ket, bra, s) in &self.couplings {
            match self.generator.flavor {
                Flavor::Bare => y[bra] += s * x[ket],
                Flavor::AntiHermitian => {
                    y[bra] += s * x[ket];
                    y[ket] -= s * x[bra];
                }
                Flavor::Hermitian => {
                    y[bra] += s * x[ket];
                    y[ket] += s * x[bra];
                }
            }
        }
    }
}

/// Dense sector matrix of the flavored generator.
pub fn build_gamma(generator: Generator, basis: &SectorBasis) -> Result<DMatrix<f64>> {
    Ok(GeneratorMatrix::new(generator, basis)?.to_dense())
}

/// Every canonical spin-conserving generator over `n_spatial` orbitals: pairs
/// `P = (i<j)` and `Q = (k<l)` of equal beta count with `P <= Q` in pair
/// order, so a bare operator and its adjoint are listed once.
pub fn canonical_generators(n_spatial: usize, flavor: Flavor) -> Vec<Generator> {
    let pairs = super::sector::PairIndex::new(2 * n_spatial);
    let betas = |p: usize| {
        let (a, b) = pairs.pair(p);
        usize::from(split_spin_orbital(n_spatial, a).1) + usize::from(split_spin_orbital(n_spatial, b).1)
    };
    let mut out = Vec::new();
    for p in 0..pairs.len() {
        for q in p..pairs.len() {
            if betas(p) != betas(q) {
                continue;
            }
            let (i, j) = pairs.pair(p);
            let (k, l) = pairs.pair(q);
            out.push(Generator { i, j, k, l, flavor });
        }
    }
    out
}
