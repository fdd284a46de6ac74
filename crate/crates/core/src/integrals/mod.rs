//! One- and two-electron integrals.
//!
//! Integrals are produced in an orthonormal spatial-orbital basis. The
//! two-electron tensor uses the physicist convention `u[i][j][k][l] = <ij|kl>`,
//! so the electronic Hamiltonian reads
//! `sum h_pq a+_p a_q + 1/2 sum <pq|rs> a+_p a+_q a_s a_r`.

mod basis;
mod boys;
mod fcidump;

pub use basis::{electron_repulsion, hydrogen_sto3g_orbital, kinetic, nuclear_attraction, overlap, ContractedSOrbital};
pub use boys::{boys_f0, BOYS_SWITCHOVER};
pub use fcidump::{read_fcidump, write_fcidump, Fcidump};

use nalgebra::{DMatrix, SymmetricEigen};

use crate::{Error, Result};

pub type Vec3 = [f64; 3];

/// Smallest allowed distance between two nuclei, in bohr.
pub const MIN_SEPARATION: f64 = 1e-8;

/// Nuclear framework in bohr.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    positions: Vec<Vec3>,
    charges: Vec<u32>,
}

impl Geometry {
    pub fn new(positions: Vec<Vec3>, charges: Vec<u32>) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::Geometry("at least one atom is required".into()));
        }
        if positions.len() != charges.len() {
            return Err(Error::Geometry(format!("{} positions but {} charges", positions.len(), charges.len())));
        }
        if charges.contains(&0) {
            return Err(Error::Geometry("nuclear charges must be positive".into()));
        }
        if positions.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::Geometry("non-finite coordinate".into()));
        }
        for a in 0..positions.len() {
            for b in 0..a {
                if basis::dist2(positions[a], positions[b]).sqrt() <= MIN_SEPARATION {
                    return Err(Error::Geometry(format!("atoms {b} and {a} coincide")));
                }
            }
        }
        Ok(Geometry { positions, charges })
    }

    /// Linear hydrogen chain along z with consecutive spacings `distances`.
    pub fn hydrogen_chain(distances: &[f64]) -> Result<Self> {
        let mut z = 0.0;
        let mut positions = vec![[0.0, 0.0, 0.0]];
        for &d in distances {
            z += d;
            positions.push([0.0, 0.0, z]);
        }
        let n = positions.len();
        Geometry::new(positions, vec![1; n])
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn charges(&self) -> &[u32] {
        &self.charges
    }

    pub fn n_atoms(&self) -> usize {
        self.positions.len()
    }

    pub fn nuclear_repulsion(&self) -> f64 {
        let mut e = 0.0;
        for a in 0..self.n_atoms() {
            for b in 0..a {
                let r = basis::dist2(self.positions[a], self.positions[b]).sqrt();
                e += f64::from(self.charges[a]) * f64::from(self.charges[b]) / r;
            }
        }
        e
    }

    pub fn translated(&self, shift: Vec3) -> Result<Self> {
        let positions = self.positions.iter().map(|p| [p[0] + shift[0], p[1] + shift[1], p[2] + shift[2]]).collect();
        Geometry::new(positions, self.charges.clone())
    }
}

/// Dense rank-4 tensor over `n` indices, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor4 {
    n: usize,
    data: Vec<f64>,
}

impl Tensor4 {
    pub fn zeros(n: usize) -> Self {
        Tensor4 { n, data: vec![0.0; n * n * n * n] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn offset(&self, i: usize, j: usize, k: usize, l: usize) -> usize {
        ((i * self.n + j) * self.n + k) * self.n + l
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.data[self.offset(i, j, k, l)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, l: usize, v: f64) {
        let o = self.offset(i, j, k, l);
        self.data[o] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Stores `v` in every slot related to `<ij|kl>` by the real-orbital
    /// permutational symmetry.
    pub fn set_physicist_symmetric(&mut self, i: usize, j: usize, k: usize, l: usize, v: f64) {
        for (a, b, c, d) in [
            (i, j, k, l),
            (j, i, l, k),
            (k, l, i, j),
            (l, k, j, i),
            (k, j, i, l),
            (l, i, j, k),
            (i, l, k, j),
            (j, k, l, i),
        ] {
            self.set(a, b, c, d, v);
        }
    }
}

/// Which orthonormal spatial orbitals the integrals refer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrbitalBasis {
    /// Symmetrically orthogonalized atomic orbitals (`S^-1/2`).
    Lowdin,
    /// Eigenvectors of the one-electron Hamiltonian, ascending energy.
    CoreHamiltonian,
    /// Whatever an external file provided.
    External,
}

/// Integrals over orthonormal real spatial orbitals.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegralSet {
    pub n_spatial: usize,
    /// One-electron integrals `h[j][l]`, hartree.
    pub h: DMatrix<f64>,
    /// Two-electron integrals `u[i][j][k][l] = <ij|kl>`, hartree.
    pub u: Tensor4,
    pub e_nuc: f64,
    pub orbitals: OrbitalBasis,
}

impl IntegralSet {
    /// Index convention of `u`.
    pub const CONVENTION: &'static str = "physicist <ij|kl> = (ik|jl)";

    pub fn zeros(n_spatial: usize) -> Self {
        IntegralSet {
            n_spatial,
            h: DMatrix::zeros(n_spatial, n_spatial),
            u: Tensor4::zeros(n_spatial),
            e_nuc: 0.0,
            orbitals: OrbitalBasis::External,
        }
    }

    /// Largest violation of `h = h^T` and of the 8-fold symmetry of `u`.
    pub fn symmetry_defect(&self) -> f64 {
        let n = self.n_spatial;
        let mut worst = (&self.h - self.h.transpose()).amax();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let v = self.u.get(i, j, k, l);
                        for w in [
                            self.u.get(j, i, l, k),
                            self.u.get(k, l, i, j),
                            self.u.get(l, k, j, i),
                            self.u.get(k, j, i, l),
                            self.u.get(l, i, j, k),
                            self.u.get(i, l, k, j),
                            self.u.get(j, k, l, i),
                        ] {
                            worst = worst.max((v - w).abs());
                        }
                    }
                }
            }
        }
        worst
    }

    pub fn is_finite(&self) -> bool {
        self.e_nuc.is_finite()
            && self.h.iter().all(|v| v.is_finite())
            && self.u.as_slice().iter().all(|v| v.is_finite())
    }

    /// Re-expresses the integrals in orbitals `phi'_p = sum_q phi_q c[q][p]`.
    /// `c` must be orthogonal.
    pub fn rotated(&self, c: &DMatrix<f64>, orbitals: OrbitalBasis) -> Result<Self> {
        let n = self.n_spatial;
        if c.nrows() != n || c.ncols() != n {
            return Err(Error::Dimension(format!("rotation is {}x{}, expected {n}x{n}", c.nrows(), c.ncols())));
        }
        let mut h = c.transpose() * &self.h * c;
        symmetrize(&mut h);
        let u = transform_4index(&self.u, c);
        Ok(IntegralSet { n_spatial: n, h, u, e_nuc: self.e_nuc, orbitals })
    }

    /// Integrals in the eigenbasis of `h`. Eigenvector signs are fixed so the
    /// largest-magnitude component (first on ties) is positive.
    pub fn in_core_hamiltonian_orbitals(&self) -> Result<Self> {
        let eig = SymmetricEigen::new(self.h.clone());
        let n = self.n_spatial;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let mut c = DMatrix::zeros(n, n);
        for (col, &src) in order.iter().enumerate() {
            let v = eig.eigenvectors.column(src);
            let mut pivot = 0;
            for r in 0..n {
                if v[r].abs() > v[pivot].abs() + 1e-12 {
                    pivot = r;
                }
            }
            let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
            for r in 0..n {
                c[(r, col)] = sign * v[r];
            }
        }
        self.rotated(&c, OrbitalBasis::CoreHamiltonian)
    }
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// `u'[p][q][r][s] = sum c[a][p] c[b][q] c[c][r] c[d][s] u[a][b][c][d]`, one index at a time.
fn transform_4index(u: &Tensor4, c: &DMatrix<f64>) -> Tensor4 {
    let n = u.dim();
    let mut cur = u.data.clone();
    for axis in 0..4 {
        let mut next = vec![0.0; cur.len()];
        let stride = n.pow(3 - axis as u32);
        for (idx, slot) in next.iter_mut().enumerate() {
            let p = (idx / stride) % n;
            let base = idx - p * stride;
            let mut acc = 0.0;
            for a in 0..n {
                acc += c[(a, p)] * cur[base + a * stride];
            }
            *slot = acc;
        }
        cur = next;
    }
    let mut out = Tensor4 { n, data: cur };
    symmetrize_physicist(&mut out);
    out
}

/// Averages each 8-orbit so the symmetry holds to the last bit.
fn symmetrize_physicist(u: &mut Tensor4) {
    let n = u.dim();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let orbit = [
                        (i, j, k, l),
                        (j, i, l, k),
                        (k, l, i, j),
                        (l, k, j, i),
                        (k, j, i, l),
                        (l, i, j, k),
                        (i, l, k, j),
                        (j, k, l, i),
                    ];
                    let mut keys = orbit;
                    keys.sort();
                    if keys[0] != (i, j, k, l) {
                        continue;
                    }
                    let mean = orbit.iter().map(|&(a, b, c, d)| u.get(a, b, c, d)).sum::<f64>() / 8.0;
                    u.set_physicist_symmetric(i, j, k, l, mean);
                }
            }
        }
    }
}

/// Integrals over the symmetrically orthogonalized basis functions.
pub fn compute_integrals(geometry: &Geometry, basis: &[ContractedSOrbital]) -> Result<IntegralSet> {
    let n = basis.len();
    if n != geometry.n_atoms() {
        return Err(Error::Dimension(format!("{} basis functions for {} atoms", n, geometry.n_atoms())));
    }
    if geometry.charges().iter().any(|&z| z != 1) {
        return Err(Error::Geometry("only hydrogen nuclei (Z = 1) are supported".into()));
    }
    // Re-validate in case the geometry was built elsewhere.
    let geometry = Geometry::new(geometry.positions().to_vec(), geometry.charges().to_vec())?;

    let mut s = DMatrix::zeros(n, n);
    let mut hcore = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in 0..=a {
            let sab = overlap(&basis[a], &basis[b]);
            let mut hab = kinetic(&basis[a], &basis[b]);
            for (c, &z) in geometry.positions().iter().zip(geometry.charges()) {
                hab += nuclear_attraction(&basis[a], &basis[b], *c, f64::from(z));
            }
            s[(a, b)] = sab;
            s[(b, a)] = sab;
            hcore[(a, b)] = hab;
            hcore[(b, a)] = hab;
        }
    }

    // chemist (ab|cd) = physicist <ac|bd>
    let mut u_ao = Tensor4::zeros(n);
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    u_ao.set(a, b, c, d, electron_repulsion(&basis[a], &basis[c], &basis[b], &basis[d]));
                }
            }
        }
    }

    let eig = SymmetricEigen::new(s);
    if eig.eigenvalues.iter().any(|&w| w <= 1e-12) {
        return Err(Error::Geometry("basis is numerically linearly dependent".into()));
    }
    let inv_sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|w| 1.0 / w.sqrt()));
    let mut x = &eig.eigenvectors * inv_sqrt * eig.eigenvectors.transpose();
    symmetrize(&mut x);

    let ao = IntegralSet {
        n_spatial: n,
        h: hcore,
        u: u_ao,
        e_nuc: geometry.nuclear_repulsion(),
        orbitals: OrbitalBasis::Lowdin,
    };
    ao.rotated(&x, OrbitalBasis::Lowdin)
}

/// STO-3G integrals for a linear hydrogen chain.
pub fn hydrogen_chain_integrals(distances: &[f64]) -> Result<IntegralSet> {
    let geometry = Geometry::hydrogen_chain(distances)?;
    let basis: Vec<_> = geometry.positions().iter().map(|&c| hydrogen_sto3g_orbital(c)).collect();
    compute_integrals(&geometry, &basis)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sto3g(geometry: &Geometry) -> Vec<ContractedSOrbital> {
        geometry.positions().iter().map(|&c| hydrogen_sto3g_orbital(c)).collect()
    }

    #[test]
    fn single_atom_has_no_repulsion() {
        let g = Geometry::new(vec![[0.0, 0.0, 0.0]], vec![1]).unwrap();
        let ints = compute_integrals(&g, &sto3g(&g)).unwrap();
        assert_eq!(ints.e_nuc, 0.0);
        // STO-3G hydrogen atom energy
        assert!((ints.h[(0, 0)] + 0.466581850).abs() < 1e-6);
    }

    #[test]
    fn proton_pair_repulsion_is_inverse_distance() {
        for r in [0.7, 1.4, 3.3] {
            let g = Geometry::hydrogen_chain(&[r]).unwrap();
            assert_eq!(g.nuclear_repulsion(), 1.0 / r);
        }
    }

    #[test]
    fn mirror_symmetric_chain_has_reversal_symmetry() {
        let ints = hydrogen_chain_integrals(&[1.7, 1.7]).unwrap();
        let n = ints.n_spatial;
        for i in 0..n {
            for j in 0..n {
                assert!((ints.h[(i, j)] - ints.h[(n - 1 - i, n - 1 - j)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn permutational_symmetry_is_exact() {
        let ints = hydrogen_chain_integrals(&[1.1, 2.3, 1.6]).unwrap();
        assert_eq!(ints.symmetry_defect(), 0.0);
        assert!(ints.is_finite());
        let core = ints.in_core_hamiltonian_orbitals().unwrap();
        assert_eq!(core.symmetry_defect(), 0.0);
    }

    #[test]
    fn translation_leaves_integrals_unchanged() {
        let g = Geometry::hydrogen_chain(&[1.2, 1.9]).unwrap();
        let t = g.translated([0.3, -1.7, 2.2]).unwrap();
        let a = compute_integrals(&g, &sto3g(&g)).unwrap();
        let b = compute_integrals(&t, &sto3g(&t)).unwrap();
        assert!((a.e_nuc - b.e_nuc).abs() < 1e-12);
        assert!((&a.h - &b.h).amax() < 1e-12);
        let du = a.u.as_slice().iter().zip(b.u.as_slice()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(du < 1e-12);
    }

    #[test]
    fn coincident_atoms_rejected() {
        assert!(Geometry::new(vec![[0.0; 3], [0.0, 0.0, 1e-9]], vec![1, 1]).is_err());
        assert!(Geometry::hydrogen_chain(&[0.0]).is_err());
    }

    #[test]
    fn basis_length_mismatch_rejected() {
        let g = Geometry::hydrogen_chain(&[1.4]).unwrap();
        let basis = vec![hydrogen_sto3g_orbital([0.0; 3])];
        assert!(matches!(compute_integrals(&g, &basis), Err(Error::Dimension(_))));
    }

    #[test]
    fn helium_rejected() {
        let g = Geometry::new(vec![[0.0; 3]], vec![2]).unwrap();
        assert!(compute_integrals(&g, &sto3g(&g)).is_err());
    }
}
