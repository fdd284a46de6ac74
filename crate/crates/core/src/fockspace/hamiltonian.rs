use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::sector::{apply_pair_excitation, apply_single_excitation, split_spin_orbital, SectorBasis};
use super::StateVector;
use crate::integrals::IntegralSet;
use crate::{Error, Result};

/// Spin-orbital `<pq|rs>`: spatial integral times spin deltas.
#[inline]
pub(crate) fn spin_orbital_u(ints: &IntegralSet, p: usize, q: usize, r: usize, s: usize) -> f64 {
    let n = ints.n_spatial;
    let (p, sp) = split_spin_orbital(n, p);
    let (q, sq) = split_spin_orbital(n, q);
    let (r, sr) = split_spin_orbital(n, r);
    let (s, ss) = split_spin_orbital(n, s);
    if sp != sr || sq != ss {
        return 0.0;
    }
    ints.u.get(p, q, r, s)
}

#[inline]
pub(crate) fn spin_orbital_h(ints: &IntegralSet, p: usize, q: usize) -> f64 {
    let n = ints.n_spatial;
    let (p, sp) = split_spin_orbital(n, p);
    let (q, sq) = split_spin_orbital(n, q);
    if sp != sq {
        0.0
    } else {
        ints.h[(p, q)]
    }
}

/// Sector matrix of `e_nuc + sum h_pq a+_p a_q + sum_{p<q,r<s} <pq||rs> a+_p a+_q a_s a_r`.
pub fn build_hamiltonian(ints: &IntegralSet, basis: &SectorBasis) -> Result<DMatrix<f64>> {
    if ints.n_spatial != basis.n_spatial() {
        return Err(Error::Dimension(format!(
            "integrals over {} orbitals, sector over {}",
            ints.n_spatial,
            basis.n_spatial()
        )));
    }
    let n_so = basis.n_spin_orbitals();
    let dim = basis.dim();
    let mut h = DMatrix::from_diagonal_element(dim, dim, ints.e_nuc);
    for (col, &det) in basis.determinants().iter().enumerate() {
        let occ: Vec<usize> = basis.occupied(det).collect();
        for &q in &occ {
            for p in 0..n_so {
                let hpq = spin_orbital_h(ints, p, q);
                if hpq == 0.0 {
                    continue;
                }
                if let Some((img, s)) = apply_single_excitation(det, p, q) {
                    if let Some(row) = basis.index_of(img) {
                        h[(row, col)] += hpq * s;
                    }
                }
            }
        }
        for (a, &r) in occ.iter().enumerate() {
            for &s in &occ[a + 1..] {
                for p in 0..n_so {
                    for q in p + 1..n_so {
                        let v = spin_orbital_u(ints, p, q, r, s) - spin_orbital_u(ints, p, q, s, r);
                        if v == 0.0 {
                            continue;
                        }
                        if let Some((img, sign)) = apply_pair_excitation(det, p, q, r, s) {
                            if let Some(row) = basis.index_of(img) {
                                h[(row, col)] += v * sign;
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(h)
}

fn check_hermitian(h: &DMatrix<f64>) -> Result<()> {
    if !h.is_square() {
        return Err(Error::Dimension(format!("{}x{} matrix is not square", h.nrows(), h.ncols())));
    }
    let asym = (h - h.transpose()).amax();
    if asym > 1e-12 * h.amax().max(1.0) {
        return Err(Error::NotHermitian(asym));
    }
    Ok(())
}

/// Gives the eigenvector a deterministic sign: largest-magnitude entry positive.
fn fix_sign(mut v: DVector<f64>) -> DVector<f64> {
    let mut pivot = 0;
    for r in 0..v.len() {
        if v[r].abs() > v[pivot].abs() + 1e-12 {
            pivot = r;
        }
    }
    if v[pivot] < 0.0 {
        v.neg_mut();
    }
    v
}

/// Full spectrum in ascending order with normalized eigenvectors.
pub fn spectrum(h: &DMatrix<f64>) -> Result<Vec<(f64, StateVector)>> {
    check_hermitian(h)?;
    let eig = SymmetricEigen::new(h.clone());
    let mut out: Vec<(f64, StateVector)> = (0..h.nrows())
        .map(|c| {
            let v = fix_sign(eig.eigenvectors.column(c).into_owned());
            (eig.eigenvalues[c], StateVector::from_unnormalized(v).expect("eigenvectors are nonzero"))
        })
        .collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(out)
}

/// Lowest eigenpair of a Hermitian matrix.
pub fn exact_ground_state(h: &DMatrix<f64>) -> Result<(f64, StateVector)> {
    let mut spec = spectrum(h)?;
    if spec.is_empty() {
        return Err(Error::Dimension("empty matrix".into()));
    }
    Ok(spec.swap_remove(0))
}

/// Sector matrix of `S^2 = S- S+ + Sz (Sz + 1)`.
pub fn build_s_squared(basis: &SectorBasis) -> DMatrix<f64> {
    let n = basis.n_spatial();
    let dim = basis.dim();
    let sz = 0.5 * basis.ms2() as f64;
    let mut s2 = DMatrix::from_diagonal_element(dim, dim, sz * (sz + 1.0));
    for (col, &det) in basis.determinants().iter().enumerate() {
        for p in 0..n {
            // S+ term a+_{p alpha} a_{p beta}
            let Some((mid, s1)) = apply_single_excitation(det, p, p + n) else { continue };
            for q in 0..n {
                // S- term a+_{q beta} a_{q alpha}
                if let Some((img, s2v)) = apply_single_excitation(mid, q + n, q) {
                    if let Some(row) = basis.index_of(img) {
                        s2[(row, col)] += s1 * s2v;
                    }
                }
            }
        }
    }
    s2
}

/// Projects onto the lowest-spin multiplet compatible with the sector, `S = |Sz|`.
pub fn project_lowest_spin(state: &StateVector, basis: &SectorBasis) -> Result<StateVector> {
    let s2 = build_s_squared(basis);
    let s = 0.5 * basis.ms2().unsigned_abs() as f64;
    let target = s * (s + 1.0);
    let eig = SymmetricEigen::new(s2);
    let psi = state.amplitudes();
    let mut out = DVector::zeros(psi.len());
    for c in 0..psi.len() {
        if (eig.eigenvalues[c] - target).abs() < 1e-8 {
            let v = eig.eigenvectors.column(c);
            out += v * v.dot(psi);
        }
    }
    StateVector::from_unnormalized(out)
}
