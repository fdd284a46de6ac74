use std::collections::HashMap;

use crate::{Error, Result};

/// Occupation bitmask. Bit `p` is spin orbital `p`; spin orbitals
/// `0..n_spatial` are alpha and `n_spatial..2*n_spatial` are beta, each block
/// in spatial-orbital order.
pub type Determinant = u64;

/// Largest supported spatial-orbital count (two spin blocks in 64 bits).
pub const MAX_SPATIAL: usize = 31;

/// Spin orbital index of spatial orbital `p` with spin `beta`.
#[inline]
pub fn spin_orbital(n_spatial: usize, p: usize, beta: bool) -> usize {
    if beta {
        p + n_spatial
    } else {
        p
    }
}

/// `(spatial index, is_beta)` of a spin orbital.
#[inline]
pub fn split_spin_orbital(n_spatial: usize, p: usize) -> (usize, bool) {
    if p >= n_spatial {
        (p - n_spatial, true)
    } else {
        (p, false)
    }
}

#[inline]
fn parity_below(det: Determinant, p: usize) -> f64 {
    if (det & ((1u64 << p) - 1)).count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// `a_p |det>` as (image, sign), or `None` if orbital `p` is empty.
#[inline]
pub fn annihilate(det: Determinant, p: usize) -> Option<(Determinant, f64)> {
    if det >> p & 1 == 0 {
        return None;
    }
    Some((det & !(1u64 << p), parity_below(det, p)))
}

/// `a+_p |det>` as (image, sign), or `None` if orbital `p` is occupied.
#[inline]
pub fn create(det: Determinant, p: usize) -> Option<(Determinant, f64)> {
    if det >> p & 1 == 1 {
        return None;
    }
    Some((det | (1u64 << p), parity_below(det, p)))
}

/// `a+_p a_q |det>`.
#[inline]
pub fn apply_single_excitation(det: Determinant, p: usize, q: usize) -> Option<(Determinant, f64)> {
    let (d, s1) = annihilate(det, q)?;
    let (d, s2) = create(d, p)?;
    Some((d, s1 * s2))
}

/// `a+_i a+_j a_l a_k |det>`: annihilate `k`, then `l`, then create `j`, then `i`.
#[inline]
pub fn apply_pair_excitation(det: Determinant, i: usize, j: usize, k: usize, l: usize) -> Option<(Determinant, f64)> {
    let (d, s1) = annihilate(det, k)?;
    let (d, s2) = annihilate(d, l)?;
    let (d, s3) = create(d, j)?;
    let (d, s4) = create(d, i)?;
    Some((d, s1 * s2 * s3 * s4))
}

/// Canonical ordering of spin-orbital pairs `i < j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairIndex {
    n_so: usize,
    pairs: Vec<(usize, usize)>,
}

impl PairIndex {
    pub fn new(n_so: usize) -> Self {
        let mut pairs = Vec::with_capacity(n_so * n_so.saturating_sub(1) / 2);
        for i in 0..n_so {
            for j in i + 1..n_so {
                pairs.push((i, j));
            }
        }
        PairIndex { n_so, pairs }
    }

    pub fn n_spin_orbitals(&self) -> usize {
        self.n_so
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pair(&self, idx: usize) -> (usize, usize) {
        self.pairs[idx]
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// Index of `(i, j)` with `i < j`.
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j && j < self.n_so);
        i * (2 * self.n_so - i - 1) / 2 + (j - i - 1)
    }
}

/// One nonzero matrix element `<bra| a+_i a+_j a_l a_k |ket> = sign` with
/// `(i, j)` = pair `upper` and `(k, l)` = pair `lower`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairExcitation {
    pub ket: u32,
    pub bra: u32,
    pub upper: u32,
    pub lower: u32,
    pub sign: f64,
}

/// All determinants with fixed alpha and beta electron counts.
#[derive(Debug, Clone)]
pub struct SectorBasis {
    n_spatial: usize,
    n_alpha: usize,
    n_beta: usize,
    dets: Vec<Determinant>,
    lookup: HashMap<Determinant, usize>,
    pairs: PairIndex,
    excitations: Vec<PairExcitation>,
}

fn combinations(n: usize, k: usize) -> Vec<u64> {
    (0u64..1u64 << n).filter(|m| m.count_ones() as usize == k).collect()
}

impl SectorBasis {
    pub fn n_spatial(&self) -> usize {
        self.n_spatial
    }

    pub fn n_spin_orbitals(&self) -> usize {
        2 * self.n_spatial
    }

    pub fn n_alpha(&self) -> usize {
        self.n_alpha
    }

    pub fn n_beta(&self) -> usize {
        self.n_beta
    }

    pub fn n_electrons(&self) -> usize {
        self.n_alpha + self.n_beta
    }

    /// Twice the spin projection, `2 Sz = n_alpha - n_beta`.
    pub fn ms2(&self) -> i64 {
        self.n_alpha as i64 - self.n_beta as i64
    }

    pub fn dim(&self) -> usize {
        self.dets.len()
    }

    pub fn determinants(&self) -> &[Determinant] {
        &self.dets
    }

    pub fn index_of(&self, det: Determinant) -> Option<usize> {
        self.lookup.get(&det).copied()
    }

    pub fn pair_index(&self) -> &PairIndex {
        &self.pairs
    }

    /// Every nonzero `<bra|Gamma^{ij}_{kl}|ket>` over the sector, grouped by ket.
    pub fn pair_excitations(&self) -> &[PairExcitation] {
        &self.excitations
    }

    pub fn alpha_bits(&self, det: Determinant) -> u64 {
        det & ((1u64 << self.n_spatial) - 1)
    }

    pub fn beta_bits(&self, det: Determinant) -> u64 {
        det >> self.n_spatial
    }

    /// Occupied spin orbitals of `det`, ascending.
    pub fn occupied(&self, det: Determinant) -> impl Iterator<Item = usize> {
        let n_so = self.n_spin_orbitals();
        (0..n_so).filter(move |&p| det >> p & 1 == 1)
    }
}

/// Enumerates the `(n_alpha, n_beta)` sector over `n_spatial` orbitals.
pub fn enumerate_sector(n_spatial: usize, n_alpha: usize, n_beta: usize) -> Result<SectorBasis> {
    if n_spatial > MAX_SPATIAL {
        return Err(Error::Dimension(format!("at most {MAX_SPATIAL} spatial orbitals supported")));
    }
    if n_alpha > n_spatial || n_beta > n_spatial {
        return Err(Error::Dimension(format!(
            "cannot place ({n_alpha}, {n_beta}) electrons in {n_spatial} spatial orbitals"
        )));
    }
    let alphas = combinations(n_spatial, n_alpha);
    let betas = combinations(n_spatial, n_beta);
    let mut dets: Vec<Determinant> = Vec::with_capacity(alphas.len() * betas.len());
    for &b in &betas {
        for &a in &alphas {
            dets.push(a | (b << n_spatial));
        }
    }
    dets.sort_unstable();
    let lookup = dets.iter().enumerate().map(|(i, &d)| (d, i)).collect();
    let pairs = PairIndex::new(2 * n_spatial);
    let mut basis = SectorBasis { n_spatial, n_alpha, n_beta, dets, lookup, pairs, excitations: Vec::new() };
    basis.excitations = build_excitations(&basis);
    Ok(basis)
}

fn build_excitations(basis: &SectorBasis) -> Vec<PairExcitation> {
    let n_so = basis.n_spin_orbitals();
    let pairs = &basis.pairs;
    let mut out = Vec::new();
    for (ket, &det) in basis.dets.iter().enumerate() {
        let occ: Vec<usize> = basis.occupied(det).collect();
        for (a, &k) in occ.iter().enumerate() {
            for &l in &occ[a + 1..] {
                for i in 0..n_so {
                    for j in i + 1..n_so {
                        if let Some((img, sign)) = apply_pair_excitation(det, i, j, k, l) {
                            if let Some(bra) = basis.index_of(img) {
                                out.push(PairExcitation {
                                    ket: ket as u32,
                                    bra: bra as u32,
                                    upper: pairs.index(i, j) as u32,
                                    lower: pairs.index(k, l) as u32,
                                    sign,
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    out
}
