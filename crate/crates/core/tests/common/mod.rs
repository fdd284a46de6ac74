//! Oracles shared by the integration test targets.
#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};
use rlcqe::integrals::IntegralSet;

/// One line of `data/reference_fci.txt`.
pub struct ReferenceEnergy {
    pub molecule: String,
    pub distances: Vec<f64>,
    pub energy: f64,
}

pub fn reference_energies() -> Vec<ReferenceEnergy> {
    let text = include_str!("../data/reference_fci.txt");
    text.lines()
        .filter(|l| !l.trim_start().starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split_whitespace().collect();
            ReferenceEnergy {
                molecule: f[0].to_string(),
                distances: f[1].split(';').map(|d| d.parse().unwrap()).collect(),
                energy: f[2].parse().unwrap(),
            }
        })
        .collect()
}

pub fn h2_fcidump_path() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/h2_sto3g_1.4.fcidump")
}

// Interleaved Jordan-Wigner modes: spatial p with spin s sits at 2p + s.
fn mode(p: usize, s: usize) -> usize {
    2 * p + s
}

fn lower(state: u32, m: usize) -> Option<(u32, f64)> {
    if state >> m & 1 == 0 {
        return None;
    }
    let sign = if (state & ((1 << m) - 1)).count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
    Some((state & !(1 << m), sign))
}

fn raise(state: u32, m: usize) -> Option<(u32, f64)> {
    if state >> m & 1 == 1 {
        return None;
    }
    let sign = if (state & ((1 << m) - 1)).count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
    Some((state | (1 << m), sign))
}

/// Applies `ops` right to left; `(mode, true)` creates, `(mode, false)` annihilates.
fn apply(state: u32, ops: &[(usize, bool)]) -> Option<(u32, f64)> {
    let mut s = state;
    let mut sign = 1.0;
    for &(m, create) in ops.iter().rev() {
        let (t, g) = if create { raise(s, m)? } else { lower(s, m)? };
        s = t;
        sign *= g;
    }
    Some((s, sign))
}

/// Dense second-quantized Hamiltonian over all `4^n` occupation states.
pub fn fock_space_hamiltonian(ints: &IntegralSet) -> DMatrix<f64> {
    let n = ints.n_spatial;
    let dim = 1usize << (2 * n);
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for col in 0..dim as u32 {
        h[(col as usize, col as usize)] += ints.e_nuc;
        for p in 0..n {
            for q in 0..n {
                let hpq = ints.h[(p, q)];
                if hpq == 0.0 {
                    continue;
                }
                for s in 0..2 {
                    if let Some((row, sign)) = apply(col, &[(mode(p, s), true), (mode(q, s), false)]) {
                        h[(row as usize, col as usize)] += sign * hpq;
                    }
                }
            }
        }
        for p in 0..n {
            for q in 0..n {
                for r in 0..n {
                    for t in 0..n {
                        let v = 0.5 * ints.u.get(p, q, r, t);
                        if v == 0.0 {
                            continue;
                        }
                        for s1 in 0..2 {
                            for s2 in 0..2 {
                                let ops = [
                                    (mode(p, s1), true),
                                    (mode(q, s2), true),
                                    (mode(t, s2), false),
                                    (mode(r, s1), false),
                                ];
                                if let Some((row, sign)) = apply(col, &ops) {
                                    h[(row as usize, col as usize)] += sign * v;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    h
}

fn spin_counts(state: u32, n: usize) -> (usize, usize) {
    let a = (0..n).filter(|&p| state >> mode(p, 0) & 1 == 1).count();
    let b = (0..n).filter(|&p| state >> mode(p, 1) & 1 == 1).count();
    (a, b)
}

/// Largest matrix element coupling states of different `(N_alpha, N_beta)`.
pub fn off_block_magnitude(h: &DMatrix<f64>, n: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for r in 0..h.nrows() {
        for c in 0..h.ncols() {
            if spin_counts(r as u32, n) != spin_counts(c as u32, n) {
                worst = worst.max(h[(r, c)].abs());
            }
        }
    }
    worst
}

/// Sorted eigenvalues of the `(n_alpha, n_beta)` block of the full Fock-space Hamiltonian.
pub fn fock_space_block_spectrum(ints: &IntegralSet, n_alpha: usize, n_beta: usize) -> Vec<f64> {
    let full = fock_space_hamiltonian(ints);
    let n = ints.n_spatial;
    let states: Vec<usize> = (0..full.nrows()).filter(|&s| spin_counts(s as u32, n) == (n_alpha, n_beta)).collect();
    let block = DMatrix::from_fn(states.len(), states.len(), |i, j| full[(states[i], states[j])]);
    let mut e: Vec<f64> = SymmetricEigen::new(block).eigenvalues.iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

/// Electron counts used for a neutral chain of `atoms` hydrogens.
pub fn chain_sector(atoms: usize) -> (usize, usize) {
    (atoms.div_ceil(2), atoms / 2)
}
