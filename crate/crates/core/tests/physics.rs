mod common;

use nalgebra::DVector;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rlcqe::cse::{residual_tensor, run_cqe, CqeConfig, GeneratorPool};
use rlcqe::fockspace::{
    build_hamiltonian, build_reduced_hamiltonian, compute_2rdm, enumerate_sector, exact_ground_state, spectrum, Flavor,
    StateVector,
};
use rlcqe::integrals::{hydrogen_chain_integrals, read_fcidump, IntegralSet};

use common::{chain_sector, fock_space_block_spectrum, fock_space_hamiltonian, off_block_magnitude};

fn random_state(dim: usize, rng: &mut ChaCha8Rng) -> StateVector {
    let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
    StateVector::from_unnormalized(DVector::from_vec(v)).unwrap()
}

fn ground_energy(ints: &IntegralSet, n_alpha: usize, n_beta: usize) -> f64 {
    let basis = enumerate_sector(ints.n_spatial, n_alpha, n_beta).unwrap();
    exact_ground_state(&build_hamiltonian(ints, &basis).unwrap()).unwrap().0
}

#[test]
fn ground_energies_match_external_full_ci() {
    for r in common::reference_energies() {
        let ints = hydrogen_chain_integrals(&r.distances).unwrap();
        let (a, b) = chain_sector(r.distances.len() + 1);
        let e = ground_energy(&ints, a, b);
        assert!((e - r.energy).abs() < 1e-6, "{} {:?}: {e} vs {}", r.molecule, r.distances, r.energy);
    }
}

#[test]
fn sector_spectra_match_fock_space_blocks() {
    let ints = hydrogen_chain_integrals(&[1.3, 1.9]).unwrap();
    for (a, b) in [(2, 1), (1, 1), (3, 0), (1, 0), (2, 2), (3, 3)] {
        let basis = enumerate_sector(3, a, b).unwrap();
        let ours: Vec<f64> =
            spectrum(&build_hamiltonian(&ints, &basis).unwrap()).unwrap().iter().map(|p| p.0).collect();
        let oracle = fock_space_block_spectrum(&ints, a, b);
        assert_eq!(ours.len(), oracle.len());
        for (x, y) in ours.iter().zip(&oracle) {
            assert!((x - y).abs() < 1e-10, "sector ({a},{b}): {x} vs {y}");
        }
    }
}

#[test]
fn fock_space_hamiltonian_conserves_spin_counts() {
    let ints = hydrogen_chain_integrals(&[1.4, 2.1, 1.7]).unwrap();
    let h = fock_space_hamiltonian(&ints);
    assert_eq!(off_block_magnitude(&h, 4), 0.0);
    assert!((&h - h.transpose()).amax() < 1e-12);
}

#[test]
fn orbital_rotation_leaves_energies_unchanged() {
    let lowdin = hydrogen_chain_integrals(&[1.5, 2.5]).unwrap();
    let core = lowdin.in_core_hamiltonian_orbitals().unwrap();
    assert!((ground_energy(&lowdin, 2, 1) - ground_energy(&core, 2, 1)).abs() < 1e-10);
}

#[test]
fn h2_fcidump_reproduces_generated_integrals() {
    let dump = read_fcidump(common::h2_fcidump_path()).unwrap();
    assert_eq!((dump.n_alpha(), dump.n_beta()), (1, 1));
    let from_file = ground_energy(&dump.integrals, 1, 1);
    let generated = ground_energy(&hydrogen_chain_integrals(&[1.4]).unwrap(), 1, 1);
    let reference =
        common::reference_energies().into_iter().find(|r| r.molecule == "h2" && r.distances == [1.4]).unwrap().energy;
    assert!((from_file - reference).abs() < 1e-9, "{from_file} vs {reference}");
    assert!((from_file - generated).abs() < 1e-6, "{from_file} vs {generated}");
}

#[test]
fn residual_vanishes_exactly_on_eigenvectors() {
    let ints = hydrogen_chain_integrals(&[1.5, 2.5]).unwrap().in_core_hamiltonian_orbitals().unwrap();
    let basis = enumerate_sector(3, 2, 1).unwrap();
    let h = build_hamiltonian(&ints, &basis).unwrap();
    for (e, v) in spectrum(&h).unwrap() {
        let r = residual_tensor(&v, &h, &basis).unwrap();
        assert!((r.energy() - e).abs() < 1e-12);
        assert!(r.frobenius_norm() < 1e-10, "eigenvalue {e}: {}", r.frobenius_norm());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let psi = random_state(basis.dim(), &mut rng);
        assert!(residual_tensor(&psi, &h, &basis).unwrap().frobenius_norm() > 1e-6);
    }
}

#[test]
fn filtered_solver_converges_for_h2() {
    let ints = hydrogen_chain_integrals(&[1.4]).unwrap().in_core_hamiltonian_orbitals().unwrap();
    let basis = enumerate_sector(2, 1, 1).unwrap();
    let h = build_hamiltonian(&ints, &basis).unwrap();
    let (e0, _) = exact_ground_state(&h).unwrap();
    let pool = GeneratorPool::canonical(&basis, Flavor::AntiHermitian).unwrap();
    let lowest = (0..basis.dim()).min_by(|&a, &b| h[(a, a)].total_cmp(&h[(b, b)])).unwrap();
    let start = StateVector::basis_state(basis.dim(), lowest);
    let cfg = CqeConfig { max_iterations: 10, residual_tol: 1e-8, ..CqeConfig::default() };
    let rec = run_cqe(&start, &h, &basis, &pool, &cfg).unwrap();
    assert!(rec.final_residual_norm() < 1e-6, "residual {}", rec.final_residual_norm());
    assert!((rec.final_energy() - e0).abs() < 1e-10);
}

fn h3() -> (IntegralSet, rlcqe::fockspace::SectorBasis, nalgebra::DMatrix<f64>) {
    let ints = hydrogen_chain_integrals(&[1.2, 2.2]).unwrap().in_core_hamiltonian_orbitals().unwrap();
    let basis = enumerate_sector(3, 2, 1).unwrap();
    let h = build_hamiltonian(&ints, &basis).unwrap();
    (ints, basis, h)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reduced_energy_matches_expectation(seed in any::<u64>()) {
        let (ints, basis, h) = h3();
        let k = build_reduced_hamiltonian(&ints, 3).unwrap();
        let psi = random_state(basis.dim(), &mut ChaCha8Rng::seed_from_u64(seed));
        let d = compute_2rdm(&psi, &basis);
        prop_assert!((k.energy(&d) - psi.expectation(&h)).abs() < 1e-10);
    }

    #[test]
    fn random_states_lie_above_the_ground_state(seed in any::<u64>()) {
        let (_, basis, h) = h3();
        let (e0, _) = exact_ground_state(&h).unwrap();
        let psi = random_state(basis.dim(), &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert!(psi.expectation(&h) >= e0 - 1e-12);
    }
}
