use rlcqe::cse::{filtered_cqe_step, CqeConfig, GeneratorPool};
use rlcqe::fockspace::{enumerate_sector, Flavor, Generator, StateVector};
use rlcqe::integrals::OrbitalBasis;
use rlcqe::rlenv::{
    build_action_pool, read_episode_log, write_episode_log, Env, EnvConfig, InitMode, Problem, RewardShift, StepLog,
};
use rlcqe::Error;

fn h3_env(init: InitMode, seed: u64) -> Env {
    let basis = enumerate_sector(3, 2, 1).unwrap();
    let p = Problem::hydrogen_chain(&[1.5, 2.5], &basis, OrbitalBasis::CoreHamiltonian).unwrap();
    let cfg = EnvConfig { init, seed, ..Default::default() };
    Env::new(basis, vec![p], cfg).unwrap()
}

fn brute_force_pool_size(n_spatial: usize) -> usize {
    let n_so = 2 * n_spatial;
    let mut seen = std::collections::BTreeSet::new();
    for i in 0..n_so {
        for j in 0..n_so {
            for k in 0..n_so {
                for l in 0..n_so {
                    if Generator::new(n_spatial, [i, j, k, l], Flavor::AntiHermitian).is_ok() {
                        seen.insert(std::cmp::min((i, j, k, l), (k, l, i, j)));
                    }
                }
            }
        }
    }
    seen.len()
}

#[test]
fn pool_size_matches_exhaustive_count() {
    let h3 = enumerate_sector(3, 2, 1).unwrap();
    assert_eq!(build_action_pool(&h3, Flavor::AntiHermitian, false).unwrap().len(), brute_force_pool_size(3));
    let one = enumerate_sector(1, 1, 1).unwrap();
    assert_eq!(build_action_pool(&one, Flavor::AntiHermitian, false).unwrap().len(), 1);
    assert_eq!(brute_force_pool_size(1), 1);
}

#[test]
fn pool_is_deterministic_and_duplicate_free() {
    let b = enumerate_sector(4, 2, 2).unwrap();
    let a = build_action_pool(&b, Flavor::AntiHermitian, false).unwrap();
    let c = build_action_pool(&enumerate_sector(4, 2, 2).unwrap(), Flavor::AntiHermitian, false).unwrap();
    assert_eq!(a.generators(), c.generators());
    let set: std::collections::HashSet<_> = a.generators().iter().collect();
    assert_eq!(set.len(), a.len());
}

#[test]
fn same_seed_same_observation() {
    let mut a = h3_env(InitMode::RandomState, 42);
    let mut b = h3_env(InitMode::RandomState, 42);
    for _ in 0..3 {
        assert_eq!(a.reset().unwrap(), b.reset().unwrap());
    }
    let mut c = h3_env(InitMode::RandomState, 43);
    assert_ne!(a.reset().unwrap(), c.reset().unwrap());
}

#[test]
fn ground_state_is_absorbing() {
    let mut env = h3_env(InitMode::ExactGroundState, 0);
    let obs = env.reset().unwrap();
    assert!(obs.residual_features().iter().all(|x| x.abs() < 1e-10));
    let e0 = env.problems()[0].e_exact;
    let psi0 = env.episode().unwrap().state.clone();
    for a in [0, 7, 30] {
        let out = env.step(a).unwrap();
        assert_eq!(out.log.theta, 0.0);
        assert!((out.reward + e0).abs() < 1e-9, "{}", out.reward + e0);
        assert_eq!(env.episode().unwrap().state, psi0);
    }
}

#[test]
fn random_resets_lie_above_ground_energy() {
    let mut env = h3_env(InitMode::RandomState, 7);
    let e0 = env.problems()[0].e_exact;
    let mut mean = 0.0;
    for _ in 0..10_000 {
        env.reset().unwrap();
        mean += env.episode().unwrap().energy;
    }
    mean /= 10_000.0;
    assert!(mean > e0 + 0.1, "{mean} vs {e0}");
}

#[test]
fn repeated_action_pays_penalty() {
    let mut env = h3_env(InitMode::LowestDeterminant, 0);
    let obs = env.reset().unwrap();
    let a = obs.residual_features().iter().enumerate().max_by(|x, y| x.1.abs().total_cmp(&y.1.abs())).unwrap().0;
    let first = env.step(a).unwrap();
    let second = env.step(a).unwrap();
    let cfg = env.config();
    let unpenalized = -(second.log.energy + cfg.lambda * second.log.residual_norm);
    assert!((second.reward - (unpenalized - cfg.reuse_penalty)).abs() < 1e-12);
    assert!((first.reward - -(first.log.energy + cfg.lambda * first.log.residual_norm)).abs() < 1e-12);
}

#[test]
fn step_after_done_and_bad_action_rejected() {
    let mut env = h3_env(InitMode::RandomState, 1);
    assert!(matches!(env.step(0), Err(Error::EpisodeDone)));
    env.reset().unwrap();
    assert!(matches!(env.step(1000), Err(Error::ActionOutOfRange { .. })));
    for t in 0..5 {
        assert_eq!(env.step(t).unwrap().done, t == 4);
    }
    assert!(matches!(env.step(0), Err(Error::EpisodeDone)));
}

#[test]
fn empty_problem_set_rejected() {
    let basis = enumerate_sector(3, 2, 1).unwrap();
    assert!(Env::new(basis, vec![], EnvConfig::default()).is_err());
}

#[test]
fn rewards_bounded_by_ground_energy() {
    let mut env = h3_env(InitMode::RandomState, 3);
    let e0 = env.problems()[0].e_exact;
    let n = env.n_actions();
    for ep in 0..20 {
        env.reset().unwrap();
        for t in 0..5 {
            let out = env.step((ep * 7 + t * 13) % n).unwrap();
            assert!(out.reward <= -e0 + 1e-12);
            let st = env.episode().unwrap();
            assert!((st.state.expectation(&env.problems()[0].hamiltonian) - st.energy).abs() < 1e-10);
        }
    }
}

#[test]
fn logged_episodes_replay_bitwise() {
    let run = |actions: Option<&[usize]>| {
        let mut env = h3_env(InitMode::RandomState, 99);
        let mut observations = vec![env.reset().unwrap()];
        let mut logs: Vec<StepLog> = Vec::new();
        for t in 0..5 {
            let a = match actions {
                Some(a) => a[t],
                None => (t * 11 + 3) % env.n_actions(),
            };
            let out = env.step(a).unwrap();
            observations.push(out.observation);
            logs.push(out.log);
        }
        (observations, logs)
    };
    let (obs, logs) = run(None);
    let mut buf = Vec::new();
    write_episode_log(&logs, &mut buf).unwrap();
    let parsed = read_episode_log(std::str::from_utf8(&buf).unwrap()).unwrap();
    assert_eq!(parsed, logs);
    let actions: Vec<usize> = parsed.iter().map(|l| l.action).collect();
    let (obs2, logs2) = run(Some(&actions));
    assert_eq!(obs, obs2);
    for (a, b) in logs.iter().zip(&logs2) {
        assert_eq!(a.theta.to_bits(), b.theta.to_bits());
        assert_eq!(a.reward.to_bits(), b.reward.to_bits());
    }
}

#[test]
fn greedy_rollout_reproduces_single_generator_cqe() {
    let mut env = h3_env(InitMode::FixedRandomState, 5);
    let obs = env.reset().unwrap();
    let start = env.episode().unwrap().state.clone();
    let problem = env.problems()[0].clone();
    let basis = env.basis().clone();
    let pool = GeneratorPool::canonical(&basis, Flavor::AntiHermitian).unwrap();
    let cqe = CqeConfig {
        k: 1,
        objective: env.config().objective(),
        line_search: env.config().line_search,
        ..Default::default()
    };
    let mut psi: StateVector = start;
    let mut features = obs.residual_features().to_vec();
    for _ in 0..5 {
        let a = features
            .iter()
            .enumerate()
            .fold((0, -1.0), |best, (i, x)| if x.abs() > best.1 { (i, x.abs()) } else { best })
            .0;
        let out = env.step(a).unwrap();
        let step = filtered_cqe_step(&psi, &problem.hamiltonian, &basis, &pool, &cqe).unwrap();
        assert_eq!(step.applied.len(), 1);
        assert_eq!(step.applied[0].generator, *env.pool().generator(a));
        assert!((step.applied[0].theta - out.log.theta).abs() < 1e-12);
        assert!(step.state.distance(&env.episode().unwrap().state) < 1e-12);
        psi = step.state;
        features = out.observation.residual_features().to_vec();
    }
}

#[test]
fn fixed_random_init_repeats_across_episodes() {
    let mut env = h3_env(InitMode::FixedRandomState, 11);
    let a = env.reset().unwrap();
    env.step(0).unwrap();
    assert_eq!(env.reset().unwrap(), a);
}

#[test]
fn observation_dimension_is_constant() {
    let basis = enumerate_sector(3, 2, 1).unwrap();
    let problems = [[1.0, 1.0], [1.5, 3.0], [2.0, 4.5]]
        .iter()
        .map(|d| Problem::hydrogen_chain(d, &basis, OrbitalBasis::CoreHamiltonian).unwrap())
        .collect();
    let cfg = EnvConfig { include_hermitian: true, ..Default::default() };
    let mut env = Env::new(basis, problems, cfg).unwrap();
    for _ in 0..10 {
        let o = env.reset().unwrap();
        assert_eq!(o.len(), env.observation_dim());
        assert_eq!(o.len(), 2 * 57 + 1);
        assert!(o.features.iter().all(|x| x.is_finite()));
    }
}

#[test]
fn progress_and_usage_features_track_the_episode() {
    let basis = enumerate_sector(3, 2, 1).unwrap();
    let p = Problem::hydrogen_chain(&[1.5, 2.5], &basis, OrbitalBasis::CoreHamiltonian).unwrap();
    let cfg =
        EnvConfig { t_max: 4, include_progress: true, include_usage: true, prune_inert: true, ..Default::default() };
    let mut env = Env::new(basis, vec![p], cfg).unwrap();
    let n = env.n_actions();
    assert!(n < 57);
    assert_eq!(env.observation_dim(), 2 * n + 2);
    let obs = env.reset().unwrap();
    assert_eq!(obs.len(), env.observation_dim());
    assert_eq!(obs.residual_features().len(), n);
    assert_eq!(obs.features[n + 1], 1.0);
    assert!(obs.features[n + 2..].iter().all(|&u| u == 0.0));
    let out = env.step(3).unwrap();
    assert_eq!(out.observation.features[n + 1], 0.75);
    let usage = &out.observation.features[n + 2..];
    assert_eq!(usage.iter().sum::<f64>(), 1.0);
    assert_eq!(usage[3], 1.0);
    let out = env.step(3).unwrap();
    assert_eq!(out.observation.features[n + 1], 0.5);
    assert_eq!(out.observation.features[n + 2..].iter().sum::<f64>(), 1.0);
    env.step(0).unwrap();
    let out = env.step(1).unwrap();
    assert!(out.done);
    assert_eq!(out.observation.features[n + 1], 0.0);
    assert_eq!(out.observation.features[n + 2..].iter().sum::<f64>(), 3.0);
}

#[test]
fn shifted_training_reward_keeps_logged_reward() {
    let basis = enumerate_sector(3, 2, 1).unwrap();
    let p = Problem::hydrogen_chain(&[1.5, 2.5], &basis, OrbitalBasis::CoreHamiltonian).unwrap();
    let e_exact = p.e_exact;
    let make = |shift, scale| {
        let cfg = EnvConfig {
            init: InitMode::LowestDeterminant,
            reward_shift: shift,
            reward_scale: scale,
            ..Default::default()
        };
        Env::new(basis.clone(), vec![p.clone()], cfg).unwrap()
    };
    let mut plain = make(RewardShift::None, 1.0);
    let mut shifted = make(RewardShift::ExactEnergy, 100.0);
    plain.reset().unwrap();
    shifted.reset().unwrap();
    for a in [3, 7, 3] {
        let x = plain.step(a).unwrap();
        let y = shifted.step(a).unwrap();
        assert_eq!(x.reward, y.reward);
        assert_eq!(x.log, y.log);
        assert_eq!(x.training_reward, x.reward);
        assert!((y.training_reward - 100.0 * (y.reward + e_exact)).abs() < 1e-12);
    }
    let bad = EnvConfig { reward_scale: 0.0, ..Default::default() };
    assert!(matches!(bad.validate(), Err(Error::Config { .. })));
}
