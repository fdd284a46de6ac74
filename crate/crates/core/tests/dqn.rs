use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rlcqe::dqn::{
    argmax, double_dqn_targets, layer_norm_rows, select_action, smooth_l1, sync_target, train_step, AdamW, Checkpoint,
    ForwardCache, NetworkConfig, QNetwork, ReplayBuffer, Trainer, TrainerConfig, Transition, Workspace,
};

fn tiny(width: usize) -> NetworkConfig {
    NetworkConfig { trunk: [width, width], stream: width, layer_norm_eps: 1e-5 }
}

fn randomize(net: &mut QNetwork, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for p in net.params_mut() {
        for v in p.data.iter_mut() {
            *v += rng.random_range(-0.5..0.5);
        }
    }
}

fn check_orthogonal(w: &[f64], rows: usize, cols: usize) {
    let m = nalgebra::DMatrix::from_row_slice(rows, cols, w);
    let g = if rows <= cols { &m * m.transpose() } else { m.transpose() * &m };
    let n = g.nrows();
    assert!((g - nalgebra::DMatrix::identity(n, n)).amax() < 1e-10);
}

#[test]
fn weights_are_orthogonal_and_seeded() {
    let net = QNetwork::new(7, 5, NetworkConfig { trunk: [16, 16], stream: 4, layer_norm_eps: 1e-5 }, 3).unwrap();
    for p in net.params() {
        if p.shape.len() == 2 {
            check_orthogonal(&p.data, p.shape[0], p.shape[1]);
        } else if p.name.ends_with("gain") {
            assert!(p.data.iter().all(|&v| v == 1.0));
        } else {
            assert!(p.data.iter().all(|&v| v == 0.0));
        }
    }
    let again = QNetwork::new(7, 5, NetworkConfig { trunk: [16, 16], stream: 4, layer_norm_eps: 1e-5 }, 3).unwrap();
    assert_eq!(net, again);
    let other = QNetwork::new(7, 5, NetworkConfig { trunk: [16, 16], stream: 4, layer_norm_eps: 1e-5 }, 4).unwrap();
    assert_ne!(net, other);
}

#[test]
fn zero_input_gives_equal_q_values() {
    let net = QNetwork::new(2, 2, tiny(2), 0).unwrap();
    let q = net.forward(&[0.0, 0.0]).unwrap();
    assert_eq!(q[0], q[1]);
    let net = QNetwork::new(6, 9, tiny(8), 1).unwrap();
    let q = net.forward(&[0.0; 6]).unwrap();
    assert!(q.iter().all(|&v| v == q[0]));
}

/// Scalar re-implementation of the forward pass.
fn reference_forward(net: &QNetwork, x: &[f64]) -> Vec<f64> {
    let get = |name: &str| net.params().iter().find(|p| p.name == name).unwrap();
    let affine = |name: &str, x: &[f64]| -> Vec<f64> {
        let w = get(&format!("{name}.weight"));
        let b = get(&format!("{name}.bias"));
        (0..w.shape[0])
            .map(|o| b.data[o] + (0..w.shape[1]).map(|i| w.data[o * w.shape[1] + i] * x[i]).sum::<f64>())
            .collect()
    };
    let norm_relu = |name: &str, z: Vec<f64>| -> Vec<f64> {
        let n = z.len() as f64;
        let mu = z.iter().sum::<f64>() / n;
        let var = z.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / n;
        let g = get(&format!("{name}.norm.gain"));
        let o = get(&format!("{name}.norm.offset"));
        z.iter().enumerate().map(|(i, v)| (g.data[i] * (v - mu) / (var + 1e-5).sqrt() + o.data[i]).max(0.0)).collect()
    };
    let relu = |v: Vec<f64>| v.into_iter().map(|x| x.max(0.0)).collect::<Vec<_>>();
    let h1 = norm_relu("trunk.0", affine("trunk.0", x));
    let h2 = norm_relu("trunk.1", affine("trunk.1", &h1));
    let v = affine("value.1", &relu(affine("value.0", &h2)))[0];
    let a = affine("advantage.1", &relu(affine("advantage.0", &h2)));
    let mean = a.iter().sum::<f64>() / a.len() as f64;
    a.iter().map(|ai| v + ai - mean).collect()
}

#[test]
fn hand_set_two_unit_net() {
    let mut net = QNetwork::new(2, 2, tiny(2), 0).unwrap();
    let set = |net: &mut QNetwork, name: &str, v: &[f64]| net.param_mut(name).unwrap().data.copy_from_slice(v);
    set(&mut net, "trunk.0.weight", &[1.0, 0.0, 0.0, 1.0]);
    set(&mut net, "trunk.1.weight", &[1.0, 0.0, 0.0, 1.0]);
    set(&mut net, "value.0.weight", &[1.0, 1.0, 0.0, 0.0]);
    set(&mut net, "value.1.weight", &[2.0, 0.0]);
    set(&mut net, "value.1.bias", &[0.5]);
    set(&mut net, "advantage.0.weight", &[1.0, 0.0, 0.0, 1.0]);
    set(&mut net, "advantage.1.weight", &[1.0, 0.0, 0.0, 3.0]);
    // x = (1, -1): trunk.0 z = (1,-1), mean 0, var 1, xhat = (1,-1)/sqrt(1+1e-5),
    // relu -> (s, 0) with s = 1/sqrt(1 + 1e-5).
    let s = 1.0 / (1.0f64 + 1e-5).sqrt();
    // trunk.1 z = (s, 0): mean s/2, var s^2/4, xhat = (1,-1) * (s/2)/sqrt(s^2/4 + 1e-5)
    let t = (s / 2.0) / (s * s / 4.0 + 1e-5).sqrt();
    // h2 = (t, 0); value = 2 * relu(t + 0) + 0.5; advantage = (t, 0)
    let v = 2.0 * t + 0.5;
    let expect = [v + t - t / 2.0, v - t / 2.0];
    let q = net.forward(&[1.0, -1.0]).unwrap();
    for (a, b) in q.iter().zip(expect) {
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }
    assert!((q[0] - reference_forward(&net, &[1.0, -1.0])[0]).abs() < 1e-12);
}

#[test]
fn batched_forward_matches_scalar_reference() {
    let mut net = QNetwork::new(5, 4, NetworkConfig { trunk: [6, 7], stream: 3, layer_norm_eps: 1e-5 }, 9).unwrap();
    randomize(&mut net, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let x: Vec<f64> = (0..15).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut cache = ForwardCache::default();
    net.forward_batch(&x, 3, &mut cache).unwrap();
    for b in 0..3 {
        let r = reference_forward(&net, &x[b * 5..(b + 1) * 5]);
        for a in 0..4 {
            assert!((cache.q[b * 4 + a] - r[a]).abs() < 1e-12);
        }
    }
}

#[test]
fn advantage_bias_shift_preserves_gaps() {
    let mut net = QNetwork::new(4, 6, tiny(8), 5).unwrap();
    randomize(&mut net, 6);
    let x = [0.3, -0.2, 0.9, 0.1];
    let q0 = net.forward(&x).unwrap();
    net.param_mut("advantage.1.bias").unwrap().data.iter_mut().for_each(|b| *b += 3.7);
    let q1 = net.forward(&x).unwrap();
    assert_eq!(argmax(&q0), argmax(&q1));
    for i in 0..6 {
        for j in 0..6 {
            assert!(((q0[i] - q0[j]) - (q1[i] - q1[j])).abs() < 1e-12);
        }
    }
}

#[test]
fn layer_norm_standardizes_rows() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let z: Vec<f64> = (0..4 * 64).map(|_| rng.random_range(-20.0..20.0)).collect();
    let (mut xhat, mut inv) = (Vec::new(), Vec::new());
    layer_norm_rows(&z, 64, 1e-5, &mut xhat, &mut inv);
    for row in xhat.chunks(64) {
        let mean = row.iter().sum::<f64>() / 64.0;
        let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 64.0;
        assert!(mean.abs() < 1e-6);
        assert!((var - 1.0).abs() < 1e-6);
    }
}

#[test]
fn non_finite_input_rejected() {
    let net = QNetwork::new(2, 2, tiny(2), 0).unwrap();
    assert!(net.forward(&[f64::NAN, 0.0]).is_err());
    assert!(net.forward(&[f64::INFINITY, 0.0]).is_err());
    assert!(net.forward(&[0.0]).is_err());
}

#[test]
fn gradients_match_finite_differences() {
    let mut net = QNetwork::new(3, 3, tiny(3), 11).unwrap();
    randomize(&mut net, 12);
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let batch = 4;
    let x: Vec<f64> = (0..batch * 3).map(|_| rng.random_range(-1.0..1.0)).collect();
    let c: Vec<f64> = (0..batch * 3).map(|_| rng.random_range(-1.0..1.0)).collect();
    let objective = |net: &QNetwork| {
        let mut cache = ForwardCache::default();
        net.forward_batch(&x, batch, &mut cache).unwrap();
        cache.q.iter().zip(&c).map(|(q, w)| q * w).sum::<f64>()
    };
    let mut cache = ForwardCache::default();
    net.forward_batch(&x, batch, &mut cache).unwrap();
    let mut grads = net.zeros_like();
    net.backward(&cache, &c, &mut grads);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for p in 0..net.params().len() {
        for i in 0..net.params()[p].data.len() {
            let orig = net.params()[p].data[i];
            net.params_mut()[p].data[i] = orig + h;
            let fp = objective(&net);
            net.params_mut()[p].data[i] = orig - h;
            let fm = objective(&net);
            net.params_mut()[p].data[i] = orig;
            let fd = (fp - fm) / (2.0 * h);
            let an = grads[p][i];
            let rel = (fd - an).abs() / fd.abs().max(an.abs()).max(1e-6);
            worst = worst.max(rel);
        }
    }
    assert!(worst < 1e-4, "max relative error {worst}");
}

#[test]
fn smooth_l1_has_unit_threshold() {
    assert_eq!(smooth_l1(0.5), (0.125, 0.5));
    assert_eq!(smooth_l1(-2.0), (1.5, -1.0));
    assert_eq!(smooth_l1(1.0), (0.5, 1.0));
}

#[test]
fn greedy_and_tie_break() {
    let net = QNetwork::new(2, 4, tiny(4), 0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    // zero input on a fresh net gives identical Q values
    assert_eq!(select_action(&net, &[0.0, 0.0], 0.0, &mut rng).unwrap(), 0);
    let mut net2 = net.clone();
    net2.param_mut("advantage.1.bias").unwrap().data[2] = 1.0;
    for _ in 0..10 {
        assert_eq!(select_action(&net2, &[0.0, 0.0], 0.0, &mut rng).unwrap(), 2);
    }
}

#[test]
fn full_exploration_is_uniform() {
    let net = QNetwork::new(2, 10, tiny(4), 0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let n = 100_000;
    let mut counts = [0usize; 10];
    for _ in 0..n {
        counts[select_action(&net, &[0.1, 0.2], 1.0, &mut rng).unwrap()] += 1;
    }
    let sigma = (n as f64 * 0.1 * 0.9).sqrt();
    for c in counts {
        assert!((c as f64 - n as f64 * 0.1).abs() < 3.0 * sigma, "{counts:?}");
    }
}

fn transition(obs: f64, action: usize, reward: f64, done: bool) -> Transition {
    Transition { observation: vec![obs], action, reward, next_observation: vec![obs + 1.0], done }
}

#[test]
fn equal_priorities_sample_uniformly() {
    let mut buf = ReplayBuffer::new(8, 1, 0.6).unwrap();
    for k in 0..8 {
        buf.push(transition(k as f64, 0, 0.0, false)).unwrap();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let b = buf.sample(8, 0.7, &mut rng).unwrap();
    assert!(b.weights.iter().all(|&w| w == 1.0));
    let n = 80_000;
    let mut counts = [0usize; 8];
    for i in buf.sample_indices(n, &mut rng).unwrap() {
        counts[i] += 1;
    }
    let sigma = (n as f64 / 8.0 * (7.0 / 8.0)).sqrt();
    assert!(counts.iter().all(|&c| (c as f64 - n as f64 / 8.0).abs() < 3.0 * sigma));
}

#[test]
fn proportional_sampling_ratio() {
    let mut buf = ReplayBuffer::new(2, 1, 1.0).unwrap();
    buf.push(transition(0.0, 0, 0.0, false)).unwrap();
    buf.push(transition(1.0, 0, 0.0, false)).unwrap();
    buf.update_priorities(&[0, 1], &[0.3, 0.6]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let n = 100_000;
    let ones = buf.sample_indices(n, &mut rng).unwrap().into_iter().filter(|&i| i == 1).count();
    let p = 2.0 / 3.0;
    let sigma = (n as f64 * p * (1.0 - p)).sqrt();
    assert!((ones as f64 - n as f64 * p).abs() < 3.0 * sigma, "{ones}");
    let b = buf.sample(2, 0.0, &mut rng).unwrap();
    assert!(b.weights.iter().all(|&w| w == 1.0));
    for _ in 0..32 {
        let b = buf.sample(2, 1.0, &mut rng).unwrap();
        // w_i = (N P_i)^-1 normalized by the batch maximum
        let raw: Vec<f64> = b.indices.iter().map(|&i| if i == 0 { 1.5 } else { 0.75 }).collect();
        let max = raw.iter().cloned().fold(0.0, f64::max);
        for (w, r) in b.weights.iter().zip(&raw) {
            assert!((w - r / max).abs() < 1e-12);
        }
    }
}

#[test]
fn epsilon_schedule_is_exact() {
    let cfg = TrainerConfig::default();
    let mut e = 1.0f64;
    for k in 0..10_000u64 {
        assert!((cfg.epsilon_at(k) - e.max(0.01)).abs() < 1e-12, "episode {k}");
        e *= 0.999;
    }
    assert_eq!(cfg.epsilon_at(1_000_000), 0.01);
}

#[test]
fn terminal_target_is_reward() {
    let online = QNetwork::new(1, 3, tiny(4), 0).unwrap();
    let mut target = QNetwork::new(1, 3, tiny(4), 1).unwrap();
    randomize(&mut target, 2);
    let mut ws = Workspace::default();
    let y = double_dqn_targets(&online, &target, &[0.5, 0.7], &[0.25, -1.0], &[true, true], 0.99, &mut ws).unwrap();
    assert_eq!(y, vec![0.25, -1.0]);
}

#[test]
fn double_dqn_uses_online_argmax() {
    let mut online = QNetwork::new(1, 2, tiny(2), 0).unwrap();
    let mut target = online.clone();
    for net in [&mut online, &mut target] {
        net.param_mut("advantage.1.weight").unwrap().data.iter_mut().for_each(|w| *w = 0.0);
        net.param_mut("value.1.weight").unwrap().data.iter_mut().for_each(|w| *w = 0.0);
    }
    // online prefers action 0, target prefers action 1
    online.param_mut("advantage.1.bias").unwrap().data.copy_from_slice(&[1.0, 0.0]);
    target.param_mut("advantage.1.bias").unwrap().data.copy_from_slice(&[0.0, 4.0]);
    let qt = target.forward(&[0.3]).unwrap();
    assert_eq!(qt, vec![-2.0, 2.0]);
    let mut ws = Workspace::default();
    let y = double_dqn_targets(&online, &target, &[0.3], &[1.0], &[false], 0.5, &mut ws).unwrap();
    assert_eq!(y[0], 1.0 + 0.5 * qt[0]);
    assert_ne!(y[0], 1.0 + 0.5 * qt[1]);
}

#[test]
fn repeated_training_reaches_fixed_point() {
    let cfg = TrainerConfig { batch_size: 1, gamma: 0.0, network: tiny(16), ..Default::default() };
    let mut online = QNetwork::new(2, 3, cfg.network, 4).unwrap();
    let target = online.clone();
    let mut buf = ReplayBuffer::new(4, 2, cfg.alpha).unwrap();
    buf.push(Transition {
        observation: vec![0.4, -0.3],
        action: 1,
        reward: 0.7,
        next_observation: vec![0.1, 0.1],
        done: false,
    })
    .unwrap();
    let shapes: Vec<usize> = online.params().iter().map(|p| p.data.len()).collect();
    let mut opt = AdamW::new(cfg.adam(), &shapes);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut ws = Workspace::default();
    let mut reached = None;
    for step in 0..2000 {
        let loss = train_step(&mut online, &target, &mut buf, &mut opt, &cfg, 0.4, &mut rng, &mut ws).unwrap();
        assert!(loss >= 0.0);
        assert!(online.is_finite());
        if (online.forward(&[0.4, -0.3]).unwrap()[1] - 0.7).abs() < 1e-3 {
            reached = Some(step);
            break;
        }
    }
    assert!(reached.is_some(), "Q = {}", online.forward(&[0.4, -0.3]).unwrap()[1]);
}

#[test]
fn sync_copies_and_decouples() {
    let cfg = TrainerConfig { batch_size: 4, network: tiny(8), ..Default::default() };
    let mut t = Trainer::new(3, 4, cfg, 21).unwrap();
    randomize(&mut t.online, 3);
    sync_target(&t.online, &mut t.target).unwrap();
    assert_eq!(t.online.params(), t.target.params());
    let snapshot = t.target.clone();
    sync_target(&t.online.clone(), &mut t.target).unwrap();
    assert_eq!(t.target, snapshot);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let s: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
    assert_eq!(t.online.forward(&s).unwrap(), t.target.forward(&s).unwrap());
    for k in 0..8 {
        t.observe(Transition {
            observation: vec![k as f64 * 0.1, 0.0, 1.0],
            action: k % 4,
            reward: 0.1 * k as f64,
            next_observation: vec![0.0, k as f64 * 0.1, 1.0],
            done: k % 3 == 0,
        })
        .unwrap();
    }
    assert!(t.updates > 0);
    assert_eq!(t.target, snapshot);
    assert_ne!(t.online.params(), snapshot.params());
    let wrong = QNetwork::new(2, 4, tiny(8), 0).unwrap();
    assert!(sync_target(&wrong, &mut t.target).is_err());
}

#[test]
fn checkpoint_roundtrip_is_bit_faithful() {
    let cfg = TrainerConfig {
        batch_size: 2,
        network: NetworkConfig { trunk: [5, 6], stream: 3, layer_norm_eps: 1e-5 },
        ..Default::default()
    };
    let mut t = Trainer::new(4, 3, cfg, 8).unwrap();
    for k in 0..5 {
        t.observe(Transition {
            observation: vec![k as f64, 1.0, 0.0, -1.0],
            action: k % 3,
            reward: 1.0,
            next_observation: vec![0.0, 1.0, k as f64, -1.0],
            done: false,
        })
        .unwrap();
        t.end_episode().unwrap();
    }
    let ck = Checkpoint::from_trainer(&t);
    let back = Checkpoint::from_bytes(&ck.to_bytes()).unwrap();
    assert_eq!(back, ck);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("checkpoint.bin");
    ck.save(&path).unwrap();
    let loaded = Checkpoint::load(&path).unwrap();
    let s = [0.2, -0.1, 0.5, 0.0];
    assert_eq!(loaded.online.forward(&s).unwrap(), t.online.forward(&s).unwrap());
    assert_eq!(loaded.adam_step, t.optimizer.step);
    let mut bytes = ck.to_bytes();
    bytes.truncate(bytes.len() - 3);
    assert!(Checkpoint::from_bytes(&bytes).is_err());
    assert!(Checkpoint::from_bytes(b"garbage!").is_err());
}

#[test]
fn trainer_config_validation() {
    let ok = TrainerConfig::default();
    assert!(ok.validate().is_ok());
    let bad = TrainerConfig { epsilon_min: 0.5, epsilon_start: 0.1, ..ok };
    assert!(bad.validate().is_err());
    let bad = TrainerConfig { replay_capacity: 6_000_000, ..ok };
    assert!(bad.validate().is_err());
    let bad = TrainerConfig { learning_rate: 0.0, ..ok };
    assert!(bad.validate().is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dueling_identity_holds(seed in 0u64..1000, x in proptest::collection::vec(-3.0f64..3.0, 4)) {
        let mut net = QNetwork::new(4, 5, tiny(6), seed).unwrap();
        randomize(&mut net, seed + 1);
        let mut cache = ForwardCache::default();
        net.forward_batch(&x, 1, &mut cache).unwrap();
        let mean: f64 = cache.q.iter().map(|q| q - cache.value[0]).sum::<f64>() / 5.0;
        prop_assert!(mean.abs() < 1e-10);
    }

    #[test]
    fn training_keeps_parameters_finite(seed in 0u64..200, r in -5.0f64..5.0) {
        let cfg = TrainerConfig { batch_size: 2, network: tiny(4), ..Default::default() };
        let mut t = Trainer::new(2, 3, cfg, seed).unwrap();
        for k in 0..6 {
            let loss = t.observe(transition2(k, r)).unwrap();
            if let Some(l) = loss {
                prop_assert!(l >= 0.0);
            }
            prop_assert!(t.online.is_finite());
        }
    }
}

fn transition2(k: usize, r: f64) -> Transition {
    Transition {
        observation: vec![k as f64 * 0.3, -0.2],
        action: k % 3,
        reward: r,
        next_observation: vec![0.1, k as f64 * 0.2],
        done: k.is_multiple_of(2),
    }
}
