use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::network::{sync_target, ForwardCache, NetworkConfig, QNetwork};
use super::optim::{clip_global_norm, AdamW, AdamWConfig};
use super::replay::{ReplayBuffer, Transition};
use crate::{Error, Result};

/// Largest replay capacity accepted.
pub const MAX_REPLAY_CAPACITY: usize = 5_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainerConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub gamma: f64,
    /// Episodes between target-network copies.
    pub target_sync_episodes: usize,
    pub epsilon_start: f64,
    pub epsilon_decay: f64,
    pub epsilon_min: f64,
    pub weight_decay: f64,
    pub replay_capacity: usize,
    /// Priority exponent.
    pub alpha: f64,
    /// Importance-sampling exponent, annealed linearly over `beta_anneal_episodes`.
    pub beta_start: f64,
    pub beta_end: f64,
    pub beta_anneal_episodes: usize,
    /// Added to `|TD error|` so no priority reaches zero.
    pub priority_epsilon: f64,
    pub grad_clip: f64,
    /// Gradient updates after each environment step once the buffer holds a batch.
    pub updates_per_step: usize,
    pub network: NetworkConfig,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        TrainerConfig {
            learning_rate: 3e-4,
            batch_size: 256,
            gamma: 0.99,
            target_sync_episodes: 1000,
            epsilon_start: 1.0,
            epsilon_decay: 0.999,
            epsilon_min: 0.01,
            weight_decay: 1e-4,
            replay_capacity: 100_000,
            alpha: 0.6,
            beta_start: 0.4,
            beta_end: 1.0,
            beta_anneal_episodes: 10_000,
            priority_epsilon: 1e-3,
            grad_clip: 10.0,
            updates_per_step: 1,
            network: NetworkConfig::default(),
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.learning_rate) {
            return Err(Error::config("learning_rate", "must be positive"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::config("gamma", "must lie in [0, 1]"));
        }
        if self.target_sync_episodes == 0 {
            return Err(Error::config("target_sync_episodes", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.epsilon_start) || !(0.0..=1.0).contains(&self.epsilon_min) {
            return Err(Error::config("epsilon_start", "epsilons must lie in [0, 1]"));
        }
        if self.epsilon_min > self.epsilon_start {
            return Err(Error::config("epsilon_min", "must not exceed epsilon_start"));
        }
        if !(self.epsilon_decay > 0.0 && self.epsilon_decay <= 1.0) {
            return Err(Error::config("epsilon_decay", "must lie in (0, 1]"));
        }
        if !(self.weight_decay >= 0.0) {
            return Err(Error::config("weight_decay", "must be nonnegative"));
        }
        if self.replay_capacity == 0 || self.replay_capacity > MAX_REPLAY_CAPACITY {
            return Err(Error::config("replay_capacity", format!("must lie in 1..={MAX_REPLAY_CAPACITY}")));
        }
        if !(self.alpha >= 0.0) || !(self.beta_start >= 0.0) || !(self.beta_end >= 0.0) {
            return Err(Error::config("alpha", "PER exponents must be nonnegative"));
        }
        if !positive(self.priority_epsilon) {
            return Err(Error::config("priority_epsilon", "must be positive"));
        }
        if !positive(self.grad_clip) {
            return Err(Error::config("grad_clip", "must be positive"));
        }
        Ok(())
    }

    /// `max(epsilon_min, epsilon_start * decay^episode)`.
    pub fn epsilon_at(&self, episode: u64) -> f64 {
        let e = self.epsilon_start * self.epsilon_decay.powf(episode as f64);
        e.max(self.epsilon_min)
    }

    pub fn beta_at(&self, episode: u64) -> f64 {
        let frac = if self.beta_anneal_episodes == 0 {
            1.0
        } else {
            (episode as f64 / self.beta_anneal_episodes as f64).min(1.0)
        };
        self.beta_start + (self.beta_end - self.beta_start) * frac
    }

    pub fn adam(&self) -> AdamWConfig {
        AdamWConfig { learning_rate: self.learning_rate, weight_decay: self.weight_decay, ..Default::default() }
    }
}

/// Index of the largest value, lowest index on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Epsilon-greedy choice: uniform with probability `epsilon`, otherwise greedy.
pub fn select_action(net: &QNetwork, observation: &[f64], epsilon: f64, rng: &mut impl Rng) -> Result<usize> {
    if epsilon > 0.0 && rng.random::<f64>() < epsilon {
        return Ok(rng.random_range(0..net.n_actions()));
    }
    Ok(argmax(&net.forward(observation)?))
}

/// Huber loss with unit threshold and its derivative.
pub fn smooth_l1(delta: f64) -> (f64, f64) {
    if delta.abs() < 1.0 {
        (0.5 * delta * delta, delta)
    } else {
        (delta.abs() - 0.5, delta.signum())
    }
}

/// Reusable buffers for [`train_step`].
#[derive(Debug, Clone, Default)]
pub struct Workspace {
    online: ForwardCache,
    online_next: ForwardCache,
    target_next: ForwardCache,
    pub grads: Vec<Vec<f64>>,
}

/// Double-DQN targets `r + gamma (1 - done) Q_target(s', argmax_a Q_online(s', a))`.
pub fn double_dqn_targets(
    online: &QNetwork,
    target: &QNetwork,
    next_observations: &[f64],
    rewards: &[f64],
    dones: &[bool],
    gamma: f64,
    ws: &mut Workspace,
) -> Result<Vec<f64>> {
    let b = rewards.len();
    let n = online.n_actions();
    online.forward_batch(next_observations, b, &mut ws.online_next)?;
    target.forward_batch(next_observations, b, &mut ws.target_next)?;
    Ok((0..b)
        .map(|i| {
            if dones[i] {
                rewards[i]
            } else {
                let a = argmax(&ws.online_next.q[i * n..(i + 1) * n]);
                rewards[i] + gamma * ws.target_next.q[i * n + a]
            }
        })
        .collect())
}

/// One prioritized, importance-weighted double-DQN update. Returns the loss.
#[allow(clippy::too_many_arguments)]
pub fn train_step(
    online: &mut QNetwork,
    target: &QNetwork,
    buffer: &mut ReplayBuffer,
    optimizer: &mut AdamW,
    cfg: &TrainerConfig,
    beta: f64,
    rng: &mut impl Rng,
    ws: &mut Workspace,
) -> Result<f64> {
    let batch = buffer.sample(cfg.batch_size, beta, rng)?;
    let b = batch.len();
    let n = online.n_actions();
    let y = double_dqn_targets(online, target, &batch.next_observations, &batch.rewards, &batch.dones, cfg.gamma, ws)?;
    online.forward_batch(&batch.observations, b, &mut ws.online)?;
    let mut dq = vec![0.0; b * n];
    let mut loss = 0.0;
    let mut priorities = Vec::with_capacity(b);
    for i in 0..b {
        let a = batch.actions[i];
        let delta = ws.online.q[i * n + a] - y[i];
        let (l, g) = smooth_l1(delta);
        loss += batch.weights[i] * l / b as f64;
        dq[i * n + a] = batch.weights[i] * g / b as f64;
        priorities.push(delta.abs() + cfg.priority_epsilon);
    }
    if ws.grads.len() != online.params().len() {
        ws.grads = online.zeros_like();
    } else {
        ws.grads.iter_mut().flatten().for_each(|g| *g = 0.0);
    }
    online.backward(&ws.online, &dq, &mut ws.grads);
    clip_global_norm(&mut ws.grads, cfg.grad_clip);
    optimizer.update(online.params_mut().iter_mut().map(|p| (p.data.as_mut_slice(), p.decay)), &ws.grads);
    if !online.is_finite() {
        return Err(Error::NonFinite("network parameters"));
    }
    buffer.update_priorities(&batch.indices, &priorities)?;
    Ok(loss)
}

/// Online and target networks, optimizer, replay, and exploration schedule.
#[derive(Debug, Clone)]
pub struct Trainer {
    pub cfg: TrainerConfig,
    pub online: QNetwork,
    pub target: QNetwork,
    pub optimizer: AdamW,
    pub buffer: ReplayBuffer,
    pub episode: u64,
    pub updates: u64,
    rng: ChaCha8Rng,
    ws: Workspace,
}

impl Trainer {
    pub fn new(input_dim: usize, n_actions: usize, cfg: TrainerConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let online = QNetwork::new(input_dim, n_actions, cfg.network, seed)?;
        let target = online.clone();
        let shapes: Vec<usize> = online.params().iter().map(|p| p.data.len()).collect();
        Ok(Trainer {
            cfg,
            optimizer: AdamW::new(cfg.adam(), &shapes),
            buffer: ReplayBuffer::new(cfg.replay_capacity, input_dim, cfg.alpha)?,
            online,
            target,
            episode: 0,
            updates: 0,
            rng: ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_cafe),
            ws: Workspace::default(),
        })
    }

    /// Rebuilds a trainer around restored networks and optimizer state.
    pub fn restore(
        cfg: TrainerConfig,
        online: QNetwork,
        target: QNetwork,
        optimizer: AdamW,
        episode: u64,
        seed: u64,
    ) -> Result<Self> {
        cfg.validate()?;
        Ok(Trainer {
            cfg,
            buffer: ReplayBuffer::new(cfg.replay_capacity, online.input_dim(), cfg.alpha)?,
            online,
            target,
            optimizer,
            episode,
            updates: 0,
            rng: ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_cafe),
            ws: Workspace::default(),
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.cfg.epsilon_at(self.episode)
    }

    pub fn act(&mut self, observation: &[f64]) -> Result<usize> {
        let eps = self.epsilon();
        select_action(&self.online, observation, eps, &mut self.rng)
    }

    pub fn greedy(&self, observation: &[f64]) -> Result<usize> {
        Ok(argmax(&self.online.forward(observation)?))
    }

    /// Stores a transition and runs the configured updates; returns the mean loss if any update ran.
    pub fn observe(&mut self, t: Transition) -> Result<Option<f64>> {
        self.buffer.push(t)?;
        if self.buffer.len() < self.cfg.batch_size {
            return Ok(None);
        }
        let beta = self.cfg.beta_at(self.episode);
        let mut total = 0.0;
        for _ in 0..self.cfg.updates_per_step {
            total += train_step(
                &mut self.online,
                &self.target,
                &mut self.buffer,
                &mut self.optimizer,
                &self.cfg,
                beta,
                &mut self.rng,
                &mut self.ws,
            )?;
            self.updates += 1;
        }
        Ok((self.cfg.updates_per_step > 0).then(|| total / self.cfg.updates_per_step as f64))
    }

    /// Advances the episode counter and syncs the target on schedule.
    pub fn end_episode(&mut self) -> Result<()> {
        self.episode += 1;
        if self.episode.is_multiple_of(self.cfg.target_sync_episodes as u64) {
            sync_target(&self.online, &mut self.target)?;
        }
        Ok(())
    }
}
