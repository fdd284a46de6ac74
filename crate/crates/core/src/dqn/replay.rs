use rand::Rng;

use crate::{Error, Result};

/// Binary tree of partial sums over a power-of-two leaf array.
#[derive(Debug, Clone, PartialEq)]
pub struct SumTree {
    leaves: usize,
    nodes: Vec<f64>,
}

impl SumTree {
    pub fn new(capacity: usize) -> Self {
        let leaves = capacity.max(1).next_power_of_two();
        SumTree { leaves, nodes: vec![0.0; 2 * leaves] }
    }

    pub fn total(&self) -> f64 {
        self.nodes[1]
    }

    pub fn get(&self, i: usize) -> f64 {
        self.nodes[self.leaves + i]
    }

    pub fn set(&mut self, i: usize, value: f64) {
        let mut n = self.leaves + i;
        self.nodes[n] = value;
        while n > 1 {
            n /= 2;
            self.nodes[n] = self.nodes[2 * n] + self.nodes[2 * n + 1];
        }
    }

    /// Leaf whose cumulative interval contains `mass` in `[0, total)`.
    pub fn find(&self, mut mass: f64) -> usize {
        let mut n = 1;
        while n < self.leaves {
            let left = self.nodes[2 * n];
            if mass < left || self.nodes[2 * n + 1] <= 0.0 {
                n *= 2;
            } else {
                mass -= left;
                n = 2 * n + 1;
            }
        }
        n - self.leaves
    }
}

/// `(s, a, r, s', done)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub observation: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_observation: Vec<f64>,
    pub done: bool,
}

/// Sampled minibatch in row-major arrays.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Batch {
    pub indices: Vec<usize>,
    pub weights: Vec<f64>,
    pub observations: Vec<f64>,
    pub actions: Vec<usize>,
    pub rewards: Vec<f64>,
    pub next_observations: Vec<f64>,
    pub dones: Vec<bool>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Proportional prioritized replay over a ring buffer.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    obs_dim: usize,
    alpha: f64,
    observations: Vec<f64>,
    next_observations: Vec<f64>,
    actions: Vec<usize>,
    rewards: Vec<f64>,
    dones: Vec<bool>,
    priorities: Vec<f64>,
    tree: SumTree,
    cursor: usize,
    max_priority: f64,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, obs_dim: usize, alpha: f64) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::config("replay_capacity", "must be positive"));
        }
        if !(alpha >= 0.0) {
            return Err(Error::config("alpha", "must be nonnegative"));
        }
        Ok(ReplayBuffer {
            capacity,
            obs_dim,
            alpha,
            observations: Vec::new(),
            next_observations: Vec::new(),
            actions: Vec::new(),
            rewards: Vec::new(),
            dones: Vec::new(),
            priorities: Vec::new(),
            tree: SumTree::new(capacity),
            cursor: 0,
            max_priority: 1.0,
        })
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Raw priority `p_i` of a stored item.
    pub fn priority(&self, i: usize) -> f64 {
        self.priorities[i]
    }

    /// `p_i^alpha / sum_j p_j^alpha`.
    pub fn probability(&self, i: usize) -> f64 {
        self.tree.get(i) / self.tree.total()
    }

    /// Stores a transition at the current maximum priority, overwriting the oldest when full.
    pub fn push(&mut self, t: Transition) -> Result<()> {
        if t.observation.len() != self.obs_dim || t.next_observation.len() != self.obs_dim {
            return Err(Error::Dimension(format!(
                "transition observation of length {} for buffer dimension {}",
                t.observation.len(),
                self.obs_dim
            )));
        }
        let p = self.max_priority;
        let i = self.cursor;
        if self.len() < self.capacity {
            self.observations.extend_from_slice(&t.observation);
            self.next_observations.extend_from_slice(&t.next_observation);
            self.actions.push(t.action);
            self.rewards.push(t.reward);
            self.dones.push(t.done);
            self.priorities.push(p);
        } else {
            let d = self.obs_dim;
            self.observations[i * d..(i + 1) * d].copy_from_slice(&t.observation);
            self.next_observations[i * d..(i + 1) * d].copy_from_slice(&t.next_observation);
            self.actions[i] = t.action;
            self.rewards[i] = t.reward;
            self.dones[i] = t.done;
            self.priorities[i] = p;
        }
        self.tree.set(i, p.powf(self.alpha));
        self.cursor = (i + 1) % self.capacity;
        Ok(())
    }

    pub fn transition(&self, i: usize) -> Transition {
        let d = self.obs_dim;
        Transition {
            observation: self.observations[i * d..(i + 1) * d].to_vec(),
            action: self.actions[i],
            reward: self.rewards[i],
            next_observation: self.next_observations[i * d..(i + 1) * d].to_vec(),
            done: self.dones[i],
        }
    }

    /// Indices drawn independently with probability `p^alpha / sum p^alpha`.
    pub fn sample_indices(&self, n: usize, rng: &mut impl Rng) -> Result<Vec<usize>> {
        if self.is_empty() {
            return Err(Error::ReplayUnderfilled { have: 0, need: n.max(1) });
        }
        let total = self.tree.total();
        Ok((0..n)
            .map(|_| {
                let i = self.tree.find(rng.random::<f64>() * total);
                i.min(self.len() - 1)
            })
            .collect())
    }

    /// Minibatch with importance weights `(N P(i))^-beta`, normalized by the batch maximum.
    pub fn sample(&self, batch_size: usize, beta: f64, rng: &mut impl Rng) -> Result<Batch> {
        if self.len() < batch_size || batch_size == 0 {
            return Err(Error::ReplayUnderfilled { have: self.len(), need: batch_size.max(1) });
        }
        let indices = self.sample_indices(batch_size, rng)?;
        let n = self.len() as f64;
        let mut weights: Vec<f64> = indices.iter().map(|&i| (n * self.probability(i)).powf(-beta)).collect();
        let max = weights.iter().cloned().fold(0.0, f64::max);
        weights.iter_mut().for_each(|w| *w /= max);
        let d = self.obs_dim;
        let mut b = Batch { weights, ..Default::default() };
        for &i in &indices {
            b.observations.extend_from_slice(&self.observations[i * d..(i + 1) * d]);
            b.next_observations.extend_from_slice(&self.next_observations[i * d..(i + 1) * d]);
            b.actions.push(self.actions[i]);
            b.rewards.push(self.rewards[i]);
            b.dones.push(self.dones[i]);
        }
        b.indices = indices;
        Ok(b)
    }

    /// Sets raw priorities; every priority must be positive and finite.
    pub fn update_priorities(&mut self, indices: &[usize], priorities: &[f64]) -> Result<()> {
        for (&i, &p) in indices.iter().zip(priorities) {
            if !(p > 0.0 && p.is_finite()) {
                return Err(Error::NonFinite("replay priority"));
            }
            self.priorities[i] = p;
            self.tree.set(i, p.powf(self.alpha));
            self.max_priority = self.max_priority.max(p);
        }
        Ok(())
    }
}
