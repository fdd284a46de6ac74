use std::io::Write;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::problem::Problem;
use crate::cse::{
    line_search_theta, residual_tensor, GeneratorPool, LineSearchConfig, Objective, ResidualNorm, ResidualTensor,
};
use crate::fockspace::{project_lowest_spin, Flavor, SectorBasis, StateVector};
use crate::{Error, Result};

/// Discrete action set: one generator per action.
pub type ActionPool = GeneratorPool;

/// Initial state of each episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitMode {
    /// Fresh standard-normal coefficients every episode.
    #[default]
    RandomState,
    /// One standard-normal state per problem, drawn once from the seed.
    FixedRandomState,
    /// Determinant with the lowest diagonal energy.
    LowestDeterminant,
    /// Exact ground state; for checking absorbing behavior.
    ExactGroundState,
}

/// Per-problem constant added to the learning signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RewardShift {
    #[default]
    None,
    /// Add the exact ground energy, so the signal measures distance from it.
    ExactEnergy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    /// Actions per episode.
    pub t_max: usize,
    /// Residual weight in the reward.
    pub lambda: f64,
    /// Subtracted from the reward whenever an action repeats within an episode.
    pub reuse_penalty: f64,
    /// Shift of the training reward; the logged reward is never shifted.
    pub reward_shift: RewardShift,
    /// Factor applied to the shifted training reward.
    pub reward_scale: f64,
    pub init: InitMode,
    /// Project random initial states onto the lowest compatible spin.
    pub spin_projection: bool,
    /// Append the Hermitian coefficients to the observation.
    pub include_hermitian: bool,
    /// Append the current energy to the observation.
    pub include_energy: bool,
    /// Append the fraction of the action budget still unused.
    pub include_progress: bool,
    /// Append one 0/1 entry per action marking use earlier in the episode.
    pub include_usage: bool,
    pub flavor: Flavor,
    /// Drop generators that vanish on the sector.
    pub prune_inert: bool,
    pub norm: ResidualNorm,
    pub line_search: LineSearchConfig,
    pub seed: u64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            t_max: 5,
            lambda: 0.2,
            reuse_penalty: 0.1,
            reward_shift: RewardShift::None,
            reward_scale: 1.0,
            init: InitMode::RandomState,
            spin_projection: false,
            include_hermitian: false,
            include_energy: true,
            include_progress: false,
            include_usage: false,
            flavor: Flavor::AntiHermitian,
            prune_inert: false,
            norm: ResidualNorm::Full,
            line_search: LineSearchConfig::default(),
            seed: 0,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        if self.t_max == 0 {
            return Err(Error::config("t_max", "must be at least 1"));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::config("lambda", "must be nonnegative"));
        }
        if !(self.reuse_penalty >= 0.0 && self.reuse_penalty.is_finite()) {
            return Err(Error::config("reuse_penalty", "must be nonnegative"));
        }
        if !(self.reward_scale > 0.0 && self.reward_scale.is_finite()) {
            return Err(Error::config("reward_scale", "must be positive and finite"));
        }
        self.line_search.validate().map_err(|e| e.within("line_search"))
    }

    pub fn objective(&self) -> Objective {
        Objective::Reward { lambda: self.lambda, norm: self.norm }
    }
}

/// Builds the action pool for a sector.
pub fn build_action_pool(basis: &SectorBasis, flavor: Flavor, prune_inert: bool) -> Result<ActionPool> {
    let pool = GeneratorPool::canonical(basis, flavor)?;
    Ok(if prune_inert { pool.without_inert() } else { pool })
}

/// Residual features seen by the agent.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub features: Vec<f64>,
    /// Leading entries that are residual coefficients.
    pub residual_len: usize,
}

impl Observation {
    pub fn residual_features(&self) -> &[f64] {
        &self.features[..self.residual_len]
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeState {
    pub problem: usize,
    pub state: StateVector,
    pub initial_state: StateVector,
    /// Times each action was taken this episode.
    pub uses: Vec<u32>,
    pub t: usize,
    pub t_max: usize,
    pub energy: f64,
    pub residual_norm: f64,
}

impl EpisodeState {
    pub fn done(&self) -> bool {
        self.t >= self.t_max
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepLog {
    pub t: usize,
    pub action: usize,
    pub theta: f64,
    pub reward: f64,
    pub energy: f64,
    pub residual_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub observation: Observation,
    pub reward: f64,
    /// `reward_scale * (reward + shift)`, the value the agent learns from.
    pub training_reward: f64,
    pub done: bool,
    pub log: StepLog,
}

/// Environment over a fixed sector with one or more candidate Hamiltonians.
#[derive(Debug, Clone)]
pub struct Env {
    cfg: EnvConfig,
    basis: SectorBasis,
    pool: ActionPool,
    problems: Vec<Problem>,
    fixed_states: Vec<StateVector>,
    rng: ChaCha8Rng,
    episode: Option<EpisodeState>,
}

fn random_state(dim: usize, rng: &mut ChaCha8Rng) -> Result<StateVector> {
    let v = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
    StateVector::from_unnormalized(v)
}

impl Env {
    pub fn new(basis: SectorBasis, problems: Vec<Problem>, cfg: EnvConfig) -> Result<Self> {
        cfg.validate()?;
        if problems.is_empty() {
            return Err(Error::config("geometries", "environment needs at least one Hamiltonian"));
        }
        if let Some(p) = problems.iter().find(|p| p.dim() != basis.dim()) {
            return Err(Error::Dimension(format!(
                "Hamiltonian `{}` has dimension {}, sector {}",
                p.label,
                p.dim(),
                basis.dim()
            )));
        }
        let pool = build_action_pool(&basis, cfg.flavor, cfg.prune_inert)?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut fixed_states = Vec::new();
        if cfg.init == InitMode::FixedRandomState {
            for _ in &problems {
                let mut s = random_state(basis.dim(), &mut rng)?;
                if cfg.spin_projection {
                    s = project_lowest_spin(&s, &basis)?;
                }
                fixed_states.push(s);
            }
        }
        Ok(Env { cfg, basis, pool, problems, fixed_states, rng, episode: None })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn basis(&self) -> &SectorBasis {
        &self.basis
    }

    pub fn pool(&self) -> &ActionPool {
        &self.pool
    }

    pub fn n_actions(&self) -> usize {
        self.pool.len()
    }

    pub fn problems(&self) -> &[Problem] {
        &self.problems
    }

    pub fn episode(&self) -> Option<&EpisodeState> {
        self.episode.as_ref()
    }

    /// Feature length: the pool size once per residual part, then the optional
    /// energy, progress and usage entries.
    pub fn observation_dim(&self) -> usize {
        let n = self.pool.len();
        n * (1 + usize::from(self.cfg.include_hermitian) + usize::from(self.cfg.include_usage))
            + usize::from(self.cfg.include_energy)
            + usize::from(self.cfg.include_progress)
    }

    fn observe(&self, r: &ResidualTensor, t: usize, uses: &[u32]) -> Observation {
        let n = self.pool.len();
        let mut features = Vec::with_capacity(self.observation_dim());
        for g in self.pool.generators() {
            features.push(r.coefficient(&g.with_flavor(Flavor::AntiHermitian)));
        }
        if self.cfg.include_hermitian {
            for g in self.pool.generators() {
                features.push(r.coefficient(&g.with_flavor(Flavor::Hermitian)));
            }
        }
        if self.cfg.include_energy {
            features.push(r.energy());
        }
        if self.cfg.include_progress {
            features.push((self.cfg.t_max - t) as f64 / self.cfg.t_max as f64);
        }
        if self.cfg.include_usage {
            features.extend(uses.iter().map(|&u| if u > 0 { 1.0 } else { 0.0 }));
        }
        Observation { features, residual_len: n * (1 + usize::from(self.cfg.include_hermitian)) }
    }

    fn initial_state(&mut self, problem: usize) -> Result<StateVector> {
        let dim = self.basis.dim();
        Ok(match self.cfg.init {
            InitMode::RandomState => {
                let s = random_state(dim, &mut self.rng)?;
                if self.cfg.spin_projection {
                    project_lowest_spin(&s, &self.basis)?
                } else {
                    s
                }
            }
            InitMode::FixedRandomState => self.fixed_states[problem].clone(),
            InitMode::LowestDeterminant => StateVector::basis_state(dim, self.problems[problem].lowest_determinant),
            InitMode::ExactGroundState => self.problems[problem].ground_state.clone(),
        })
    }

    /// Starts an episode on a uniformly drawn Hamiltonian.
    pub fn reset(&mut self) -> Result<Observation> {
        let problem = if self.problems.len() == 1 { 0 } else { self.rng.random_range(0..self.problems.len()) };
        self.reset_on(problem)
    }

    /// Starts an episode on a chosen Hamiltonian.
    pub fn reset_on(&mut self, problem: usize) -> Result<Observation> {
        if problem >= self.problems.len() {
            return Err(Error::ActionOutOfRange { index: problem, size: self.problems.len() });
        }
        let state = self.initial_state(problem)?;
        self.reset_with_state(problem, state)
    }

    /// Starts an episode from an explicit state.
    pub fn reset_with_state(&mut self, problem: usize, state: StateVector) -> Result<Observation> {
        let r = residual_tensor(&state, &self.problems[problem].hamiltonian, &self.basis)?;
        let uses = vec![0; self.pool.len()];
        let obs = self.observe(&r, 0, &uses);
        self.episode = Some(EpisodeState {
            problem,
            initial_state: state.clone(),
            state,
            uses,
            t: 0,
            t_max: self.cfg.t_max,
            energy: r.energy(),
            residual_norm: r.norm(self.cfg.norm),
        });
        Ok(obs)
    }

    /// Applies one line-searched generator.
    pub fn step(&mut self, action: usize) -> Result<StepOutcome> {
        let n = self.pool.len();
        if action >= n {
            return Err(Error::ActionOutOfRange { index: action, size: n });
        }
        let ep = self.episode.as_ref().ok_or(Error::EpisodeDone)?;
        if ep.done() {
            return Err(Error::EpisodeDone);
        }
        let problem = &self.problems[ep.problem];
        let shift = match self.cfg.reward_shift {
            RewardShift::None => 0.0,
            RewardShift::ExactEnergy => problem.e_exact,
        };
        let ls = line_search_theta(
            &ep.state,
            self.pool.matrix(action),
            &problem.hamiltonian,
            &self.basis,
            self.cfg.objective(),
            &self.cfg.line_search,
        )?;
        let r = residual_tensor(&ls.state, &problem.hamiltonian, &self.basis)?;
        let energy = r.energy();
        let residual_norm = r.norm(self.cfg.norm);
        let ep = self.episode.as_mut().expect("checked above");
        let reused = ep.uses[action] > 0;
        let reward = -(energy + self.cfg.lambda * residual_norm) - if reused { self.cfg.reuse_penalty } else { 0.0 };
        ep.uses[action] += 1;
        ep.t += 1;
        let (t, uses) = (ep.t, ep.uses.clone());
        let obs = self.observe(&r, t, &uses);
        let ep = self.episode.as_mut().expect("checked above");
        ep.state = ls.state;
        ep.energy = energy;
        ep.residual_norm = residual_norm;
        let log = StepLog { t: ep.t, action, theta: ls.theta, reward, energy, residual_norm };
        Ok(StepOutcome {
            observation: obs,
            reward,
            training_reward: self.cfg.reward_scale * (reward + shift),
            done: ep.done(),
            log,
        })
    }
}

/// Writes one JSON object per step.
pub fn write_episode_log(logs: &[StepLog], mut out: impl Write) -> Result<()> {
    for l in logs {
        let line = serde_json::to_string(l).map_err(|e| Error::Checkpoint(e.to_string()))?;
        writeln!(out, "{line}").map_err(|e| Error::io("<episode log>", e))?;
    }
    Ok(())
}

pub fn read_episode_log(text: &str) -> Result<Vec<StepLog>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                path: "<episode log>".into(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}
