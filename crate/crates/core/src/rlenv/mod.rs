//! The eigensolver as a Markov decision process.
//!
//! An observation is the anti-Hermitian residual coefficient of every pool
//! generator, optionally followed by the Hermitian coefficients and the
//! energy. An action picks one generator; its angle is found by line search
//! on `E + lambda ||R||`, and the step reward is `-(E + lambda ||R||)` minus a
//! penalty when the generator was already used in the episode.

mod env;
mod problem;

pub use env::{
    build_action_pool, read_episode_log, write_episode_log, ActionPool, Env, EnvConfig, EpisodeState, InitMode,
    Observation, RewardShift, StepLog, StepOutcome,
};
pub use problem::{chain_label, Problem};
