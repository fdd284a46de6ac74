//! Dueling double deep Q-network with proportional prioritized replay.
//!
//! Arrays are flat row-major `f64`; affine layers store weights as
//! `out x in`. Gradients are hand-derived and checked against finite
//! differences in the tests.

mod checkpoint;
mod network;
mod optim;
mod replay;
mod trainer;

pub use checkpoint::{Checkpoint, CHECKPOINT_VERSION};
pub use network::{layer_norm_rows, sync_target, ForwardCache, NetworkConfig, Param, QNetwork};
pub use optim::{clip_global_norm, AdamW, AdamWConfig};
pub use replay::{Batch, ReplayBuffer, SumTree, Transition};
pub use trainer::{
    argmax, double_dqn_targets, select_action, smooth_l1, train_step, Trainer, TrainerConfig, Workspace,
    MAX_REPLAY_CAPACITY,
};
