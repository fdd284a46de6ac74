//! Contracted Schrödinger equation residuals, exponential updates, and the
//! deterministic filtered eigensolver.

mod cqe;
mod exponential;
mod linesearch;
mod residual;

pub use cqe::{
    filtered_cqe_step, rank_by_residual, run_cqe, AnsatzRecord, AnsatzStep, CqeConfig, FilteredStep, GeneratorPool,
    StepRule,
};
pub use exponential::{apply_exponential, apply_exponential_matrix, exp_action_into, Exponentiated};
pub use linesearch::{line_search_theta, LineSearchConfig, LineSearchResult, Objective};
pub use residual::{residual_tensor, ResidualNorm, ResidualTensor};
