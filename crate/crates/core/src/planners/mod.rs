//! Policy sources for action nodes: exact policy iteration on a known model
//! and tabular learning from the mission's return status.

mod learn;
mod mdp;
mod policy;

use thiserror::Error;

use crate::bt::BtError;
use crate::compiler::CompileError;
use crate::gridworld::GridError;
use crate::ltlf::LtlfError;
use crate::mission::MissionError;

pub use learn::{
    evaluate_policy, learn, EpisodeSummary, EvalConfig, EvalOutcome, GridEpisode, GridMission,
    LearnOutcome, LearnerConfig,
};
pub use mdp::{
    evaluate_deterministic, greedy_action, policy_iteration, Mdp, PolicyIterationResult,
};
pub use policy::{feedback_update, Policy, PolicyKind, PolicyPlanner, Selection};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlannerError {
    #[error("row ({state}, {action}) of the kernel sums to {sum}")]
    NonStochasticKernel {
        state: usize,
        action: usize,
        sum: f64,
    },
    #[error("policy iteration did not converge in {0} iterations")]
    NoConvergence(usize),
    #[error("discount must lie in (0, 1), got {0}")]
    InvalidDiscount(f64),
    #[error("policy evaluation system is singular")]
    SingularSystem,
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Mission(#[from] MissionError),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Bt(#[from] BtError),
    #[error(transparent)]
    Ltlf(#[from] LtlfError),
}

/// Independent seed for stream `index` of a run seeded with `base`
/// (SplitMix64 finalizer over the pair).
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base
        .wrapping_add(index.wrapping_mul(0x9e37_79b9_7f4a_7c15))
        .wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
