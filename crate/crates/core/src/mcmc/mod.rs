//! Metropolis-Hastings moves on marked paths.

mod balance;
mod kernel;
mod likelihood;
mod moves;

pub use balance::{balance_check, proposal_log_density, BalanceReport, MovePair};
pub use kernel::{
    log_acceptance_ratio, mh_step, sweep, KernelState, LogRatio, MoveContext, MoveCounts, MoveSchedule, MoveStats,
    Outcome,
};
pub use likelihood::{FlatLikelihood, FnLikelihood, LikelihoodEvaluator};
pub use moves::{
    add_random_point_at, add_virtual_point_at, change_state, change_state_at, change_time, change_time_at,
    erase_random_point_at, erase_virtual_point_at, log_prior_term, propose, propose_dimension, resample_times_at,
    state_weights, ChangeTimeVariant, DimensionVariant, Edit, MoveKind, MoveLabel, Proposal, ProposalFlag, TimeScope,
};
