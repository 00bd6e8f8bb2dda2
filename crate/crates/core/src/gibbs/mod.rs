//! Metropolis-within-Gibbs over the hidden nodes of a network.

mod engine;
mod estimate;
mod evidence;
mod likelihood;

pub use engine::{gibbs_sweep, init_trajectory, run, run_chains, update_node, Chain, GibbsConfig, Scan};
pub use estimate::{Diagnostics, PosteriorEstimate, TimeGrid};
pub use evidence::Evidence;
pub use likelihood::ChildLikelihood;
