//! Continuous-time Bayesian networks: specification, trajectories and
//! densities.

mod density;
mod simulate;
mod spec;
mod trajectory;

pub use density::{
    amalgamate, joint_initial, local_regimes, log_cbi, log_density, log_rho, log_rho_window, node_cims,
    node_conditional_logdensity, node_stats, sufficient_stats, NodeConditional, NodeStats, SufficientStats,
    DEFAULT_JOINT_CAP,
};
pub use simulate::{simulate, simulate_given, states_at};
pub use spec::{BayesNetInitial, CtbnSpec, FullConditionalInitial, InitialDistribution, NodeSpec};
pub use trajectory::{CtbnTrajectory, Replaced, TrajectoryView};
