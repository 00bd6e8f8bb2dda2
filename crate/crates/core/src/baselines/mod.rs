//! Reference methods: likelihood weighting and an exact smoother.

mod expm;
mod lw;
mod oracle;

pub use expm::{dense_generator, transient_distribution};
pub use lw::{likelihood_weighting, log_weight, weight_degeneracy, LwConfig, LwResult, WeightDiagnostics, WeightedSample};
pub use oracle::{default_step, exact_posterior_grid, exact_posterior_on, smooth, OracleConfig, Smoothing};
