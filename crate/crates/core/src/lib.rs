//! Inference for continuous-time Bayesian networks by Metropolis-within-Gibbs
//! sampling on uniformized sample paths.
//!
//! Every numeric type is generic over [`Real`]; the aliases below fix the
//! scalar to `f64` or `f32`.

pub mod baselines;
pub mod ctbn;
pub mod error;
pub mod gibbs;
pub mod markov;
pub mod mcmc;
pub mod scalar;
#[cfg(test)]
mod testing;

pub use error::{Error, Result};
pub use scalar::Real;

pub type IntensityMatrix64 = markov::IntensityMatrix<f64>;
pub type IntensityMatrix32 = markov::IntensityMatrix<f32>;
pub type SkeletonMatrix64 = markov::SkeletonMatrix<f64>;
pub type SkeletonMatrix32 = markov::SkeletonMatrix<f32>;
pub type MarkedPath64 = markov::MarkedPath<f64>;
pub type MarkedPath32 = markov::MarkedPath<f32>;
pub type SamplePath64 = markov::SamplePath<f64>;
pub type SamplePath32 = markov::SamplePath<f32>;
pub type RegimePartition64 = markov::RegimePartition<f64>;
pub type RegimePartition32 = markov::RegimePartition<f32>;
pub type CtbnSpec64 = ctbn::CtbnSpec<f64>;
pub type CtbnSpec32 = ctbn::CtbnSpec<f32>;
pub type CtbnTrajectory64 = ctbn::CtbnTrajectory<f64>;
pub type CtbnTrajectory32 = ctbn::CtbnTrajectory<f32>;
pub type Evidence64 = gibbs::Evidence<f64>;
pub type Evidence32 = gibbs::Evidence<f32>;
pub type PosteriorEstimate64 = gibbs::PosteriorEstimate<f64>;
pub type PosteriorEstimate32 = gibbs::PosteriorEstimate<f32>;
