use ctbn_core::ctbn::{simulate, CtbnSpec, CtbnTrajectory};
use ctbn_core::gibbs::Evidence;
use ctbn_core::Result;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::paths::PathsFile;

/// A joint prior sample split into evidence and hidden ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulated {
    pub trajectory: CtbnTrajectory<f64>,
    pub evidence: Evidence<f64>,
}

impl Simulated {
    pub fn hidden(&self) -> Vec<usize> {
        self.evidence.hidden_nodes()
    }

    pub fn evidence_file(&self, spec: &CtbnSpec<f64>) -> PathsFile {
        PathsFile::from_evidence(spec, &self.evidence)
    }

    /// Paths of the hidden nodes only, kept apart from the evidence.
    pub fn truth_file(&self, spec: &CtbnSpec<f64>) -> PathsFile {
        PathsFile::from_trajectory(spec, &self.trajectory, &self.hidden())
    }
}

/// Samples the whole network on `[t_min, t_max]` and exports the `observed`
/// nodes as evidence.
pub fn simulate_evidence(
    spec: &CtbnSpec<f64>,
    observed: &[usize],
    t_min: f64,
    t_max: f64,
    seed: u64,
) -> Result<Simulated> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let trajectory = simulate(spec, t_min, t_max, &mut rng)?;
    let paths = observed.iter().map(|&v| (v, trajectory.path(v).clone())).collect();
    let evidence = Evidence::new(spec, t_min, t_max, paths)?;
    Ok(Simulated { trajectory, evidence })
}
