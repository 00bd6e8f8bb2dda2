use crate::ctbn::{log_rho, log_rho_window, CtbnSpec, CtbnTrajectory, InitialDistribution, Replaced};
use crate::markov::MarkedPath;
use crate::mcmc::LikelihoodEvaluator;
use crate::scalar::Real;

/// Likelihood of the rest of the network as a function of the path of
/// one node: the factors of its children and, for a Bayesian-network
/// initial law, the initial factors of its initial children.
pub struct ChildLikelihood<'a, T> {
    spec: &'a CtbnSpec<T>,
    traj: &'a CtbnTrajectory<T>,
    node: usize,
}

impl<'a, T: Real> ChildLikelihood<'a, T> {
    pub fn new(spec: &'a CtbnSpec<T>, traj: &'a CtbnTrajectory<T>, node: usize) -> Self {
        Self { spec, traj, node }
    }

    fn initial_part(&self, x: usize) -> T {
        match self.spec.initial() {
            InitialDistribution::BayesNet(bn) => {
                let mut x0 = self.traj.initial_state();
                x0[self.node] = x;
                bn.children(self.node).iter().map(|&w| bn.log_node(w, &x0)).sum()
            }
            InitialDistribution::FullConditional(_) => T::zero(),
        }
    }

    fn view<'b>(&'b self, path: &'b MarkedPath<T>) -> Replaced<'b, T> {
        Replaced {
            base: self.traj,
            node: self.node,
            path,
        }
    }
}

impl<T: Real> LikelihoodEvaluator<T> for ChildLikelihood<'_, T> {
    fn log_likelihood(&self, path: &MarkedPath<T>) -> T {
        let view = self.view(path);
        let children: T = self
            .spec
            .children(self.node)
            .iter()
            .map(|&w| log_rho(self.spec, w, &view))
            .sum();
        self.initial_part(path.states()[0]) + children
    }

    fn log_likelihood_window(&self, path: &MarkedPath<T>, lo: T, hi: T) -> Option<T> {
        let view = self.view(path);
        let mut total: T = self
            .spec
            .children(self.node)
            .iter()
            .map(|&w| log_rho_window(self.spec, w, &view, lo, hi))
            .sum();
        if lo == path.interval().0 {
            total += self.initial_part(path.states()[0]);
        }
        Some(total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ctbn::{local_regimes, simulate};
    use crate::markov::{lift_path, pad_virtual, LambdaPolicy};
    use crate::mcmc::{log_acceptance_ratio, propose, KernelState, MoveContext, MoveKind, ChangeTimeVariant, TimeScope, DimensionVariant};
    use crate::testing::cycle;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const KINDS: [MoveKind; 6] = [
        MoveKind::ChangeTime { variant: ChangeTimeVariant::SinglePoint, scope: TimeScope::Global },
        MoveKind::ChangeTime { variant: ChangeTimeVariant::FullResample, scope: TimeScope::Global },
        MoveKind::ChangeState,
        MoveKind::Dimension(DimensionVariant::RandomPoint { bridge: false }),
        MoveKind::Dimension(DimensionVariant::RandomPoint { bridge: true }),
        MoveKind::Dimension(DimensionVariant::VirtualPoint),
    ];

    #[test]
    fn windowed_deltas_match_full_recomputation() {
        let spec = cycle();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut checked = 0;
        for _ in 0..40 {
            let traj = simulate(&spec, 0.0, 1.0, &mut rng).unwrap();
            for v in 0..3 {
                let regimes = local_regimes(&spec, v, &traj, LambdaPolicy::default()).unwrap();
                let initial = spec.node_initial(v, &traj.initial_state());
                let lik = ChildLikelihood::new(&spec, &traj, v);
                let windowed = MoveContext::new(&regimes, &initial, &lik);
                let full = MoveContext { incremental: false, ..MoveContext::new(&regimes, &initial, &lik) };
                let path = lift_path(traj.path(v), &regimes, &mut rng);
                let mut a = KernelState::new(path.clone(), &windowed);
                let mut b = KernelState::new(path.clone(), &full);
                for kind in KINDS {
                    let prop = propose(kind, &path, &regimes, &initial, &mut rng);
                    let ra = log_acceptance_ratio(&mut a, &prop, &windowed);
                    let rb = log_acceptance_ratio(&mut b, &prop, &full);
                    if rb.delta_likelihood.is_finite() {
                        assert!((ra.delta_likelihood - rb.delta_likelihood).abs() < 1e-9, "{kind:?}");
                        checked += 1;
                    } else {
                        assert_eq!(ra.delta_likelihood, rb.delta_likelihood);
                    }
                }
            }
        }
        assert!(checked > 500);
    }

    #[test]
    fn virtual_points_do_not_change_the_likelihood() {
        let spec = cycle();
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..30 {
            let traj = simulate(&spec, 0.0, 1.0, &mut rng).unwrap();
            for v in 0..3 {
                let lik = ChildLikelihood::new(&spec, &traj, v);
                let path = traj.path(v).to_marked();
                let padded = pad_virtual(&path, 40.0, &mut rng);
                let (a, b) = (lik.log_likelihood(&path), lik.log_likelihood(&padded));
                assert!((a - b).abs() < 1e-12 || a == b);
            }
        }
    }

    #[test]
    fn full_value_is_children_plus_initial_factors() {
        let spec = cycle();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let traj = simulate(&spec, 0.0, 1.0, &mut rng).unwrap();
        let lik = ChildLikelihood::new(&spec, &traj, 1);
        // Independent initial law: no initial children.
        let want = log_rho(&spec, 2, &traj);
        assert!((lik.log_likelihood(&traj.path(1).to_marked()) - want).abs() < 1e-12);
    }
}
