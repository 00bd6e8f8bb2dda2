use std::sync::Arc;

use ctbn_core::markov::{sample_piecewise, IntensityMatrix, MarkedPath, PathView, RegimePartition};
use ctbn_core::mcmc::{balance_check, FlatLikelihood, FnLikelihood, LikelihoodEvaluator, MoveContext, MovePair, TimeScope};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn q(rows: &[&[f64]]) -> Arc<IntensityMatrix<f64>> {
    Arc::new(IntensityMatrix::from_dense(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap())
}

fn homogeneous() -> RegimePartition<f64> {
    let a = q(&[&[-2.0, 1.5, 0.5], &[3.0, -4.0, 1.0], &[0.0, 0.5, -0.5]]);
    RegimePartition::new(0.0, 1.0, vec![], vec![a], vec![10.0]).unwrap()
}

fn piecewise() -> RegimePartition<f64> {
    let a = q(&[&[-2.0, 1.5, 0.5], &[3.0, -4.0, 1.0], &[0.0, 0.5, -0.5]]);
    let b = q(&[&[-1.0, 1.0, 0.0], &[0.0, -1.0, 1.0], &[6.0, 0.0, -6.0]]);
    RegimePartition::new(0.0, 1.0, vec![0.3, 0.7], vec![a.clone(), b, a], vec![10.0, 15.0, 10.0]).unwrap()
}

fn random_pair(path: &MarkedPath<f64>, rng: &mut ChaCha8Rng) -> MovePair<f64> {
    let n = path.len();
    let scope = if rng.random_bool(0.5) { TimeScope::Global } else { TimeScope::PerRegime };
    let bridge = rng.random_bool(0.5);
    match rng.random_range(0..7) {
        0 if n > 0 => {
            let index = rng.random_range(1..=n);
            let time = rng.random_range(path.anchor(index - 1)..path.anchor(index + 1));
            MovePair::ChangeTime { index, time, scope }
        }
        1 => {
            let mut times: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
            times.sort_by(|a, b| a.partial_cmp(b).unwrap());
            MovePair::ResampleTimes { times, scope: TimeScope::Global }
        }
        2 => MovePair::ChangeState { index: rng.random_range(0..=n), state: rng.random_range(0..3) },
        3 => MovePair::AddRandomPoint { time: rng.random_range(0.0..1.0), state: rng.random_range(0..3), bridge },
        4 if n > 0 => MovePair::EraseRandomPoint { index: rng.random_range(1..=n), bridge },
        5 => MovePair::AddVirtualPoint { time: rng.random_range(0.0..1.0) },
        _ => {
            let v = path.virtual_indices();
            if v.is_empty() {
                MovePair::AddVirtualPoint { time: rng.random_range(0.0..1.0) }
            } else {
                MovePair::EraseVirtualPoint { index: v[rng.random_range(0..v.len())] }
            }
        }
    }
}

/// Checks `pairs` random pairs and returns how many were reachable both ways.
fn residuals(regimes: &RegimePartition<f64>, likelihood: &dyn LikelihoodEvaluator<f64>, seed: u64, pairs: usize) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let initial = [0.2, 0.5, 0.3];
    let ctx = MoveContext::new(regimes, &initial, likelihood);
    let mut checked = 0;
    for _ in 0..pairs {
        let path = sample_piecewise(regimes, &initial, &mut rng).unwrap();
        let pair = random_pair(&path, &mut rng);
        if let Ok(report) = balance_check(&path, &pair, &ctx) {
            assert!(report.worst() < 1e-9, "{pair:?} on {path:?}: {report:?}");
            checked += 1;
        }
    }
    checked
}

fn wavy(p: &MarkedPath<f64>) -> f64 {
    (0..10).map(|k| ((k as f64 + 0.5) / 10.0 * 7.0).sin() * p.state_at((k as f64 + 0.5) / 10.0) as f64).sum()
}

#[test]
fn random_pairs_balance_on_both_partitions() {
    let lik = FnLikelihood(wavy);
    for (regimes, seed) in [(homogeneous(), 1), (piecewise(), 2)] {
        assert!(residuals(&regimes, &FlatLikelihood, seed, 1000) > 600);
        assert!(residuals(&regimes, &lik, seed + 10, 1000) > 600);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn balance_holds_for_any_seed(seed in any::<u64>()) {
        residuals(&piecewise(), &FnLikelihood(wavy), seed, 20);
    }
}
