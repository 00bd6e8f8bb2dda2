//! Fixtures shared by the unit tests.

use std::sync::Arc;

use crate::ctbn::{BayesNetInitial, CtbnSpec, InitialDistribution, NodeSpec};
use crate::markov::IntensityMatrix;

pub fn q(rows: &[&[f64]]) -> Arc<IntensityMatrix<f64>> {
    let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
    Arc::new(IntensityMatrix::from_dense(&rows).unwrap())
}

pub fn labels(n: usize) -> Vec<String> {
    (1..=n).map(|k| k.to_string()).collect()
}

pub fn node(name: &str, size: usize, parents: Vec<usize>, cims: Vec<Arc<IntensityMatrix<f64>>>) -> NodeSpec<f64> {
    NodeSpec {
        name: name.into(),
        states: labels(size),
        parents,
        cims,
    }
}

pub fn uniform_initial(sizes: &[usize]) -> InitialDistribution<f64> {
    let marginals = sizes.iter().map(|&k| vec![1.0 / k as f64; k]).collect();
    InitialDistribution::BayesNet(BayesNetInitial::independent(marginals).unwrap())
}

/// X -> Y, both binary, with Y fast and sticky to X.
pub fn example1() -> CtbnSpec<f64> {
    let x = node("X", 2, vec![], vec![q(&[&[-4.0, 4.0], &[5.0, -5.0]])]);
    let y = node(
        "Y",
        2,
        vec![0],
        vec![q(&[&[-100.0, 100.0], &[20.0, -20.0]]), q(&[&[-20.0, 20.0], &[100.0, -100.0]])],
    );
    CtbnSpec::new(vec![x, y], uniform_initial(&[2, 2])).unwrap()
}

/// X -> Y where Y switches fast when X = 1 and slowly when X = 2.
pub fn example2() -> CtbnSpec<f64> {
    let x = node("X", 2, vec![], vec![q(&[&[-4.0, 4.0], &[5.0, -5.0]])]);
    let y = node(
        "Y",
        2,
        vec![0],
        vec![q(&[&[-100.0, 100.0], &[100.0, -100.0]]), q(&[&[-2.0, 2.0], &[2.0, -2.0]])],
    );
    CtbnSpec::new(vec![x, y], uniform_initial(&[2, 2])).unwrap()
}

/// A cycle A -> B -> C -> A with alphabets of size 2, 3 and 2.
pub fn cycle() -> CtbnSpec<f64> {
    let a = node(
        "A",
        2,
        vec![2],
        vec![q(&[&[-1.0, 1.0], &[2.0, -2.0]]), q(&[&[-3.0, 3.0], &[0.5, -0.5]])],
    );
    let b = node(
        "B",
        3,
        vec![0],
        vec![
            q(&[&[-1.0, 0.5, 0.5], &[1.0, -2.0, 1.0], &[0.0, 2.0, -2.0]]),
            q(&[&[-4.0, 3.0, 1.0], &[0.2, -0.2, 0.0], &[1.0, 1.0, -2.0]]),
        ],
    );
    let c = node(
        "C",
        2,
        vec![1],
        vec![
            q(&[&[-1.0, 1.0], &[1.0, -1.0]]),
            q(&[&[-5.0, 5.0], &[0.1, -0.1]]),
            q(&[&[-0.3, 0.3], &[3.0, -3.0]]),
        ],
    );
    CtbnSpec::new(vec![a, b, c], uniform_initial(&[2, 3, 2])).unwrap()
}
