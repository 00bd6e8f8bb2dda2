#![allow(dead_code)]

use std::sync::Arc;

use ctbn_core::ctbn::{BayesNetInitial, CtbnSpec, InitialDistribution, NodeSpec};
use ctbn_core::markov::IntensityMatrix;

pub fn q(rows: &[&[f64]]) -> Arc<IntensityMatrix<f64>> {
    let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
    Arc::new(IntensityMatrix::from_dense(&rows).unwrap())
}

fn names(n: usize) -> Vec<String> {
    (1..=n).map(|k| k.to_string()).collect()
}

/// X -> Y with two states each and independent uniform initial laws.
pub fn two_node(qx: &[&[f64]], qy1: &[&[f64]], qy2: &[&[f64]]) -> CtbnSpec<f64> {
    let x = NodeSpec {
        name: "X".into(),
        states: names(2),
        parents: vec![],
        cims: vec![q(qx)],
    };
    let y = NodeSpec {
        name: "Y".into(),
        states: names(2),
        parents: vec![0],
        cims: vec![q(qy1), q(qy2)],
    };
    let initial = BayesNetInitial::independent(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
    CtbnSpec::new(vec![x, y], InitialDistribution::BayesNet(initial)).unwrap()
}

pub fn example1() -> CtbnSpec<f64> {
    two_node(
        &[&[-4.0, 4.0], &[5.0, -5.0]],
        &[&[-100.0, 100.0], &[20.0, -20.0]],
        &[&[-20.0, 20.0], &[100.0, -100.0]],
    )
}

pub fn example2() -> CtbnSpec<f64> {
    two_node(
        &[&[-4.0, 4.0], &[5.0, -5.0]],
        &[&[-100.0, 100.0], &[100.0, -100.0]],
        &[&[-2.0, 2.0], &[2.0, -2.0]],
    )
}

/// Random network with 2 to 4 nodes, alphabets of 2 or 3 states, arbitrary
/// (possibly cyclic) parent sets, sparse rates and a random initial network.
pub fn random_spec(seed: u64) -> CtbnSpec<f64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=4);
    let sizes: Vec<usize> = (0..n).map(|_| rng.random_range(2..=3)).collect();
    let mut nodes = Vec::new();
    for v in 0..n {
        let parents: Vec<usize> = (0..n).filter(|&u| u != v && rng.random_bool(0.4)).collect();
        let configs: usize = parents.iter().map(|&u| sizes[u]).product();
        let cims = (0..configs)
            .map(|_| {
                let rows: Vec<Vec<f64>> = (0..sizes[v])
                    .map(|a| {
                        let mut row: Vec<f64> = (0..sizes[v])
                            .map(|b| if b != a && rng.random_bool(0.8) { rng.random_range(0.1..5.0) } else { 0.0 })
                            .collect();
                        row[a] = -row.iter().sum::<f64>();
                        row
                    })
                    .collect();
                Arc::new(IntensityMatrix::from_dense(&rows).unwrap())
            })
            .collect();
        nodes.push(NodeSpec {
            name: format!("N{v}"),
            states: names(sizes[v]),
            parents,
            cims,
        });
    }
    let mut dist = |k: usize| {
        let w: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
        let s: f64 = w.iter().sum();
        w.into_iter().map(|x| x / s).collect::<Vec<f64>>()
    };
    // Initial network: a chain 0 -> 1 -> ... over the nodes.
    let parents: Vec<Vec<usize>> = (0..n).map(|v| if v == 0 { vec![] } else { vec![v - 1] }).collect();
    let tables = (0..n)
        .map(|v| {
            let configs = if v == 0 { 1 } else { sizes[v - 1] };
            (0..configs).map(|_| dist(sizes[v])).collect()
        })
        .collect();
    let initial = BayesNetInitial::new(&sizes, parents, tables).unwrap();
    CtbnSpec::new(nodes, InitialDistribution::BayesNet(initial)).unwrap()
}
