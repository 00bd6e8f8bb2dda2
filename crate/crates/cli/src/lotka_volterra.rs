use std::sync::Arc;

use ctbn_core::ctbn::{BayesNetInitial, CtbnSpec, InitialDistribution, NodeSpec};
use ctbn_core::markov::IntensityMatrix;
use ctbn_core::{Error, Result};
use serde::{Deserialize, Serialize};

/// Node index of the predator, `X`.
pub const PREDATOR: usize = 0;
/// Node index of the prey, `Y`.
pub const PREY: usize = 1;

/// Parameters of the truncated stochastic Lotka-Volterra network.
///
/// The defaults are not taken from any published run. Prey births vanish
/// above `alpha / beta = 30`, so a prey cap of 30 loses nothing when the
/// prey starts at or below it, and keeps the uniformization rate of the
/// prey from being set by unreachable states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LvParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub eta: f64,
    /// Truncation level applied to the death and predator birth rates.
    pub m: f64,
    pub predator_cap: usize,
    pub prey_cap: usize,
    pub predator0: usize,
    pub prey0: usize,
}

impl Default for LvParams {
    fn default() -> Self {
        Self {
            alpha: 30.0,
            beta: 1.0,
            gamma: 1.0,
            delta: 0.2,
            eta: 2.0,
            m: 1e4,
            predator_cap: 200,
            prey_cap: 30,
            predator0: 10,
            prey0: 20,
        }
    }
}

impl LvParams {
    pub fn validate(&self) -> Result<()> {
        let rates = [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("delta", self.delta),
            ("eta", self.eta),
        ];
        if let Some((name, v)) = rates.iter().find(|(_, v)| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidSpec(format!("{name} = {v} must be finite and nonnegative")));
        }
        if !(self.m > 0.0 && self.m.is_finite()) {
            return Err(Error::InvalidSpec(format!("m = {} must be finite and positive", self.m)));
        }
        if self.predator_cap == 0 || self.prey_cap == 0 {
            return Err(Error::InvalidSpec("state caps must be at least 1".into()));
        }
        if self.predator0 > self.predator_cap || self.prey0 > self.prey_cap {
            return Err(Error::InvalidSpec("initial state exceeds the state caps".into()));
        }
        Ok(())
    }

    /// `y (alpha - beta y) v 0`, not truncated by `m`.
    pub fn prey_birth(&self, _x: usize, y: usize) -> f64 {
        let y = y as f64;
        (y * (self.alpha - self.beta * y)).max(0.0)
    }

    /// `gamma y x ^ m`.
    pub fn prey_death(&self, x: usize, y: usize) -> f64 {
        (self.gamma * y as f64 * x as f64).min(self.m)
    }

    /// `delta x y ^ m`.
    pub fn predator_birth(&self, x: usize, y: usize) -> f64 {
        (self.delta * x as f64 * y as f64).min(self.m)
    }

    /// `eta x ^ m`.
    pub fn predator_death(&self, x: usize, _y: usize) -> f64 {
        (self.eta * x as f64).min(self.m)
    }
}

fn birth_death(size: usize, birth: impl Fn(usize) -> f64, death: impl Fn(usize) -> f64) -> Result<IntensityMatrix<f64>> {
    let cap = size - 1;
    let mut transitions = Vec::with_capacity(2 * size);
    for s in 0..size {
        if s < cap {
            transitions.push((s, s + 1, birth(s)));
        }
        if s > 0 {
            transitions.push((s, s - 1, death(s)));
        }
    }
    IntensityMatrix::from_transitions(size, transitions)
}

fn counts(cap: usize) -> Vec<String> {
    (0..=cap).map(|k| k.to_string()).collect()
}

fn point_mass(size: usize, at: usize) -> Vec<f64> {
    let mut p = vec![0.0; size];
    p[at] = 1.0;
    p
}

/// Predator `X` and prey `Y` as two mutually dependent birth-death nodes on
/// `{0, .., cap}`. Births out of the cap are removed. The initial state is
/// a point mass at `(predator0, prey0)`.
pub fn build_lotka_volterra(params: &LvParams) -> Result<CtbnSpec<f64>> {
    params.validate()?;
    let nx = params.predator_cap + 1;
    let ny = params.prey_cap + 1;
    let predator_cims = (0..ny)
        .map(|y| {
            birth_death(nx, |x| params.predator_birth(x, y), |x| params.predator_death(x, y)).map(Arc::new)
        })
        .collect::<Result<Vec<_>>>()?;
    let prey_cims = (0..nx)
        .map(|x| birth_death(ny, |y| params.prey_birth(x, y), |y| params.prey_death(x, y)).map(Arc::new))
        .collect::<Result<Vec<_>>>()?;
    let nodes = vec![
        NodeSpec {
            name: "X".into(),
            states: counts(params.predator_cap),
            parents: vec![PREY],
            cims: predator_cims,
        },
        NodeSpec {
            name: "Y".into(),
            states: counts(params.prey_cap),
            parents: vec![PREDATOR],
            cims: prey_cims,
        },
    ];
    let initial = BayesNetInitial::independent(vec![
        point_mass(nx, params.predator0),
        point_mass(ny, params.prey0),
    ])?;
    CtbnSpec::new(nodes, InitialDistribution::BayesNet(initial))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extinct_prey_is_absorbing() {
        let p = LvParams::default();
        let spec = build_lotka_volterra(&p).unwrap();
        for x in [0, 5, 200] {
            assert_eq!(spec.cim(PREY, x).total_rate(0), 0.0);
        }
    }

    #[test]
    fn prey_birth_has_no_upper_clamp() {
        let p = LvParams { m: 50.0, ..LvParams::default() };
        assert_eq!(p.prey_birth(3, 10), 200.0);
        let spec = build_lotka_volterra(&p).unwrap();
        assert_eq!(spec.cim(PREY, 3).rate(10, 11), 200.0);
        assert_eq!(p.prey_birth(3, 40), 0.0);
    }

    #[test]
    fn deaths_and_predator_births_clamp_at_m() {
        let p = LvParams::default();
        assert_eq!(p.prey_death(100, 150), 1e4);
        assert_eq!(p.prey_death(2, 3), 6.0);
        let small = LvParams { m: 30.0, ..p.clone() };
        assert_eq!(small.predator_birth(20, 10), 30.0);
        assert_eq!(small.predator_death(20, 0), 30.0);
        assert_eq!(p.predator_death(20, 0), 40.0);
    }

    #[test]
    fn caps_remove_outward_births() {
        let p = LvParams { predator_cap: 5, prey_cap: 4, predator0: 2, prey0: 1, ..LvParams::default() };
        let spec = build_lotka_volterra(&p).unwrap();
        assert_eq!(spec.alphabet_size(PREDATOR), 6);
        assert_eq!(spec.alphabet_size(PREY), 5);
        for y in 0..5 {
            let q = spec.cim(PREDATOR, y);
            assert!(q.row(5).iter().all(|&(to, _)| to < 5));
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(build_lotka_volterra(&LvParams { alpha: -1.0, ..LvParams::default() }).is_err());
        assert!(build_lotka_volterra(&LvParams { m: 0.0, ..LvParams::default() }).is_err());
        assert!(build_lotka_volterra(&LvParams { prey_cap: 0, prey0: 0, ..LvParams::default() }).is_err());
    }
}
