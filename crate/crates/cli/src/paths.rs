//! Evidence and ground-truth documents: fully observed node paths over an
//! interval.

use ctbn_core::ctbn::{CtbnSpec, CtbnTrajectory};
use ctbn_core::gibbs::Evidence;
use ctbn_core::markov::SamplePath;
use serde::{Deserialize, Serialize};

use crate::model::{ModelError, SCHEMA_VERSION};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsFile {
    pub schema_version: u32,
    pub t_min: f64,
    pub t_max: f64,
    pub paths: Vec<PathDecl>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathDecl {
    pub node: String,
    pub initial: String,
    #[serde(default)]
    pub jumps: Vec<JumpDecl>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpDecl {
    pub t: f64,
    pub state: String,
}

fn semantic(path: impl Into<String>, message: impl Into<String>) -> ModelError {
    ModelError::Semantic {
        path: path.into(),
        message: message.into(),
    }
}

fn state_index(spec: &CtbnSpec<f64>, v: usize, label: &str, path: String) -> Result<usize, ModelError> {
    spec.node(v)
        .states
        .iter()
        .position(|s| s == label)
        .ok_or_else(|| semantic(path, format!("{label} is not a state of {}", spec.node(v).name)))
}

impl PathsFile {
    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("path documents serialize")
    }

    /// Document listing the given nodes of `traj`.
    pub fn from_trajectory(spec: &CtbnSpec<f64>, traj: &CtbnTrajectory<f64>, nodes: &[usize]) -> Self {
        let (t_min, t_max) = traj.interval();
        Self {
            schema_version: SCHEMA_VERSION,
            t_min,
            t_max,
            paths: nodes.iter().map(|&v| describe(spec, v, traj.path(v))).collect(),
        }
    }

    pub fn from_evidence(spec: &CtbnSpec<f64>, evidence: &Evidence<f64>) -> Self {
        let (t_min, t_max) = evidence.interval();
        Self {
            schema_version: SCHEMA_VERSION,
            t_min,
            t_max,
            paths: evidence
                .observed_nodes()
                .into_iter()
                .map(|v| describe(spec, v, evidence.path(v).expect("observed node")))
                .collect(),
        }
    }

    /// Decodes the listed paths; jump times must be strictly increasing and
    /// interior, and states must belong to their alphabets.
    pub fn decode(&self, spec: &CtbnSpec<f64>) -> Result<Vec<(usize, SamplePath<f64>)>, ModelError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(semantic(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            ));
        }
        let mut out = Vec::with_capacity(self.paths.len());
        for (k, decl) in self.paths.iter().enumerate() {
            let at = format!("paths[{k}]");
            let v = spec
                .node_index(&decl.node)
                .ok_or_else(|| semantic(format!("{at}.node"), format!("unknown node {}", decl.node)))?;
            let initial = state_index(spec, v, &decl.initial, format!("{at}.initial"))?;
            let mut times = Vec::with_capacity(decl.jumps.len());
            let mut states = Vec::with_capacity(decl.jumps.len());
            for (j, jump) in decl.jumps.iter().enumerate() {
                times.push(jump.t);
                states.push(state_index(spec, v, &jump.state, format!("{at}.jumps[{j}].state"))?);
            }
            let path = SamplePath::new(self.t_min, self.t_max, initial, times, states)
                .map_err(|e| semantic(format!("{at}.jumps"), e.to_string()))?;
            out.push((v, path));
        }
        Ok(out)
    }

    pub fn to_evidence(&self, spec: &CtbnSpec<f64>) -> Result<Evidence<f64>, ModelError> {
        let observed = self.decode(spec)?;
        Evidence::new(spec, self.t_min, self.t_max, observed).map_err(|e| semantic("paths", e.to_string()))
    }
}

fn describe(spec: &CtbnSpec<f64>, v: usize, path: &SamplePath<f64>) -> PathDecl {
    let labels = &spec.node(v).states;
    PathDecl {
        node: spec.node(v).name.clone(),
        initial: labels[path.initial_state()].clone(),
        jumps: path
            .jumps()
            .map(|(t, s)| JumpDecl {
                t,
                state: labels[s].clone(),
            })
            .collect(),
    }
}
