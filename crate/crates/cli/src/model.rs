//! Declarative model documents.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use ctbn_core::ctbn::{BayesNetInitial, CtbnSpec, InitialDistribution, NodeSpec};
use ctbn_core::markov::IntensityMatrix;
use serde::{Deserialize, Serialize};

use crate::lotka_volterra::{build_lotka_volterra, LvParams};

pub const SCHEMA_VERSION: u32 = 1;

/// Assignment of parent names to state labels.
pub type ParentAssignment = BTreeMap<String, String>;

/// A model document.
///
/// Either `nodes` (with an optional `initial` network) or `lotka_volterra`
/// is given. Without `initial`, every node starts uniformly and
/// independently.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub nodes: Vec<NodeDecl>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<Vec<InitialDecl>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lotka_volterra: Option<LvParams>,
    /// Defaults used when evidence is simulated from this model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationDecl>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeDecl {
    pub name: String,
    pub states: Vec<String>,
    #[serde(default)]
    pub parents: Vec<String>,
    /// One dense intensity matrix per parent configuration.
    pub cims: Vec<CimDecl>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CimDecl {
    #[serde(default)]
    pub parents: ParentAssignment,
    /// Rows sum to zero; the diagonal holds minus the exit rate.
    pub rates: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialDecl {
    pub node: String,
    #[serde(default)]
    pub parents: Vec<String>,
    pub table: Vec<InitialRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialRow {
    #[serde(default)]
    pub parents: ParentAssignment,
    pub probs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationDecl {
    pub t_min: f64,
    pub t_max: f64,
    pub observed: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelError {
    /// Malformed document.
    Parse { line: usize, column: usize, message: String },
    /// Well-formed document describing an invalid model; `path` locates the
    /// offending key.
    Semantic { path: String, message: String },
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::Parse { line, column, message } => write!(f, "line {line}, column {column}: {message}"),
            ModelError::Semantic { path, message } => write!(f, "{path}: {message}"),
        }
    }
}

impl std::error::Error for ModelError {}

impl From<serde_json::Error> for ModelError {
    fn from(e: serde_json::Error) -> Self {
        ModelError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

fn semantic(path: impl Into<String>, message: impl Into<String>) -> ModelError {
    ModelError::Semantic {
        path: path.into(),
        message: message.into(),
    }
}

/// Relative tolerance on intensity row sums.
const ROW_SUM_TOLERANCE: f64 = 1e-9;

impl ModelFile {
    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model documents serialize")
    }

    pub fn to_spec(&self) -> Result<CtbnSpec<f64>, ModelError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(semantic(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            ));
        }
        match (&self.lotka_volterra, self.nodes.is_empty()) {
            (Some(params), true) => {
                if self.initial.is_some() {
                    return Err(semantic("initial", "the Lotka-Volterra model fixes its own initial state"));
                }
                build_lotka_volterra(params).map_err(|e| semantic("lotka_volterra", e.to_string()))
            }
            (Some(_), false) => Err(semantic("lotka_volterra", "cannot be combined with nodes")),
            (None, true) => Err(semantic("nodes", "model declares no nodes")),
            (None, false) => self.tabular_spec(),
        }
    }

    fn tabular_spec(&self) -> Result<CtbnSpec<f64>, ModelError> {
        let index: BTreeMap<&str, usize> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(v, n)| (n.name.as_str(), v))
            .collect();
        if index.len() != self.nodes.len() {
            return Err(semantic("nodes", "node names must be unique"));
        }
        let mut nodes = Vec::with_capacity(self.nodes.len());
        for (v, decl) in self.nodes.iter().enumerate() {
            let at = format!("nodes[{v}]");
            let parents = resolve_parents(&decl.parents, &index, v, &format!("{at}.parents"))?;
            let mut cims: Vec<Option<Arc<IntensityMatrix<f64>>>> = vec![None; self.config_count(&parents)];
            for (k, cim) in decl.cims.iter().enumerate() {
                let path = format!("{at}.cims[{k}]");
                let c = self.config_index(&parents, &cim.parents, &format!("{path}.parents"))?;
                if cims[c].is_some() {
                    return Err(semantic(&path, "duplicate parent configuration"));
                }
                cims[c] = Some(Arc::new(intensity(&cim.rates, decl.states.len(), &format!("{path}.rates"))?));
            }
            let cims = cims
                .into_iter()
                .enumerate()
                .map(|(c, q)| {
                    q.ok_or_else(|| {
                        semantic(
                            format!("{at}.cims"),
                            format!("missing parent configuration {}", self.describe(&parents, c)),
                        )
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            nodes.push(NodeSpec {
                name: decl.name.clone(),
                states: decl.states.clone(),
                parents,
                cims,
            });
        }
        let initial = self.initial_network(&index)?;
        CtbnSpec::new(nodes, InitialDistribution::BayesNet(initial)).map_err(|e| semantic("nodes", e.to_string()))
    }

    fn initial_network(&self, index: &BTreeMap<&str, usize>) -> Result<BayesNetInitial<f64>, ModelError> {
        let sizes: Vec<usize> = self.nodes.iter().map(|n| n.states.len()).collect();
        let Some(decls) = &self.initial else {
            let uniform = sizes.iter().map(|&s| vec![1.0 / s as f64; s]).collect();
            return BayesNetInitial::independent(uniform).map_err(|e| semantic("initial", e.to_string()));
        };
        let n = self.nodes.len();
        let mut parents: Vec<Option<Vec<usize>>> = vec![None; n];
        let mut tables: Vec<Vec<Vec<f64>>> = vec![Vec::new(); n];
        for (k, decl) in decls.iter().enumerate() {
            let at = format!("initial[{k}]");
            let &v = index
                .get(decl.node.as_str())
                .ok_or_else(|| semantic(format!("{at}.node"), format!("unknown node {}", decl.node)))?;
            if parents[v].is_some() {
                return Err(semantic(format!("{at}.node"), format!("node {} listed twice", decl.node)));
            }
            let pa = resolve_parents(&decl.parents, index, v, &format!("{at}.parents"))?;
            let mut rows: Vec<Option<Vec<f64>>> = vec![None; self.config_count(&pa)];
            for (r, row) in decl.table.iter().enumerate() {
                let path = format!("{at}.table[{r}]");
                let c = self.config_index(&pa, &row.parents, &format!("{path}.parents"))?;
                if rows[c].is_some() {
                    return Err(semantic(&path, "duplicate parent configuration"));
                }
                if row.probs.len() != sizes[v] {
                    return Err(semantic(
                        format!("{path}.probs"),
                        format!("{} entries, expected {}", row.probs.len(), sizes[v]),
                    ));
                }
                rows[c] = Some(row.probs.clone());
            }
            tables[v] = rows
                .into_iter()
                .enumerate()
                .map(|(c, row)| {
                    row.ok_or_else(|| {
                        semantic(
                            format!("{at}.table"),
                            format!("missing parent configuration {}", self.describe(&pa, c)),
                        )
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            parents[v] = Some(pa);
        }
        if let Some(v) = parents.iter().position(Option::is_none) {
            return Err(semantic("initial", format!("no entry for node {}", self.nodes[v].name)));
        }
        let parents = parents.into_iter().map(|p| p.unwrap_or_default()).collect();
        BayesNetInitial::new(&sizes, parents, tables).map_err(|e| semantic("initial", e.to_string()))
    }

    fn config_count(&self, parents: &[usize]) -> usize {
        parents.iter().map(|&p| self.nodes[p].states.len()).product()
    }

    fn config_index(&self, parents: &[usize], assignment: &ParentAssignment, path: &str) -> Result<usize, ModelError> {
        if assignment.len() != parents.len() {
            return Err(semantic(
                path,
                format!("assigns {} parents, expected {}", assignment.len(), parents.len()),
            ));
        }
        let mut c = 0;
        for &p in parents {
            let node = &self.nodes[p];
            let label = assignment
                .get(&node.name)
                .ok_or_else(|| semantic(path, format!("no state given for parent {}", node.name)))?;
            let s = node
                .states
                .iter()
                .position(|l| l == label)
                .ok_or_else(|| semantic(path, format!("{label} is not a state of {}", node.name)))?;
            c = c * node.states.len() + s;
        }
        Ok(c)
    }

    fn assignment(&self, parents: &[usize], mut config: usize) -> ParentAssignment {
        let mut out = ParentAssignment::new();
        for &p in parents.iter().rev() {
            let node = &self.nodes[p];
            let size = node.states.len();
            out.insert(node.name.clone(), node.states[config % size].clone());
            config /= size;
        }
        out
    }

    fn describe(&self, parents: &[usize], config: usize) -> String {
        let parts: Vec<String> = self
            .assignment(parents, config)
            .into_iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        if parts.is_empty() {
            "(no parents)".into()
        } else {
            parts.join(",")
        }
    }

    /// Tabular document describing `spec`.
    pub fn from_spec(spec: &CtbnSpec<f64>) -> Result<Self, ModelError> {
        let InitialDistribution::BayesNet(bn) = spec.initial() else {
            return Err(semantic("initial", "only Bayesian-network initial distributions can be written"));
        };
        let mut file = ModelFile {
            schema_version: SCHEMA_VERSION,
            name: None,
            nodes: spec
                .nodes()
                .iter()
                .map(|n| NodeDecl {
                    name: n.name.clone(),
                    states: n.states.clone(),
                    parents: n.parents.iter().map(|&p| spec.node(p).name.clone()).collect(),
                    cims: Vec::new(),
                })
                .collect(),
            initial: None,
            lotka_volterra: None,
            simulation: None,
        };
        for (v, node) in spec.nodes().iter().enumerate() {
            file.nodes[v].cims = node
                .cims
                .iter()
                .enumerate()
                .map(|(c, q)| CimDecl {
                    parents: file.assignment(&node.parents, c),
                    rates: q.to_dense(),
                })
                .collect();
        }
        let initial = (0..spec.node_count())
            .map(|v| InitialDecl {
                node: spec.node(v).name.clone(),
                parents: bn.parents(v).iter().map(|&p| spec.node(p).name.clone()).collect(),
                table: bn
                    .table(v)
                    .iter()
                    .enumerate()
                    .map(|(c, probs)| InitialRow {
                        parents: file.assignment(bn.parents(v), c),
                        probs: probs.clone(),
                    })
                    .collect(),
            })
            .collect();
        file.initial = Some(initial);
        Ok(file)
    }
}

fn resolve_parents(
    names: &[String],
    index: &BTreeMap<&str, usize>,
    v: usize,
    path: &str,
) -> Result<Vec<usize>, ModelError> {
    let mut parents = Vec::with_capacity(names.len());
    for name in names {
        let &p = index
            .get(name.as_str())
            .ok_or_else(|| semantic(path, format!("unknown node {name}")))?;
        if p == v {
            return Err(semantic(path, "a node cannot be its own parent"));
        }
        if parents.contains(&p) {
            return Err(semantic(path, format!("parent {name} listed twice")));
        }
        parents.push(p);
    }
    parents.sort_unstable();
    Ok(parents)
}

fn intensity(rows: &[Vec<f64>], size: usize, path: &str) -> Result<IntensityMatrix<f64>, ModelError> {
    if rows.len() != size {
        return Err(semantic(path, format!("{} rows, expected {size}", rows.len())));
    }
    for (i, row) in rows.iter().enumerate() {
        let at = format!("{path}[{i}]");
        if row.len() != size {
            return Err(semantic(&at, format!("{} entries, expected {size}", row.len())));
        }
        if row.iter().any(|r| !r.is_finite()) {
            return Err(semantic(&at, "rates must be finite"));
        }
        if let Some(j) = (0..size).find(|&j| j != i && row[j] < 0.0) {
            return Err(semantic(format!("{at}[{j}]"), format!("negative rate {}", row[j])));
        }
        let exit: f64 = (0..size).filter(|&j| j != i).map(|j| row[j]).sum();
        if (exit + row[i]).abs() > ROW_SUM_TOLERANCE * exit.max(1.0) {
            return Err(semantic(&at, format!("row sums to {}, expected 0", exit + row[i])));
        }
    }
    IntensityMatrix::from_dense(rows).map_err(|e| semantic(path, e.to_string()))
}

/// Parses a model document into a validated network.
pub fn parse_model(text: &str) -> Result<CtbnSpec<f64>, ModelError> {
    ModelFile::from_json(text)?.to_spec()
}

/// Serializes a network as a tabular model document.
pub fn serialize_model(spec: &CtbnSpec<f64>) -> Result<String, ModelError> {
    Ok(ModelFile::from_spec(spec)?.to_json())
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_NODE: &str = r#"{
        "schema_version": 1,
        "nodes": [
            {"name": "X", "states": ["1", "2"],
             "cims": [{"rates": [[-4, 4], [5, -5]]}]},
            {"name": "Y", "states": ["1", "2"], "parents": ["X"],
             "cims": [
                {"parents": {"X": "1"}, "rates": [[-100, 100], [20, -20]]},
                {"parents": {"X": "2"}, "rates": [[-20, 20], [100, -100]]}
             ]}
        ]
    }"#;

    #[test]
    fn parses_two_node_network() {
        let spec = parse_model(TWO_NODE).unwrap();
        assert_eq!(spec.node_count(), 2);
        assert_eq!(spec.parents(1), &[0]);
        assert_eq!(spec.cim(0, 0).rate(1, 0), 5.0);
        assert_eq!(spec.cim(1, 1).rate(1, 0), 100.0);
        assert_eq!(spec.log_initial(&[0, 1]), (0.25f64).ln());
    }

    #[test]
    fn rejects_unknown_keys_with_position() {
        let text = TWO_NODE.replacen("\"schema_version\": 1,", "\"schema_version\": 1, \"colour\": 3,", 1);
        match parse_model(&text) {
            Err(ModelError::Parse { line, message, .. }) => {
                assert_eq!(line, 2);
                assert!(message.contains("colour"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn names_missing_configuration() {
        let text = TWO_NODE.replace(
            r#"{"parents": {"X": "2"}, "rates": [[-20, 20], [100, -100]]}"#,
            "",
        );
        let text = text.replace("[20, -20]]},", "[20, -20]]}");
        match parse_model(&text) {
            Err(ModelError::Semantic { path, message }) => {
                assert_eq!(path, "nodes[1].cims");
                assert!(message.contains("X=2"), "{message}");
            }
            other => panic!("expected semantic error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_row_sum() {
        let text = TWO_NODE.replace("[[-4, 4], [5, -5]]", "[[-4, 4], [5, -4]]");
        match parse_model(&text) {
            Err(ModelError::Semantic { path, .. }) => assert_eq!(path, "nodes[0].cims[0].rates[1]"),
            other => panic!("expected semantic error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_cyclic_initial_network() {
        let text = TWO_NODE.trim_end().trim_end_matches('}').to_string()
            + r#",
        "initial": [
            {"node": "X", "parents": ["Y"], "table": [
                {"parents": {"Y": "1"}, "probs": [0.5, 0.5]},
                {"parents": {"Y": "2"}, "probs": [0.5, 0.5]}]},
            {"node": "Y", "parents": ["X"], "table": [
                {"parents": {"X": "1"}, "probs": [0.5, 0.5]},
                {"parents": {"X": "2"}, "probs": [0.5, 0.5]}]}
        ]}"#;
        match parse_model(&text) {
            Err(ModelError::Semantic { path, message }) => {
                assert_eq!(path, "initial");
                assert!(message.contains("cycle"), "{message}");
            }
            other => panic!("expected semantic error, got {other:?}"),
        }
    }

    #[test]
    fn round_trips_through_serialization() {
        let spec = parse_model(TWO_NODE).unwrap();
        let text = serialize_model(&spec).unwrap();
        assert_eq!(parse_model(&text).unwrap(), spec);
    }

    #[test]
    fn rejects_mixed_forms() {
        let mut file = ModelFile::from_json(TWO_NODE).unwrap();
        file.lotka_volterra = Some(LvParams::default());
        assert!(matches!(file.to_spec(), Err(ModelError::Semantic { .. })));
    }
}
