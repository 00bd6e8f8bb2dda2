//! Run results: posterior marginals on the grid plus run metadata.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use ctbn_core::baselines::WeightDiagnostics;
use ctbn_core::ctbn::CtbnSpec;
use ctbn_core::gibbs::PosteriorEstimate;
use ctbn_core::mcmc::MoveStats;
use serde::{Deserialize, Serialize};

use crate::model::SCHEMA_VERSION;

/// Number of leading weights reported for likelihood weighting.
pub const TOP_WEIGHTS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultFile {
    pub schema_version: u32,
    pub metadata: RunMetadata,
    pub posterior: Vec<PosteriorRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub weights: Vec<WeightRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunMetadata {
    pub algorithm: String,
    pub model: String,
    pub seed: u64,
    /// Sweeps for MCMC, samples for likelihood weighting.
    pub iterations: usize,
    pub burn_in: usize,
    pub lambda_mult: f64,
    pub chains: usize,
    pub grid: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub acceptance: Option<AcceptanceSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ess: Option<f64>,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcceptanceSummary {
    pub overall: Option<f64>,
    pub moves: BTreeMap<String, MoveSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MoveSummary {
    pub proposed: u64,
    pub accepted: u64,
    pub noop: u64,
    pub flagged: u64,
    pub rate: Option<f64>,
}

impl AcceptanceSummary {
    pub fn from_stats(stats: &MoveStats) -> Self {
        let moves = stats
            .iter()
            .filter(|(_, c)| c.proposed + c.noop > 0)
            .map(|(label, c)| {
                (
                    label.name().to_string(),
                    MoveSummary {
                        proposed: c.proposed,
                        accepted: c.accepted,
                        noop: c.noop,
                        flagged: c.flagged,
                        rate: c.acceptance_rate(),
                    },
                )
            })
            .collect();
        Self {
            overall: stats.overall_acceptance(),
            moves,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PosteriorRow {
    pub node: String,
    pub t: f64,
    pub state: String,
    pub posterior_probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightRow {
    pub rank: usize,
    pub weight: f64,
    pub cumulative: f64,
}

/// Rows for the largest normalized weights.
pub fn weight_rows(diagnostics: &WeightDiagnostics, k: usize) -> Vec<WeightRow> {
    diagnostics
        .sorted
        .iter()
        .zip(&diagnostics.cumulative)
        .take(k)
        .enumerate()
        .map(|(i, (&weight, &cumulative))| WeightRow {
            rank: i + 1,
            weight,
            cumulative,
        })
        .collect()
}

/// `x` with 17 significant digits.
pub fn sig17(x: f64) -> String {
    format!("{x:.16e}")
}

impl ResultFile {
    pub fn new(spec: &CtbnSpec<f64>, estimate: &PosteriorEstimate<f64>, metadata: RunMetadata) -> Self {
        let mut posterior = Vec::new();
        for (k, &v) in estimate.nodes.iter().enumerate() {
            let node = &spec.node(v);
            for (g, &t) in estimate.grid.points().iter().enumerate() {
                for (a, &p) in estimate.probabilities[k][g].iter().enumerate() {
                    posterior.push(PosteriorRow {
                        node: node.name.clone(),
                        t,
                        state: node.states[a].clone(),
                        posterior_probability: p,
                    });
                }
            }
        }
        Self {
            schema_version: SCHEMA_VERSION,
            metadata,
            posterior,
            weights: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result documents serialize") + "\n"
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    /// The posterior rows as comma-separated values.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("node,t,state,posterior_probability\n");
        for row in &self.posterior {
            writeln!(out, "{},{},{},{}", row.node, sig17(row.t), row.state, sig17(row.posterior_probability))
                .expect("writing to a string");
        }
        out
    }
}
