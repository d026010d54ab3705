//! One-call analysis of a spec into a self-describing [`ExampleRecord`].

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dimension::{boundary_dimension, DimensionReport};
use crate::ifs::{ensure_valid, IfsSpec, SpecAnalysis};
use crate::neighbor::{build_with, BuildOutcome, Limits};
use crate::topology::{self, TopologyReport};
use crate::Error;

/// Compact, serialisable form of a [`BuildOutcome`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OutcomeSummary {
    Graph { candidates: usize, pruned: usize },
    Empty { candidates: usize, pruned: usize },
    TooComplex { candidates: usize, pruned: usize },
    OscViolation { w: Vec<usize>, v: Vec<usize> },
}

impl OutcomeSummary {
    pub fn of(outcome: &BuildOutcome) -> Self {
        match outcome {
            BuildOutcome::Graph(g) => OutcomeSummary::Graph {
                candidates: g.stats.candidates,
                pruned: g.stats.pruned,
            },
            BuildOutcome::Empty(s) => OutcomeSummary::Empty {
                candidates: s.candidates,
                pruned: s.pruned,
            },
            BuildOutcome::TooComplex(s) => OutcomeSummary::TooComplex {
                candidates: s.candidates,
                pruned: s.pruned,
            },
            BuildOutcome::OscViolation { w, v } => OutcomeSummary::OscViolation {
                w: w.clone(),
                v: v.clone(),
            },
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            OutcomeSummary::Graph { .. } => "graph",
            OutcomeSummary::Empty { .. } => "empty",
            OutcomeSummary::TooComplex { .. } => "too_complex",
            OutcomeSummary::OscViolation { .. } => "osc_violation",
        }
    }

    pub fn is_graph(&self) -> bool {
        matches!(self, OutcomeSummary::Graph { .. })
    }

    /// `(candidates, pruned)` where the outcome tracked them.
    pub fn counts(&self) -> (usize, usize) {
        match *self {
            OutcomeSummary::Graph { candidates, pruned }
            | OutcomeSummary::Empty { candidates, pruned }
            | OutcomeSummary::TooComplex { candidates, pruned } => (candidates, pruned),
            OutcomeSummary::OscViolation { .. } => (0, 0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExampleRecord {
    pub id: String,
    pub spec: IfsSpec,
    pub outcome: OutcomeSummary,
    pub topology: Option<TopologyReport>,
    pub dimension: Option<DimensionReport>,
    pub neighbor_count: Option<usize>,
    pub fli: Option<usize>,
    /// Unix seconds; set only when the record is stored.
    pub created_at: Option<u64>,
    /// Id of the record this one was mutated from.
    pub parent: Option<String>,
}

/// SHA-256 of the canonical spec JSON, lowercase hex.
pub fn spec_id(spec: &IfsSpec) -> String {
    hex::encode(Sha256::digest(spec.to_json().as_bytes()))
}

/// Validates, builds the neighbor graph and derives all reports.
pub fn analyze(spec: &IfsSpec, limits: Limits) -> Result<ExampleRecord, Error> {
    analyze_full(spec, limits).map(|(r, _)| r)
}

/// Like [`analyze`], also handing back the raw build outcome.
pub fn analyze_full(spec: &IfsSpec, limits: Limits) -> Result<(ExampleRecord, BuildOutcome), Error> {
    ensure_valid(spec)?;
    let an = SpecAnalysis::new(spec)?;
    let outcome = build_with(&an, limits);
    let record = record_from(spec, &outcome);
    Ok((record, outcome))
}

pub fn record_from(spec: &IfsSpec, outcome: &BuildOutcome) -> ExampleRecord {
    let (topology, dimension, neighbor_count, fli) = match outcome {
        BuildOutcome::Graph(g) => (
            topology::report(outcome, spec.m()),
            Some(boundary_dimension(g, spec)),
            Some(g.type_count()),
            Some(g.fli()),
        ),
        _ => (None, None, None, None),
    };
    ExampleRecord {
        id: spec_id(spec),
        spec: spec.clone(),
        outcome: OutcomeSummary::of(outcome),
        topology,
        dimension,
        neighbor_count,
        fli,
        created_at: None,
        parent: None,
    }
}

impl ExampleRecord {
    /// `types=5 fli=3 alpha=1.7227 beta=0.4307 class=UncountableCarpet`
    pub fn summary_line(&self) -> String {
        match (&self.topology, &self.dimension) {
            (Some(t), Some(d)) => format!(
                "types={} fli={} alpha={:.4} beta={:.4} class={}",
                self.neighbor_count.unwrap_or(0),
                t.fli,
                d.alpha,
                d.beta_global,
                t.classification
            ),
            _ => format!("outcome={}", self.outcome.kind()),
        }
    }

    pub fn is_connected(&self) -> bool {
        self.topology.as_ref().is_some_and(|t| t.connected)
    }
}
