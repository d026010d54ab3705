//! Text exports: DOT for neighbor graphs, JSON for graphs and records.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::analysis::{spec_id, ExampleRecord};
use crate::neighbor::{BuildOutcome, NeighborGraph};
use crate::rational::format_rational;
use crate::Error;

/// DOT digraph; the synthetic root `id` carries the initial edges.
pub fn export_dot(g: &NeighborGraph) -> String {
    let mut out = dot_header();
    for v in 0..g.type_count() {
        writeln!(out, "  n{};", v + 1).unwrap();
    }
    for e in &g.initial_edges {
        writeln!(
            out,
            "  id -> n{} [label=\"{},{}\", style=dashed];",
            e.to + 1,
            e.k,
            e.j
        )
        .unwrap();
    }
    for e in &g.edges {
        writeln!(
            out,
            "  n{} -> n{} [label=\"{},{}\"];",
            e.from + 1,
            e.to + 1,
            e.k,
            e.j
        )
        .unwrap();
    }
    out.push_str("}\n");
    out
}

fn dot_header() -> String {
    "digraph neighbors {\n  id [shape=point];\n".to_string()
}

/// DOT for outcomes that have a finite graph (`Empty` yields the bare root).
pub fn export_outcome_dot(outcome: &BuildOutcome) -> Option<String> {
    match outcome {
        BuildOutcome::Graph(g) => Some(export_dot(g)),
        BuildOutcome::Empty(_) => Some(dot_header() + "}\n"),
        _ => None,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VertexJson {
    pub name: String,
    pub linear: [[String; 2]; 2],
    pub translation: [String; 2],
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeJson {
    pub from: String,
    pub to: String,
    pub label: [usize; 2],
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphJson {
    pub m: usize,
    pub type_count: usize,
    pub fli: usize,
    pub vertices: Vec<VertexJson>,
    pub edges: Vec<EdgeJson>,
    /// Edges from the root, `from` is always `"id"`.
    pub initial_edges: Vec<EdgeJson>,
}

pub fn graph_json(g: &NeighborGraph) -> GraphJson {
    let name = |v: usize| format!("n{}", v + 1);
    GraphJson {
        m: g.m,
        type_count: g.type_count(),
        fli: g.fli(),
        vertices: g
            .vertices
            .iter()
            .enumerate()
            .map(|(i, h)| VertexJson {
                name: name(i),
                linear: h.linear.rows().map(|row| row.map(|q| format_rational(&q))),
                translation: [
                    format_rational(&h.translation.x),
                    format_rational(&h.translation.y),
                ],
            })
            .collect(),
        edges: g
            .edges
            .iter()
            .map(|e| EdgeJson {
                from: name(e.from),
                to: name(e.to),
                label: [e.k, e.j],
            })
            .collect(),
        initial_edges: g
            .initial_edges
            .iter()
            .map(|e| EdgeJson {
                from: "id".into(),
                to: name(e.to),
                label: [e.k, e.j],
            })
            .collect(),
    }
}

pub fn export_record(record: &ExampleRecord) -> String {
    serde_json::to_string(record).expect("records serialise")
}

/// Parses a record, recomputes its id and checks report presence.
pub fn import_record(text: &str) -> Result<ExampleRecord, Error> {
    let record: ExampleRecord = serde_json::from_str(text)?;
    let computed = spec_id(&record.spec);
    if computed != record.id {
        return Err(Error::HashMismatch {
            stored: record.id,
            computed,
        });
    }
    let graph = record.outcome.is_graph();
    let present = [
        record.topology.is_some(),
        record.dimension.is_some(),
        record.neighbor_count.is_some(),
        record.fli.is_some(),
    ];
    if present.iter().any(|&p| p != graph) {
        return Err(Error::Schema(
            "reports must be present exactly for graph outcomes".into(),
        ));
    }
    Ok(record)
}
