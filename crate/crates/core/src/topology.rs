//! Topological consequences of a neighbor graph: connectedness, the size of
//! pairwise intersections, and a coarse classification of the attractor.

use serde::{Deserialize, Serialize};

use crate::neighbor::{BuildOutcome, NeighborGraph};
use crate::Error;

/// Undirected graph on the maps `1..=m`, one edge per first-level intersection.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConnectednessGraph {
    pub m: usize,
    /// Sorted pairs `(k, j)` with `k < j`, 1-based.
    pub edges: Vec<(usize, usize)>,
}

impl ConnectednessGraph {
    pub fn edgeless(m: usize) -> Self {
        ConnectednessGraph { m, edges: Vec::new() }
    }

    pub fn from_graph(g: &NeighborGraph) -> Self {
        let mut edges: Vec<_> = g
            .initial_edges
            .iter()
            .map(|e| (e.k.min(e.j), e.k.max(e.j)))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        ConnectednessGraph { m: g.m, edges }
    }

    pub fn is_connected(&self) -> bool {
        let mut uf = UnionFind::new(self.m);
        for &(k, j) in &self.edges {
            uf.union(k - 1, j - 1);
        }
        self.m <= 1 || (1..self.m).all(|i| uf.find(i) == uf.find(0))
    }

    /// Simple graph with `E ≥ V − components + 1` has a cycle.
    pub fn has_cycle(&self) -> bool {
        let mut uf = UnionFind::new(self.m);
        self.edges.iter().any(|&(k, j)| !uf.union(k - 1, j - 1))
    }
}

pub fn connectedness_graph(outcome: &BuildOutcome, m: usize) -> Option<ConnectednessGraph> {
    match outcome {
        BuildOutcome::Graph(g) => Some(ConnectednessGraph::from_graph(g)),
        BuildOutcome::Empty(_) => Some(ConnectednessGraph::edgeless(m)),
        _ => None,
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    /// `false` when already joined.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IntersectionClass {
    Singleton,
    Finite,
    CountablyInfinite,
    Uncountable,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AttractorClass {
    TotallyDisconnectedOrEmpty,
    Dendrite,
    #[serde(rename = "PCF")]
    Pcf,
    /// Countably infinite intersections but none uncountable.
    CountableWeb,
    UncountableCarpet,
}

impl std::fmt::Display for AttractorClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            AttractorClass::TotallyDisconnectedOrEmpty => "TotallyDisconnectedOrEmpty",
            AttractorClass::Dendrite => "Dendrite",
            AttractorClass::Pcf => "PCF",
            AttractorClass::CountableWeb => "CountableWeb",
            AttractorClass::UncountableCarpet => "UncountableCarpet",
        };
        f.write_str(s)
    }
}

/// Strongly connected components (Tarjan). Returns the component id of every
/// vertex; ids are in reverse topological order of the condensation.
pub fn strongly_connected_components(adj: &[Vec<usize>]) -> Vec<usize> {
    struct State<'a> {
        adj: &'a [Vec<usize>],
        index: Vec<Option<usize>>,
        low: Vec<usize>,
        on_stack: Vec<bool>,
        stack: Vec<usize>,
        comp: Vec<usize>,
        next_index: usize,
        next_comp: usize,
    }

    fn visit(s: &mut State, v: usize) {
        s.index[v] = Some(s.next_index);
        s.low[v] = s.next_index;
        s.next_index += 1;
        s.stack.push(v);
        s.on_stack[v] = true;
        for i in 0..s.adj[v].len() {
            let w = s.adj[v][i];
            match s.index[w] {
                None => {
                    visit(s, w);
                    s.low[v] = s.low[v].min(s.low[w]);
                }
                Some(iw) if s.on_stack[w] => s.low[v] = s.low[v].min(iw),
                _ => {}
            }
        }
        if Some(s.low[v]) == s.index[v] {
            loop {
                let w = s.stack.pop().expect("stack holds the component");
                s.on_stack[w] = false;
                s.comp[w] = s.next_comp;
                if w == v {
                    break;
                }
            }
            s.next_comp += 1;
        }
    }

    let n = adj.len();
    let mut s = State {
        adj,
        index: vec![None; n],
        low: vec![0; n],
        on_stack: vec![false; n],
        stack: Vec::new(),
        comp: vec![usize::MAX; n],
        next_index: 0,
        next_comp: 0,
    };
    for v in 0..n {
        if s.index[v].is_none() {
            visit(&mut s, v);
        }
    }
    s.comp
}

/// Component structure shared by the topology and dimension code.
#[derive(Clone, Debug)]
pub struct Condensation {
    pub comp: Vec<usize>,
    pub size: Vec<usize>,
    /// Edges inside each component, with multiplicity.
    pub internal_edges: Vec<usize>,
    /// `reach[c]` lists every component reachable from `c`, itself included.
    pub reach: Vec<Vec<bool>>,
}

impl Condensation {
    pub fn new(adj: &[Vec<usize>]) -> Self {
        let comp = strongly_connected_components(adj);
        let nc = comp.iter().map(|&c| c + 1).max().unwrap_or(0);
        let mut size = vec![0; nc];
        let mut internal_edges = vec![0; nc];
        let mut cadj = vec![Vec::new(); nc];
        for (v, succ) in adj.iter().enumerate() {
            size[comp[v]] += 1;
            for &w in succ {
                if comp[v] == comp[w] {
                    internal_edges[comp[v]] += 1;
                } else {
                    cadj[comp[v]].push(comp[w]);
                }
            }
        }
        // ids are reverse-topological, so successors have smaller ids
        let mut reach = vec![vec![false; nc]; nc];
        for c in 0..nc {
            reach[c][c] = true;
            for &d in &cadj[c] {
                debug_assert!(d < c);
                for e in 0..nc {
                    if reach[d][e] {
                        reach[c][e] = true;
                    }
                }
            }
        }
        Condensation {
            comp,
            size,
            internal_edges,
            reach,
        }
    }

    pub fn components(&self) -> usize {
        self.size.len()
    }

    pub fn is_cyclic(&self, c: usize) -> bool {
        self.internal_edges[c] > 0
    }

    /// More than one cycle inside the component.
    pub fn is_rich(&self, c: usize) -> bool {
        self.internal_edges[c] > self.size[c]
    }

    pub fn reachable_components(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        let c = self.comp[v];
        (0..self.components()).filter(move |&d| self.reach[c][d])
    }
}

pub fn classify_intersection(g: &NeighborGraph, v: usize) -> Result<IntersectionClass, Error> {
    if v >= g.type_count() {
        return Err(Error::UnknownVertex(v + 1));
    }
    let adj = g.adjacency();
    let cond = Condensation::new(&adj);
    Ok(classify_with(&adj, &cond, v))
}

fn classify_with(adj: &[Vec<usize>], cond: &Condensation, v: usize) -> IntersectionClass {
    let reachable: Vec<usize> = cond.reachable_components(v).collect();
    if reachable.iter().any(|&c| cond.is_rich(c)) {
        return IntersectionClass::Uncountable;
    }
    let reached_vertices = (0..adj.len()).filter(|&w| cond.reach[cond.comp[v]][cond.comp[w]]);
    if reached_vertices.clone().all(|w| adj[w].len() == 1) {
        return IntersectionClass::Singleton;
    }
    let cyclic: Vec<usize> = reachable.iter().copied().filter(|&c| cond.is_cyclic(c)).collect();
    let linked = cyclic
        .iter()
        .any(|&c| cyclic.iter().any(|&d| c != d && cond.reach[c][d]));
    if linked {
        IntersectionClass::CountablyInfinite
    } else {
        IntersectionClass::Finite
    }
}

pub fn classify_all(g: &NeighborGraph) -> Vec<IntersectionClass> {
    let adj = g.adjacency();
    let cond = Condensation::new(&adj);
    (0..g.type_count()).map(|v| classify_with(&adj, &cond, v)).collect()
}

/// A closed Jordan curve exists when `G_c` has a cycle or some pair of
/// neighboring pieces meets in more than one point.
pub fn has_jordan_curve(g: &NeighborGraph) -> Result<bool, Error> {
    let gc = ConnectednessGraph::from_graph(g);
    if !gc.is_connected() {
        return Err(Error::Disconnected);
    }
    Ok(gc.has_cycle()
        || classify_all(g)
            .iter()
            .any(|c| *c != IntersectionClass::Singleton))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyReport {
    pub connected: bool,
    /// Absent for disconnected attractors.
    pub has_jordan_curve: Option<bool>,
    pub per_vertex_class: Vec<IntersectionClass>,
    pub fli: usize,
    pub classification: AttractorClass,
    /// Edges of the connectedness graph, 1-based.
    pub connectedness_edges: Vec<(usize, usize)>,
}

pub fn attractor_class(
    connected: bool,
    has_jordan_curve: bool,
    classes: &[IntersectionClass],
) -> AttractorClass {
    use IntersectionClass::*;
    if !connected {
        AttractorClass::TotallyDisconnectedOrEmpty
    } else if classes.contains(&Uncountable) {
        AttractorClass::UncountableCarpet
    } else if classes.contains(&CountablyInfinite) {
        AttractorClass::CountableWeb
    } else if !has_jordan_curve && classes.iter().all(|c| *c == Singleton) {
        AttractorClass::Dendrite
    } else {
        AttractorClass::Pcf
    }
}

/// Report for `Graph` and `Empty` outcomes; `None` otherwise.
pub fn report(outcome: &BuildOutcome, m: usize) -> Option<TopologyReport> {
    match outcome {
        BuildOutcome::Graph(g) => {
            let gc = ConnectednessGraph::from_graph(g);
            let connected = gc.is_connected();
            let classes = classify_all(g);
            let jordan = connected.then(|| {
                gc.has_cycle() || classes.iter().any(|c| *c != IntersectionClass::Singleton)
            });
            Some(TopologyReport {
                connected,
                has_jordan_curve: jordan,
                classification: attractor_class(connected, jordan.unwrap_or(false), &classes),
                per_vertex_class: classes,
                fli: g.fli(),
                connectedness_edges: gc.edges,
            })
        }
        BuildOutcome::Empty(_) => {
            let connected = m <= 1;
            Some(TopologyReport {
                connected,
                has_jordan_curve: connected.then_some(false),
                per_vertex_class: Vec::new(),
                fli: 0,
                classification: attractor_class(connected, false, &[]),
                connectedness_edges: Vec::new(),
            })
        }
        _ => None,
    }
}
