//! Neighbor graphs: the automaton of neighbor maps `h = f_w⁻¹ f_v`.
//!
//! Construction is a breadth-first expansion from the root maps `f_k⁻¹ f_j`
//! (`k ≠ j`). Successors are `f_k⁻¹ h f_j`. A candidate whose displacement of
//! the centroid exceeds the pruning radius is dropped. Once the expansion
//! closes, vertices without surviving successors are peeled off until every
//! vertex lies on a path to a cycle.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::field::gram_norm_sq;
use crate::ifs::{IfsSpec, SpecAnalysis};
use crate::{Affine2, AffineF, AffineQ, Error, ExactScalar, Mat2, Mat2F, Rational, SmallRational, Vec2, Vec2F};

pub const DEFAULT_MAX_TYPES: usize = 100;
pub const DEFAULT_MAX_CANDIDATES: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Limits {
    pub max_types: usize,
    pub max_candidates: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_types: DEFAULT_MAX_TYPES,
            max_candidates: DEFAULT_MAX_CANDIDATES,
        }
    }
}

/// The six reduced rational entries of an isometry, in fixed order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NeighborKey(pub [Rational; 6]);

pub fn canonical_key(h: &AffineQ) -> NeighborKey {
    let l = &h.linear;
    let t = &h.translation;
    NeighborKey([
        l.a.clone(),
        l.b.clone(),
        l.c.clone(),
        l.d.clone(),
        t.x.clone(),
        t.y.clone(),
    ])
}

/// All `m²` successors `(k, j, f_k⁻¹ h f_j)`, labels 1-based, in lexicographic order.
pub fn successors(h: &AffineQ, an: &SpecAnalysis) -> Vec<(usize, usize, AffineQ)> {
    let m = an.m();
    let mut out = Vec::with_capacity(m * m);
    for k in 0..m {
        let left = an.inverses[k].compose(h);
        for j in 0..m {
            out.push((k + 1, j + 1, left.compose(&an.maps[j])));
        }
    }
    out
}

/// `true` certifies `h(A) ∩ A = ∅`.
pub fn is_certainly_far(h: &AffineQ, an: &SpecAnalysis) -> bool {
    let moved = &h.apply(&an.centroid) - &an.centroid;
    gram_norm_sq(&an.field, &moved) > an.radius_sq
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    /// 0-based vertex indices.
    pub from: usize,
    pub to: usize,
    /// 1-based map indices.
    pub k: usize,
    pub j: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InitialEdge {
    pub to: usize,
    pub k: usize,
    pub j: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildStats {
    /// Distinct unpruned maps explored.
    pub candidates: usize,
    /// Compositions dropped by the ball test.
    pub pruned: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NeighborGraph {
    pub m: usize,
    /// Vertex `i` is named `n{i+1}`; order is discovery order.
    pub vertices: Vec<AffineQ>,
    pub edges: Vec<Edge>,
    pub initial_edges: Vec<InitialEdge>,
    pub stats: BuildStats,
}

impl NeighborGraph {
    pub fn type_count(&self) -> usize {
        self.vertices.len()
    }

    /// Number of first-level intersections: initial labels with `k < j`.
    pub fn fli(&self) -> usize {
        self.initial_edges.iter().filter(|e| e.k < e.j).count()
    }

    pub fn out_edges(&self, v: usize) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| e.from == v)
    }

    /// Adjacency as successor lists, with multiplicity.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for e in &self.edges {
            adj[e.from].push(e.to);
        }
        adj
    }

    pub fn index_of(&self, h: &AffineQ) -> Option<usize> {
        self.vertices.iter().position(|v| v == h)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BuildOutcome {
    Graph(NeighborGraph),
    /// No root map survives: the first-level pieces are pairwise disjoint.
    Empty(BuildStats),
    TooComplex(BuildStats),
    /// `f_w = f_v` for distinct words; words are 1-based.
    OscViolation { w: Vec<usize>, v: Vec<usize> },
}

impl BuildOutcome {
    pub fn graph(&self) -> Option<&NeighborGraph> {
        match self {
            BuildOutcome::Graph(g) => Some(g),
            _ => None,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            BuildOutcome::Graph(_) => "graph",
            BuildOutcome::Empty(_) => "empty",
            BuildOutcome::TooComplex(_) => "too_complex",
            BuildOutcome::OscViolation { .. } => "osc_violation",
        }
    }
}

/// The spec data converted into the scalar type a build runs over.
struct Context<T> {
    maps: Vec<Affine2<T>>,
    inverses: Vec<Affine2<T>>,
    centroid: Vec2<T>,
    /// `f_j(x̃)`
    images: Vec<Vec2<T>>,
    gram: Mat2<T>,
    radius_sq: T,
    approx: Approx,
}

/// Floating-point shadow of the ball test. It only answers when the margin
/// dwarfs rounding error; everything else goes to the exact comparison.
struct Approx {
    inverses: Vec<AffineF>,
    images: Vec<Vec2F>,
    centroid: Vec2F,
    gram: Mat2F,
    radius_sq: f64,
}

const APPROX_SLACK: f64 = 1e-6;

impl Approx {
    fn far(&self, k: usize, hf: &Vec2F) -> Option<bool> {
        let p = self.inverses[k].apply(hf);
        let d = &p - &self.centroid;
        let dist = self.gram.quadratic_form(&d);
        let scale = 1.0 + self.radius_sq + p.dot(&p) + self.centroid.dot(&self.centroid);
        if !dist.is_finite() || !scale.is_finite() {
            None
        } else if dist > self.radius_sq + APPROX_SLACK * scale {
            Some(true)
        } else if dist < self.radius_sq - APPROX_SLACK * scale {
            Some(false)
        } else {
            None
        }
    }
}

fn convert<T: ExactScalar>(h: &AffineQ) -> Option<Affine2<T>> {
    let c = |q: &Rational| T::from_rational(q);
    let (l, t) = (&h.linear, &h.translation);
    Some(Affine2::new(
        Mat2::new(c(&l.a)?, c(&l.b)?, c(&l.c)?, c(&l.d)?),
        Vec2::new(c(&t.x)?, c(&t.y)?),
    ))
}

fn to_exact<T: ExactScalar>(h: &Affine2<T>) -> AffineQ {
    h.map(|v| v.to_rational())
}

fn entries<T>(h: &Affine2<T>) -> [&T; 6] {
    let (l, t) = (&h.linear, &h.translation);
    [&l.a, &l.b, &l.c, &l.d, &t.x, &t.y]
}

impl<T: ExactScalar> Context<T> {
    fn new(an: &SpecAnalysis) -> Option<Self> {
        let g = &an.field.gram;
        let c = |q: &Rational| T::from_rational(q);
        let images = an.maps.iter().map(|f| f.apply(&an.centroid));
        Some(Context {
            maps: an.maps.iter().map(convert).collect::<Option<_>>()?,
            inverses: an.inverses.iter().map(convert).collect::<Option<_>>()?,
            centroid: Vec2::new(c(&an.centroid.x)?, c(&an.centroid.y)?),
            images: images
                .map(|p| Some(Vec2::new(c(&p.x)?, c(&p.y)?)))
                .collect::<Option<_>>()?,
            gram: Mat2::new(c(&g.a)?, c(&g.b)?, c(&g.c)?, c(&g.d)?),
            radius_sq: c(&an.radius_sq)?,
            approx: Approx {
                inverses: an.inverses.iter().map(|f| f.to_f64()).collect(),
                images: an.maps.iter().map(|f| f.apply(&an.centroid).to_f64()).collect(),
                centroid: an.centroid.to_f64(),
                gram: g.to_f64(),
                radius_sq: crate::rational::to_f64(&an.radius_sq),
            },
        })
    }

    fn compose3(&self, k: usize, h: &Affine2<T>, j: usize) -> Option<Affine2<T>> {
        let out = self.inverses[k].checked_compose(h)?.checked_compose(&self.maps[j])?;
        entries(&out).iter().all(|v| v.in_range()).then_some(out)
    }

    fn far(&self, h: &Affine2<T>) -> Option<bool> {
        self.far_point(&h.checked_apply(&self.centroid)?)
    }

    /// Ball test on `h(x̃)` directly.
    fn far_point(&self, hx: &Vec2<T>) -> Option<bool> {
        let moved = hx.checked_sub(&self.centroid)?;
        Some(self.gram.checked_quadratic_form(&moved)? > self.radius_sq)
    }
}

struct Node<T> {
    map: Affine2<T>,
    // None for roots
    parent: Option<usize>,
    k: usize,
    j: usize,
}

fn witness<T>(nodes: &[Node<T>], mut at: Option<usize>, k: usize, j: usize) -> (Vec<usize>, Vec<usize>) {
    let mut w = vec![k];
    let mut v = vec![j];
    while let Some(i) = at {
        w.push(nodes[i].k);
        v.push(nodes[i].j);
        at = nodes[i].parent;
    }
    w.reverse();
    v.reverse();
    (w, v)
}

pub fn build(spec: &IfsSpec, limits: Limits) -> Result<BuildOutcome, Error> {
    crate::ifs::ensure_valid(spec)?;
    let an = SpecAnalysis::new(spec)?;
    Ok(build_with(&an, limits))
}

/// Runs over 128-bit rationals and repeats over big rationals only if
/// something overflows. Both paths are exact, so the result is the same.
pub fn build_with(an: &SpecAnalysis, limits: Limits) -> BuildOutcome {
    Context::<SmallRational>::new(an)
        .and_then(|ctx| build_in(&ctx, limits))
        .unwrap_or_else(|| build_exact(an, limits))
}

/// Big-rational build, no fast path.
pub fn build_exact(an: &SpecAnalysis, limits: Limits) -> BuildOutcome {
    let ctx = Context::<Rational>::new(an).expect("big rationals always convert");
    build_in(&ctx, limits).expect("big rationals never overflow")
}

enum Admit {
    Identity(Vec<usize>, Vec<usize>),
    Pruned,
    Vertex(usize),
}

/// `None` on arithmetic overflow.
fn build_in<T: ExactScalar>(ctx: &Context<T>, limits: Limits) -> Option<BuildOutcome> {
    let m = ctx.maps.len();
    let mut stats = BuildStats::default();
    let mut nodes: Vec<Node<T>> = Vec::new();
    let mut index: HashMap<[T; 6], usize> = HashMap::new();
    let mut queue = VecDeque::new();
    let mut roots: Vec<InitialEdge> = Vec::new();

    let mut admit = |h: Affine2<T>,
                     parent: Option<usize>,
                     k: usize,
                     j: usize,
                     nodes: &mut Vec<Node<T>>,
                     queue: &mut VecDeque<usize>,
                     stats: &mut BuildStats|
     -> Option<Admit> {
        if h.is_identity() {
            let (w, v) = witness(nodes, parent, k, j);
            return Some(Admit::Identity(w, v));
        }
        if ctx.far(&h)? {
            stats.pruned += 1;
            return Some(Admit::Pruned);
        }
        let key = entries(&h).map(|v| v.clone());
        if let Some(&i) = index.get(&key) {
            return Some(Admit::Vertex(i));
        }
        let i = nodes.len();
        nodes.push(Node { map: h, parent, k, j });
        index.insert(key, i);
        queue.push_back(i);
        stats.candidates += 1;
        Some(Admit::Vertex(i))
    };

    for k in 0..m {
        for j in 0..m {
            if k == j {
                continue;
            }
            let h = ctx.inverses[k].checked_compose(&ctx.maps[j])?;
            match admit(h, None, k + 1, j + 1, &mut nodes, &mut queue, &mut stats)? {
                Admit::Identity(w, v) => return Some(BuildOutcome::OscViolation { w, v }),
                Admit::Vertex(to) => roots.push(InitialEdge { to, k: k + 1, j: j + 1 }),
                Admit::Pruned => {}
            }
        }
    }

    let mut raw_edges: Vec<Edge> = Vec::new();
    while let Some(i) = queue.pop_front() {
        if stats.candidates > limits.max_candidates {
            return Some(BuildOutcome::TooComplex(stats));
        }
        let h = nodes[i].map.clone();
        let h_approx = h.map(|v| v.to_f64().unwrap_or(f64::NAN));
        // h(f_j(x̃)), so the ball test needs no composition
        let hf_approx: Vec<Vec2F> = ctx.approx.images.iter().map(|p| h_approx.apply(p)).collect();
        let mut hf: Vec<Option<Vec2<T>>> = vec![None; m];
        for k in 0..m {
            for j in 0..m {
                let far = match ctx.approx.far(k, &hf_approx[j]) {
                    Some(far) => far,
                    None => {
                        if hf[j].is_none() {
                            hf[j] = Some(h.checked_apply(&ctx.images[j])?);
                        }
                        let p = ctx.inverses[k].checked_apply(hf[j].as_ref().unwrap())?;
                        ctx.far_point(&p)?
                    }
                };
                if far {
                    stats.pruned += 1;
                    continue;
                }
                let next = ctx.compose3(k, &h, j)?;
                match admit(next, Some(i), k + 1, j + 1, &mut nodes, &mut queue, &mut stats)? {
                    Admit::Identity(w, v) => return Some(BuildOutcome::OscViolation { w, v }),
                    Admit::Vertex(to) => raw_edges.push(Edge {
                        from: i,
                        to,
                        k: k + 1,
                        j: j + 1,
                    }),
                    Admit::Pruned => {}
                }
            }
        }
    }
    if stats.candidates > limits.max_candidates {
        return Some(BuildOutcome::TooComplex(stats));
    }

    // peel vertices with no surviving successor
    let n = nodes.len();
    let mut out_deg = vec![0usize; n];
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    for e in &raw_edges {
        out_deg[e.from] += 1;
        preds[e.to].push(e.from);
    }
    let mut alive = vec![true; n];
    let mut dead: Vec<usize> = (0..n).filter(|&i| out_deg[i] == 0).collect();
    while let Some(i) = dead.pop() {
        if !alive[i] {
            continue;
        }
        alive[i] = false;
        for &p in &preds[i] {
            out_deg[p] -= 1;
            if out_deg[p] == 0 && alive[p] {
                dead.push(p);
            }
        }
    }

    let mut renumber = vec![usize::MAX; n];
    let mut vertices = Vec::new();
    for i in 0..n {
        if alive[i] {
            renumber[i] = vertices.len();
            vertices.push(to_exact(&nodes[i].map));
        }
    }
    if vertices.len() > limits.max_types {
        return Some(BuildOutcome::TooComplex(stats));
    }
    let initial_edges: Vec<InitialEdge> = roots
        .into_iter()
        .filter(|e| alive[e.to])
        .map(|e| InitialEdge { to: renumber[e.to], ..e })
        .collect();
    if initial_edges.is_empty() {
        return Some(BuildOutcome::Empty(stats));
    }
    let edges = raw_edges
        .into_iter()
        .filter(|e| alive[e.from] && alive[e.to])
        .map(|e| Edge {
            from: renumber[e.from],
            to: renumber[e.to],
            ..e
        })
        .collect();
    Some(BuildOutcome::Graph(NeighborGraph {
        m,
        vertices,
        edges,
        initial_edges,
        stats,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::fixtures::*;
    use crate::ifs::{MapSpec, SymmetryDescriptor};
    use crate::rational::{int, ratio};
    use crate::{Mat2Q, Vec2, Vec2Q};

    fn graph(spec: &IfsSpec) -> NeighborGraph {
        match build(spec, Limits::default()).unwrap() {
            BuildOutcome::Graph(g) => g,
            other => panic!("expected a graph, got {}", other.kind()),
        }
    }

    fn iso(linear: Mat2Q, tx: Rational, ty: Rational) -> AffineQ {
        AffineQ::new(linear, Vec2::new(tx, ty))
    }

    fn neg() -> Mat2Q {
        Mat2Q::identity().scale(&int(-1))
    }

    /// n₁ … n₅ written out by hand in companion coordinates (a = 0).
    fn carpet_types() -> Vec<AffineQ> {
        // s = [[4, −3], [3, 4]]/5
        let s = Mat2Q::new(ratio(4, 5), ratio(-3, 5), ratio(3, 5), ratio(4, 5));
        let s_inv = s.inverse().unwrap();
        vec![
            // −s⁻¹x + e₂
            iso(s_inv.scale(&int(-1)), int(0), int(1)),
            // −x − e₂
            iso(neg(), int(0), int(-1)),
            // s(−x + e₂)
            iso(s.scale(&int(-1)), s.b.clone(), s.d.clone()),
            // −x + e₁
            iso(neg(), int(1), int(0)),
            // −x − e₁
            iso(neg(), int(-1), int(0)),
        ]
    }

    #[test]
    fn carpet_graph_matches_hand_computation() {
        let g = graph(&pythagorean_carpet());
        assert_eq!(g.vertices, carpet_types());
        assert_eq!(g.type_count(), 5);
        assert_eq!(g.fli(), 3);

        let mut init: Vec<_> = g.initial_edges.iter().map(|e| (e.k, e.j, e.to + 1)).collect();
        init.sort();
        assert_eq!(
            init,
            vec![(1, 3, 1), (2, 3, 2), (3, 1, 3), (3, 2, 2), (3, 4, 4), (4, 3, 4)]
        );

        let mut edges: Vec<_> = g
            .edges
            .iter()
            .map(|e| (e.from + 1, e.to + 1, e.k, e.j))
            .collect();
        edges.sort();
        assert_eq!(
            edges,
            vec![
                (1, 2, 4, 1),
                (2, 4, 2, 2),
                (3, 2, 1, 4),
                (4, 5, 2, 4),
                (4, 5, 4, 2),
                (5, 4, 1, 1),
            ]
        );
    }

    #[test]
    fn carpet_successor_edge() {
        let spec = pythagorean_carpet();
        let an = SpecAnalysis::new(&spec).unwrap();
        let types = carpet_types();
        let succ = successors(&types[0], &an);
        let (_, _, h) = succ.iter().find(|(k, j, _)| (*k, *j) == (4, 1)).unwrap();
        assert_eq!(h, &types[1]);
        // f₁⁻¹ n₃ f₄ = n₂ as well
        let (_, _, h) = successors(&types[2], &an)
            .into_iter()
            .find(|(k, j, _)| (*k, *j) == (1, 4))
            .unwrap();
        assert_eq!(h, types[1]);
    }

    #[test]
    fn successors_of_translation() {
        // all maps x ↦ (x + t_k)/2: f_k⁻¹ (x + w) f_j = x + 2w + t_j − t_k
        let spec = sierpinski_triangle();
        let an = SpecAnalysis::new(&spec).unwrap();
        let w = Vec2::new(ratio(1, 3), int(-2));
        let h = AffineQ::new(Mat2Q::identity(), w.clone());
        for (k, j, next) in successors(&h, &an) {
            let tk = &spec.maps[k - 1].t;
            let tj = &spec.maps[j - 1].t;
            let expect = Vec2::new(
                int(2) * &w.x + int(tj.x - tk.x),
                int(2) * &w.y + int(tj.y - tk.y),
            );
            assert!(next.linear.is_identity());
            assert_eq!(next.translation, expect);
        }
    }

    #[test]
    fn successors_commute_with_inversion() {
        let spec = pythagorean_carpet();
        let an = SpecAnalysis::new(&spec).unwrap();
        let h = carpet_types()[0].clone();
        let hi = h.inverse().unwrap();
        let fwd = successors(&h, &an);
        let back = successors(&hi, &an);
        for (k, j, s) in &fwd {
            let (_, _, t) = back.iter().find(|(k2, j2, _)| (k2, j2) == (j, k)).unwrap();
            assert_eq!(&s.inverse().unwrap(), t);
        }
    }

    #[test]
    fn far_test() {
        let spec = pythagorean_carpet();
        let an = SpecAnalysis::new(&spec).unwrap();
        assert!(!is_certainly_far(&AffineQ::identity(), &an));
        let shove = AffineQ::new(Mat2Q::identity(), Vec2::new(int(1_000_000), int(0)));
        assert!(is_certainly_far(&shove, &an));
        // just inside and just outside √T along e₁ (Gram length of e₁ is 1 for a = 0)
        let t = crate::rational::sqrt_lower_bound(&an.radius_sq, &ratio(1, 1000));
        let near = AffineQ::new(Mat2Q::identity(), Vec2::new(t.clone(), int(0)));
        assert!(!is_certainly_far(&near, &an));
        let far = AffineQ::new(Mat2Q::identity(), Vec2::new(t + ratio(1, 100), int(0)));
        assert!(is_certainly_far(&far, &an));
    }

    #[test]
    fn keys() {
        let types = carpet_types();
        let h = &types[3];
        assert_eq!(canonical_key(h), canonical_key(&h.compose(&AffineQ::identity())));
        assert_ne!(canonical_key(&types[3]), canonical_key(&types[4]));
        // the same map via two different words
        let spec = pythagorean_carpet();
        let an = SpecAnalysis::new(&spec).unwrap();
        let a = an.inverses[1].compose(&types[3]).compose(&an.maps[3]);
        let b = an.inverses[3].compose(&types[3]).compose(&an.maps[1]);
        assert_eq!(canonical_key(&a), canonical_key(&b));
        assert_eq!(a, types[4]);
    }

    #[test]
    fn classical_counts() {
        assert_eq!(graph(&sierpinski_triangle()).type_count(), 6);
        assert_eq!(graph(&sierpinski_carpet()).type_count(), 8);
        assert_eq!(graph(&full_square(2)).type_count(), 8);
        assert_eq!(graph(&full_square(3)).type_count(), 8);
        for v in &graph(&sierpinski_carpet()).vertices {
            assert!(v.linear.is_identity());
        }
        assert_eq!(graph(&interval()).type_count(), 2);
    }

    #[test]
    fn cantor_pairs_are_empty() {
        for gap in [3, 5] {
            let out = build(&cantor_pair(gap), Limits::default()).unwrap();
            assert!(matches!(out, BuildOutcome::Empty(_)), "gap {gap}: {}", out.kind());
        }
    }

    #[test]
    fn duplicate_maps_violate_osc() {
        let mut spec = sierpinski_triangle();
        spec.maps[2] = spec.maps[0].clone();
        match build(&spec, Limits::default()).unwrap() {
            BuildOutcome::OscViolation { w, v } => {
                assert_eq!((w, v), (vec![1], vec![3]));
            }
            other => panic!("{}", other.kind()),
        }
    }

    #[test]
    fn deep_overlap_violates_osc() {
        // M = 4, t ∈ {0, 4, 1}: f₁f₂(x) = x/16 + 1/4 = f₃f₁(x)
        let field = crate::field::make_field(int(0)).unwrap();
        let id = SymmetryDescriptor::identity();
        let spec = IfsSpec::new(
            field,
            int(0),
            int(4),
            vec![
                MapSpec::new(id.clone(), 0, 0),
                MapSpec::new(id.clone(), 4, 0),
                MapSpec::new(id, 1, 0),
            ],
        );
        match build(&spec, Limits::default()).unwrap() {
            BuildOutcome::OscViolation { w, v } => {
                let an = SpecAnalysis::new(&spec).unwrap();
                let compose = |word: &[usize]| {
                    word.iter()
                        .fold(AffineQ::identity(), |acc, &k| acc.compose(&an.maps[k - 1]))
                };
                assert_ne!(w, v);
                assert_eq!(compose(&w), compose(&v));
            }
            other => panic!("{}", other.kind()),
        }
    }

    #[test]
    fn candidate_cap() {
        let out = build(
            &pythagorean_carpet(),
            Limits {
                max_types: 100,
                max_candidates: 3,
            },
        )
        .unwrap();
        assert!(matches!(out, BuildOutcome::TooComplex(_)));
        let out = build(
            &pythagorean_carpet(),
            Limits {
                max_types: 4,
                max_candidates: 1000,
            },
        )
        .unwrap();
        assert!(matches!(out, BuildOutcome::TooComplex(_)));
    }

    #[test]
    fn invalid_spec_is_an_error() {
        let mut spec = interval();
        spec.c = int(1);
        assert!(matches!(build(&spec, Limits::default()), Err(Error::Invalid(_))));
    }

    pub(crate) fn assert_inversion_closed(g: &NeighborGraph) {
        for (i, h) in g.vertices.iter().enumerate() {
            let inv = h.inverse().unwrap();
            let at = g.index_of(&inv).expect("inverse is a vertex");
            for e in g.initial_edges.iter().filter(|e| e.to == i) {
                assert!(g
                    .initial_edges
                    .iter()
                    .any(|f| f.to == at && (f.k, f.j) == (e.j, e.k)));
            }
        }
    }

    #[test]
    fn graphs_are_inversion_closed_and_every_vertex_continues() {
        for (name, spec) in all() {
            let g = graph(&spec);
            assert_inversion_closed(&g);
            for v in 0..g.type_count() {
                assert!(g.out_edges(v).next().is_some(), "{name}: n{} is a dead end", v + 1);
            }
        }
    }

    #[test]
    fn fast_path_matches_big_rationals() {
        for (name, spec) in all() {
            let an = SpecAnalysis::new(&spec).unwrap();
            assert_eq!(build_with(&an, Limits::default()), build_exact(&an, Limits::default()), "{name}");
        }
    }

    #[test]
    fn deterministic() {
        let a = graph(&pythagorean_carpet());
        let b = graph(&pythagorean_carpet());
        assert_eq!(a, b);
        let _ = Vec2Q::zero();
    }
}
