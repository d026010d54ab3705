//! Brute-force checks that share nothing with the neighbor-graph builder
//! except the exact contractions: point clouds of the attractor, ball
//! overlap tests and a random generator of small specs.

use std::collections::{HashMap, HashSet};

use fractile::field::{embed_to_standard, make_field};
use fractile::ifs::{contractions, IfsSpec, MapSpec, SpecAnalysis, SymmetryDescriptor};
use fractile::neighbor::{build_with, canonical_key, is_certainly_far, BuildOutcome, Limits, NeighborKey};
use fractile::rational::{int, ratio};
use fractile::search::symmetry_set;
use fractile::{AffineF, AffineQ, Mat2F, Rational, Vec2F};
use proptest::prelude::*;
use proptest::strategy::ValueTree;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

/// Relative slack on ball-overlap decisions; rounding is far below it.
const SLACK: f64 = 1e-9;

/// Points `f_w(c)` for all words of one length, where `c` is the
/// barycentric fixed point, together with a ball radius `R·rⁿ` such that
/// the balls around the points cover the attractor.
pub struct Cloud {
    maps: Vec<AffineF>,
    embed: Mat2F,
    pub center: Vec2F,
    /// `R = δ/(1 − r)` with `δ = max |f_k(c) − c|`.
    pub radius: f64,
    pub ratio: f64,
    pub depth: u32,
    pub points: Vec<Vec2F>,
    cell: f64,
    grid: HashMap<(i64, i64), Vec<Vec2F>>,
}

impl Cloud {
    pub fn new(spec: &IfsSpec, depth: u32) -> Cloud {
        let maps: Vec<AffineF> = contractions(spec)
            .expect("valid spec")
            .iter()
            .map(|f| f.to_f64())
            .collect();
        let embed = embed_to_standard(&spec.field);
        let ratio = 1.0 / fractile::rational::to_f64(&spec.det()).sqrt();
        let center = barycentre(&maps);
        let len = |v: &Vec2F| {
            let s = embed.apply(v);
            s.dot(&s).sqrt()
        };
        let delta = maps
            .iter()
            .map(|f| len(&(&f.apply(&center) - &center)))
            .fold(0.0, f64::max);
        let radius = delta / (1.0 - ratio);
        let mut points = vec![center.clone()];
        for _ in 0..depth {
            points = points
                .iter()
                .flat_map(|p| maps.iter().map(move |f| f.apply(p)))
                .collect();
        }
        let mut cloud = Cloud {
            maps,
            embed,
            center,
            radius,
            ratio,
            depth,
            points,
            cell: 0.0,
            grid: HashMap::new(),
        };
        cloud.cell = (2.0 * cloud.ball() * (1.0 + SLACK)).max(1e-300);
        for p in &cloud.points {
            let s = cloud.embed.apply(p);
            cloud.grid.entry(cloud.key(&s)).or_default().push(s);
        }
        cloud
    }

    fn key(&self, s: &Vec2F) -> (i64, i64) {
        ((s.x / self.cell).floor() as i64, (s.y / self.cell).floor() as i64)
    }

    pub fn maps(&self) -> &[AffineF] {
        &self.maps
    }

    /// Radius of the balls around the cloud points.
    pub fn ball(&self) -> f64 {
        self.radius * self.ratio.powi(self.depth as i32)
    }

    /// Euclidean length of a companion-basis vector.
    pub fn length(&self, v: &Vec2F) -> f64 {
        let s = self.embed.apply(v);
        s.dot(&s).sqrt()
    }

    /// Is some point of `h(cloud)` within `reach ≤ cell` of the cloud?
    fn any_within(&self, h: &AffineF, reach: f64) -> bool {
        self.points.iter().any(|p| {
            let s = self.embed.apply(&h.apply(p));
            let (cx, cy) = self.key(&s);
            (-1..=1).any(|dx| {
                (-1..=1).any(|dy| {
                    self.grid.get(&(cx + dx, cy + dy)).is_some_and(|bucket| {
                        bucket.iter().any(|t| {
                            let d = &s - t;
                            d.dot(&d).sqrt() <= reach
                        })
                    })
                })
            })
        })
    }

    /// Necessary for `h(A) ∩ A ≠ ∅`: some pair of covering balls meets.
    pub fn may_overlap(&self, h: &AffineF) -> bool {
        self.any_within(h, 2.0 * self.ball() * (1.0 + SLACK))
    }

    /// Covering balls of `A` and `h(A)` meet with room to spare.
    pub fn clearly_overlaps(&self, h: &AffineF) -> bool {
        self.any_within(h, 2.0 * self.ball() * (1.0 - SLACK))
    }
}

fn barycentre(maps: &[AffineF]) -> Vec2F {
    let m = maps.len() as f64;
    let mut x = Vec2F::zero();
    for _ in 0..100_000 {
        let mut next = Vec2F::zero();
        for f in maps {
            next = &next + &f.apply(&x);
        }
        next = next.scale(&(1.0 / m));
        let d = &next - &x;
        x = next;
        if d.dot(&d) < 1e-32 {
            break;
        }
    }
    x
}

/// Piece adjacency by cloud overlap, then flood fill from piece 0.
pub fn pieces_connected(spec: &IfsSpec, depth: u32) -> bool {
    let cloud = Cloud::new(spec, depth);
    let m = cloud.maps.len();
    let inv: Vec<AffineF> = cloud.maps.iter().map(|f| f.inverse().unwrap()).collect();
    let mut seen = vec![false; m];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(k) = stack.pop() {
        for j in 0..m {
            if !seen[j] && cloud.may_overlap(&inv[k].compose(&cloud.maps[j])) {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// All maps `f_w⁻¹ f_v` reachable through `levels` refinements
/// `h ↦ f_k⁻¹ h f_j` whose clouds overlap at every step.
pub fn overlap_closure(spec: &IfsSpec, depth: u32, levels: usize) -> HashSet<NeighborKey> {
    let cloud = Cloud::new(spec, depth);
    let fs = contractions(spec).unwrap();
    let inv: Vec<AffineQ> = fs.iter().map(|f| f.inverse().unwrap()).collect();
    let m = fs.len();
    let mut found = HashSet::new();
    let mut tested = HashSet::new();
    let mut frontier: Vec<AffineQ> = Vec::new();
    for k in 0..m {
        for j in 0..m {
            if k != j {
                frontier.push(inv[k].compose(&fs[j]));
            }
        }
    }
    for _ in 0..levels {
        let mut next = Vec::new();
        for h in frontier {
            let key = canonical_key(&h);
            if !tested.insert(key.clone()) || !cloud.may_overlap(&h.to_f64()) {
                continue;
            }
            found.insert(key);
            for k in 0..m {
                for j in 0..m {
                    next.push(inv[k].compose(&h).compose(&fs[j]));
                }
            }
        }
        frontier = next;
    }
    found
}

/// Exact `f_{w₁} ∘ f_{w₂} ∘ …`.
pub fn word_map(fs: &[AffineQ], word: &[usize]) -> AffineQ {
    word.iter()
        .fold(AffineQ::identity(), |acc, &k| acc.compose(&fs[k - 1]))
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OracleTally {
    pub vertices: usize,
    pub far_checked: usize,
}

/// Cross-checks one build against the point-cloud oracle.
///
/// Graph vertices must have overlapping clouds and never be certified far;
/// certified-far maps among short word pairs and vertex successors must
/// have separated clouds; the identity is never a vertex; OSC witnesses
/// must compose to the same map.
pub fn check_spec(spec: &IfsSpec, limits: Limits, depth: u32) -> Result<(BuildOutcome, OracleTally), String> {
    let an = SpecAnalysis::new(spec).map_err(|e| e.to_string())?;
    let outcome = build_with(&an, limits);
    let cloud = Cloud::new(spec, depth);
    let fs = &an.maps;
    let m = fs.len();
    let mut tally = OracleTally::default();
    let mut far_candidates: Vec<AffineQ> = Vec::new();
    for k in 0..m {
        for j in 0..m {
            if k == j {
                continue;
            }
            let root = an.inverses[k].compose(&fs[j]);
            for k2 in 0..m {
                for j2 in 0..m {
                    far_candidates.push(an.inverses[k2].compose(&root).compose(&fs[j2]));
                }
            }
            far_candidates.push(root);
        }
    }
    match &outcome {
        BuildOutcome::Graph(g) => {
            for (i, h) in g.vertices.iter().enumerate() {
                if h.is_identity() {
                    return Err(format!("vertex n{} is the identity", i + 1));
                }
                if is_certainly_far(h, &an) {
                    return Err(format!("vertex n{} is certified far", i + 1));
                }
                if !cloud.may_overlap(&h.to_f64()) {
                    return Err(format!("vertex n{} has disjoint point clouds", i + 1));
                }
                for k in 0..m {
                    for j in 0..m {
                        far_candidates.push(an.inverses[k].compose(h).compose(&fs[j]));
                    }
                }
            }
            tally.vertices = g.vertices.len();
        }
        BuildOutcome::OscViolation { w, v } => {
            if w == v || word_map(fs, w) != word_map(fs, v) {
                return Err(format!("witness {w:?} / {v:?} does not coincide"));
            }
        }
        BuildOutcome::Empty(_) | BuildOutcome::TooComplex(_) => {}
    }
    for h in &far_candidates {
        if is_certainly_far(h, &an) {
            tally.far_checked += 1;
            if cloud.clearly_overlaps(&h.to_f64()) {
                return Err(format!("certified-far map {h:?} has overlapping clouds"));
            }
        }
    }
    Ok((outcome, tally))
}

/// `(a, b, c)` with `1 < det(b·s + c) ≤ 9`, `a ∈ {0, −1, 3/2}`, `|b|, |c| ≤ 3`.
pub fn small_expansions() -> Vec<(Rational, Rational, Rational)> {
    let mut out = Vec::new();
    for a in [int(0), int(-1), ratio(3, 2)] {
        for b in -3..=3i64 {
            for c in -3..=3i64 {
                let (b, c) = (int(b), int(c));
                let det = &b * &b + &c * &c - &a * &b * &c;
                if det > int(1) && det <= int(9) {
                    out.push((a.clone(), b, c));
                }
            }
        }
    }
    out
}

/// Specs with at most 4 maps, symmetries that are words of length ≤ 2 in
/// the base rotation and `−1`, translations in `[−2, 2]²`.
pub fn small_spec() -> impl Strategy<Value = IfsSpec> {
    let expansions = small_expansions();
    (0..expansions.len())
        .prop_flat_map(move |i| {
            let (a, b, c) = expansions[i].clone();
            let field = make_field(a).unwrap();
            let syms = symmetry_set(&field, &[SymmetryDescriptor::new(int(1), int(0), false)], 2);
            let det = &b * &b + &c * &c - &field.a * &b * &c;
            let cap = (det.floor().to_integer().try_into().unwrap_or(4u64)).min(4) as usize;
            let map = (0..syms.len(), -2..=2i64, -2..=2i64);
            (
                Just((field, b, c, syms)),
                proptest::collection::vec(map, 2..=cap),
            )
        })
        .prop_map(|((field, b, c, syms), maps)| {
            let maps = maps
                .into_iter()
                .map(|(s, x, y)| MapSpec::new(syms[s].clone(), x, y))
                .collect();
            IfsSpec::new(field, b, c, maps)
        })
}

/// `count` specs drawn reproducibly from [`small_spec`].
pub fn sample_specs(count: usize, seed: u64) -> Vec<IfsSpec> {
    let mut bytes = [0u8; 32];
    bytes[..8].copy_from_slice(&seed.to_le_bytes());
    let mut runner = TestRunner::new_with_rng(Config::default(), TestRng::from_seed(RngAlgorithm::ChaCha, &bytes));
    let strategy = small_spec();
    (0..count)
        .map(|_| strategy.new_tree(&mut runner).unwrap().current())
        .collect()
}
