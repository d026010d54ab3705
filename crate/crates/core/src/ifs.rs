//! IFS specifications in the companion basis.
//!
//! A spec is an expansion `g = b·s + c` (matrix `M`) and maps
//! `h_k(x) = S_k (x + t_k)` with a Gram-orthogonal symmetry `S_k` and an
//! integer vector `t_k`. The contractions are `f_k = M⁻¹ ∘ h_k`.

use std::fmt;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::field::{self, combo_det, gram_norm_sq, linear_combo, FieldJson, FieldSpec};
use crate::rational::{default_sqrt_tolerance, format_rational, int, sqrt_lower_bound};
use crate::{AffineQ, Error, Mat2Q, Rational, Vec2, Vec2Q};

/// Symmetry `x·s + y·1`, followed by the exchange reflection when `reflected`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymmetryDescriptor {
    #[serde(with = "crate::rational::serde_str")]
    pub x: Rational,
    #[serde(with = "crate::rational::serde_str")]
    pub y: Rational,
    pub reflected: bool,
}

impl SymmetryDescriptor {
    pub fn new(x: Rational, y: Rational, reflected: bool) -> Self {
        SymmetryDescriptor { x, y, reflected }
    }

    pub fn identity() -> Self {
        Self::new(int(0), int(1), false)
    }

    pub fn negation() -> Self {
        Self::new(int(0), int(-1), false)
    }

    pub fn matrix(&self, field: &FieldSpec) -> Mat2Q {
        linear_combo(field, &self.x, &self.y, self.reflected)
    }

    pub fn is_rotation(&self, field: &FieldSpec) -> bool {
        field::is_rotation(field, &self.x, &self.y)
    }

    /// Recovers the descriptor of a Gram-orthogonal matrix.
    pub fn from_matrix(field: &FieldSpec, m: &Mat2Q) -> Option<Self> {
        field::decompose(field, m).map(|(x, y, r)| Self::new(x, y, r))
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self, field: &FieldSpec) -> Self {
        let m = &self.matrix(field) * &other.matrix(field);
        Self::from_matrix(field, &m).expect("symmetries are closed under composition")
    }

    pub fn inverse(&self, field: &FieldSpec) -> Self {
        let m = self.matrix(field).inverse().expect("symmetry is invertible");
        Self::from_matrix(field, &m).expect("symmetries are closed under inversion")
    }

    pub fn negate(&self) -> Self {
        Self::new(-self.x.clone(), -self.y.clone(), self.reflected)
    }
}

impl fmt::Display for SymmetryDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})s + ({})", format_rational(&self.x), format_rational(&self.y))?;
        if self.reflected {
            write!(f, " then r")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MapSpec {
    pub sym: SymmetryDescriptor,
    pub t: Vec2<i64>,
}

impl MapSpec {
    pub fn new(sym: SymmetryDescriptor, tx: i64, ty: i64) -> Self {
        MapSpec {
            sym,
            t: Vec2 { x: tx, y: ty },
        }
    }

    /// `h(x) = S (x + t)`.
    pub fn isometry(&self, field: &FieldSpec) -> AffineQ {
        let s = self.sym.matrix(field);
        let t = s.apply(&Vec2::new(int(self.t.x), int(self.t.y)));
        AffineQ::new(s, t)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IfsSpec {
    pub field: FieldSpec,
    pub b: Rational,
    pub c: Rational,
    pub maps: Vec<MapSpec>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    NotExpanding { det: Rational },
    TooManyMaps { m: usize, det: Rational },
    TooFewMaps { m: usize },
    NotARotation { index: usize, det: Rational },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NotExpanding { det } => {
                write!(f, "not expanding: det M = {} ≤ 1", format_rational(det))
            }
            Violation::TooManyMaps { m, det } => write!(
                f,
                "m ≤ det M violated: m = {m}, det M = {}",
                format_rational(det)
            ),
            Violation::TooFewMaps { m } => write!(f, "need at least 2 maps, got {m}"),
            Violation::NotARotation { index, det } => write!(
                f,
                "map {}: not a rotation (x² + y² − a·x·y = {})",
                index + 1,
                format_rational(det)
            ),
        }
    }
}

impl IfsSpec {
    pub fn new(field: FieldSpec, b: Rational, c: Rational, maps: Vec<MapSpec>) -> Self {
        IfsSpec { field, b, c, maps }
    }

    pub fn m(&self) -> usize {
        self.maps.len()
    }

    /// `M = b·M_s + c·I`.
    pub fn expansion(&self) -> Mat2Q {
        linear_combo(&self.field, &self.b, &self.c, false)
    }

    pub fn det(&self) -> Rational {
        combo_det(&self.field, &self.b, &self.c)
    }

    pub fn validate(&self) -> Vec<Violation> {
        validate(self)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("spec serialises")
    }

    pub fn from_json(s: &str) -> Result<Self, Error> {
        Ok(serde_json::from_str(s)?)
    }
}

pub fn validate(spec: &IfsSpec) -> Vec<Violation> {
    let mut out = Vec::new();
    let det = spec.det();
    if det <= int(1) {
        out.push(Violation::NotExpanding { det: det.clone() });
    }
    let m = spec.m();
    if m < 2 {
        out.push(Violation::TooFewMaps { m });
    }
    if int(m as i64) > det {
        out.push(Violation::TooManyMaps { m, det });
    }
    for (index, map) in spec.maps.iter().enumerate() {
        let d = combo_det(&spec.field, &map.sym.x, &map.sym.y);
        if d != int(1) {
            out.push(Violation::NotARotation { index, det: d });
        }
    }
    out
}

/// Validates, turning violations into an error.
pub fn ensure_valid(spec: &IfsSpec) -> Result<(), Error> {
    let v = validate(spec);
    if v.is_empty() {
        Ok(())
    } else {
        Err(Error::Invalid(v))
    }
}

/// `f_k = M⁻¹ ∘ h_k`, exactly.
pub fn contractions(spec: &IfsSpec) -> Result<Vec<AffineQ>, Error> {
    let m_inv = spec
        .expansion()
        .inverse()
        .ok_or_else(|| Error::NotExpanding(format_rational(&spec.det())))?;
    let shrink = AffineQ::new(m_inv, Vec2Q::zero());
    Ok(spec
        .maps
        .iter()
        .map(|h| shrink.compose(&h.isometry(&spec.field)))
        .collect())
}

/// Solves `x̃ = (1/m) Σ f_k(x̃)` exactly.
pub fn centroid(spec: &IfsSpec) -> Result<Vec2Q, Error> {
    Ok(centroid_of(&contractions(spec)?))
}

fn centroid_of(fs: &[AffineQ]) -> Vec2Q {
    let m = int(fs.len() as i64);
    let mut lin = Mat2Q::zero();
    let mut tr = Vec2Q::zero();
    for f in fs {
        lin = &lin + &f.linear;
        tr = &tr + &f.translation;
    }
    let system = &Mat2Q::identity() - &lin.scale(&(int(1) / &m));
    let rhs = tr.scale(&(int(1) / &m));
    // the averaged linear part has norm ≤ r < 1, so this is invertible
    system
        .inverse()
        .expect("I minus a contraction is invertible")
        .apply(&rhs)
}

/// Conservative squared pruning radius `T ≥ (2δ/(1−r))²`.
pub fn pruning_radius_sq(spec: &IfsSpec) -> Result<Rational, Error> {
    Ok(SpecAnalysis::new(spec)?.radius_sq)
}

/// Everything the neighbor-graph construction needs, computed once.
#[derive(Clone, Debug)]
pub struct SpecAnalysis {
    pub field: FieldSpec,
    pub det: Rational,
    pub maps: Vec<AffineQ>,
    pub inverses: Vec<AffineQ>,
    pub centroid: Vec2Q,
    /// `max_k |f_k(x̃) − x̃|²`
    pub delta_sq: Rational,
    /// Lower bound `p ≤ √det M` used in place of `1/r`.
    pub sqrt_det_lower: Rational,
    /// `T = 4δ² / (1 − 1/p)²`.
    pub radius_sq: Rational,
}

impl SpecAnalysis {
    pub fn new(spec: &IfsSpec) -> Result<Self, Error> {
        let det = spec.det();
        if det <= int(1) {
            return Err(Error::NotExpanding(format_rational(&det)));
        }
        let maps = contractions(spec)?;
        let inverses = maps
            .iter()
            .map(|f| f.inverse().expect("contractions are invertible"))
            .collect();
        let centroid = centroid_of(&maps);
        let delta_sq = maps
            .iter()
            .map(|f| gram_norm_sq(&spec.field, &(&f.apply(&centroid) - &centroid)))
            .max()
            .unwrap_or_else(Rational::zero);
        let mut tol = default_sqrt_tolerance();
        let mut p = sqrt_lower_bound(&det, &tol);
        while p <= int(1) {
            tol /= int(1024);
            p = sqrt_lower_bound(&det, &tol);
        }
        let shrink = int(1) - int(1) / &p;
        let radius_sq = int(4) * &delta_sq / (&shrink * &shrink);
        Ok(SpecAnalysis {
            field: spec.field.clone(),
            det,
            maps,
            inverses,
            centroid,
            delta_sq,
            sqrt_det_lower: p,
            radius_sq,
        })
    }

    pub fn m(&self) -> usize {
        self.maps.len()
    }

    /// Upper bound on the radius of the ball around `x̃` containing `A`, in
    /// floating point (standard-coordinate length).
    pub fn attractor_radius(&self) -> f64 {
        let r = 1.0 / crate::rational::to_f64(&self.det).sqrt();
        crate::rational::to_f64(&self.delta_sq).sqrt() / (1.0 - r)
    }

    pub fn contraction_ratio(&self) -> f64 {
        1.0 / crate::rational::to_f64(&self.det).sqrt()
    }
}

// ---- wire format ----

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExpansionJson {
    #[serde(with = "crate::rational::serde_str")]
    b: Rational,
    #[serde(with = "crate::rational::serde_str")]
    c: Rational,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MapJson {
    sym: SymmetryDescriptor,
    t: [i64; 2],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct IfsJson {
    field: FieldJson,
    expansion: ExpansionJson,
    maps: Vec<MapJson>,
}

impl Serialize for IfsSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        IfsJson {
            field: self.field.to_json(),
            expansion: ExpansionJson {
                b: self.b.clone(),
                c: self.c.clone(),
            },
            maps: self
                .maps
                .iter()
                .map(|m| MapJson {
                    sym: m.sym.clone(),
                    t: [m.t.x, m.t.y],
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for IfsSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = IfsJson::deserialize(d)?;
        let field = field::make_field(raw.field.a).map_err(serde::de::Error::custom)?;
        let maps = raw
            .maps
            .into_iter()
            .map(|m| MapSpec::new(m.sym, m.t[0], m.t[1]))
            .collect();
        Ok(IfsSpec::new(field, raw.expansion.b, raw.expansion.c, maps))
    }
}

/// Reference specs used throughout the tests and docs.
pub mod fixtures {
    use super::*;
    use crate::field::make_field;
    use crate::rational::ratio;

    fn translations_only(b: i64, c: i64, ts: &[(i64, i64)]) -> IfsSpec {
        let field = make_field(int(0)).unwrap();
        let maps = ts
            .iter()
            .map(|&(x, y)| MapSpec::new(SymmetryDescriptor::identity(), x, y))
            .collect();
        IfsSpec::new(field, int(b), int(c), maps)
    }

    /// Four-piece carpet with a (3,4,5) Pythagorean rotation and five neighbor
    /// types: `M = [[2, 1], [−1, 2]]`, `s = (4 + 3·i)/5`,
    /// `h₁ = −s(x − e₂)`, `h₂ = −x − e₂`, `h₃ = x`, `h₄ = −x + e₁`.
    pub fn pythagorean_carpet() -> IfsSpec {
        let field = make_field(int(0)).unwrap();
        let minus_s = SymmetryDescriptor::new(ratio(-3, 5), ratio(-4, 5), false);
        let neg = SymmetryDescriptor::negation();
        let id = SymmetryDescriptor::identity();
        IfsSpec::new(
            field,
            int(-1),
            int(2),
            vec![
                MapSpec::new(minus_s, 0, -1),
                MapSpec::new(neg.clone(), 0, 1),
                MapSpec::new(id, 0, 0),
                MapSpec::new(neg, -1, 0),
            ],
        )
    }

    pub fn sierpinski_triangle() -> IfsSpec {
        translations_only(0, 2, &[(0, 0), (1, 0), (0, 1)])
    }

    pub fn sierpinski_carpet() -> IfsSpec {
        let ts: Vec<_> = (0..3)
            .flat_map(|y| (0..3).map(move |x| (x, y)))
            .filter(|&p| p != (1, 1))
            .collect();
        translations_only(0, 3, &ts)
    }

    pub fn full_square(k: i64) -> IfsSpec {
        let ts: Vec<_> = (0..k)
            .flat_map(|y| (0..k).map(move |x| (x, y)))
            .collect();
        translations_only(0, k, &ts)
    }

    /// Two pieces of a Cantor set on the first axis.
    pub fn cantor_pair(gap: i64) -> IfsSpec {
        translations_only(0, 4, &[(0, 0), (gap, 0)])
    }

    /// `f₁ = x/2`, `f₂ = (x + e₁)/2`: the unit interval.
    pub fn interval() -> IfsSpec {
        translations_only(0, 2, &[(0, 0), (1, 0)])
    }

    pub fn all() -> Vec<(&'static str, IfsSpec)> {
        vec![
            ("pythagorean_carpet", pythagorean_carpet()),
            ("sierpinski_triangle", sierpinski_triangle()),
            ("sierpinski_carpet", sierpinski_carpet()),
            ("square_2", full_square(2)),
            ("square_3", full_square(3)),
            ("interval", interval()),
        ]
    }
}
