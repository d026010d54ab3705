//! Quadratic number-field bookkeeping for the base rotation `s` with
//! characteristic polynomial `z² + a·z + 1`.
//!
//! All matrices are expressed in the companion basis `{b₁, s(b₁)}` with
//! `b₁ = (1, 0)`. In that basis `s` has matrix `[[0, −1], [1, −a]]` and the
//! squared Euclidean length of a vector is given by the Gram form
//! `[[1, −a/2], [−a/2, 1]]`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::rational::{format_rational, int, is_integer, square_free_part, to_f64};
use crate::{Error, Mat2, Mat2F, Mat2Q, Rational, Vec2Q};

#[derive(Clone, Debug)]
pub struct FieldSpec {
    pub a: Rational,
    /// `a = 2u/w` with `w > 0`; the sign of `a` lives in `u`.
    pub u: BigInt,
    pub v: BigInt,
    pub w: BigInt,
    /// Square-free `d` with `u² + d·v² = w²`; the field is `Q(√−d)`.
    pub d: BigInt,
    pub gram: Mat2Q,
}

impl PartialEq for FieldSpec {
    fn eq(&self, other: &Self) -> bool {
        self.a == other.a
    }
}

impl Eq for FieldSpec {}

pub fn make_field(a: Rational) -> Result<FieldSpec, Error> {
    if a.abs() >= int(2) {
        return Err(Error::DegenerateRotation(format_rational(&a)));
    }
    // u/w = a/2 in lowest terms
    let half = &a / int(2);
    let u = half.numer().clone();
    let w = half.denom().clone();
    let disc = &w * &w - &u * &u;
    let (d, v) = square_free_part(&disc);
    let off = -(&a / int(2));
    let gram = Mat2::new(int(1), off.clone(), off, int(1));
    Ok(FieldSpec { a, u, v, w, d, gram })
}

impl FieldSpec {
    pub fn rotation(&self) -> Mat2Q {
        rotation_matrix(self)
    }

    /// Wire form used in the IFS JSON: `{"a": "p/q"}`.
    pub fn to_json(&self) -> FieldJson {
        FieldJson {
            a: self.a.clone(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FieldJson {
    #[serde(with = "crate::rational::serde_str")]
    pub a: Rational,
}

/// Companion matrix of the base rotation.
pub fn rotation_matrix(field: &FieldSpec) -> Mat2Q {
    Mat2::new(int(0), int(-1), int(1), -field.a.clone())
}

/// The exchange matrix swapping `b₁` and `b₂`.
pub fn reflection_matrix() -> Mat2Q {
    Mat2::new(int(0), int(1), int(1), int(0))
}

/// `x·M_s + y·I`, post-multiplied by the exchange matrix when `reflected`.
pub fn linear_combo(field: &FieldSpec, x: &Rational, y: &Rational, reflected: bool) -> Mat2Q {
    let base = &rotation_matrix(field).scale(x) + &Mat2::identity().scale(y);
    if reflected {
        &base * &reflection_matrix()
    } else {
        base
    }
}

/// `det(x·M_s + y·I) = x² + y² − a·x·y`.
pub fn combo_det(field: &FieldSpec, x: &Rational, y: &Rational) -> Rational {
    x * x + y * y - &field.a * x * y
}

pub fn is_rotation(field: &FieldSpec, x: &Rational, y: &Rational) -> bool {
    combo_det(field, x, y) == int(1)
}

/// Rational rotation angles only occur for `a ∈ {0, 1, −1}`.
pub fn is_irrational_rotation(field: &FieldSpec) -> bool {
    !(field.a.is_zero() || field.a == int(1) || field.a == int(-1))
}

/// Primitive positive solutions of `u² + d·v² = w²` with `w ≤ bound`, via
/// Euclid's parametrisation `(n² − d·m², 2mn, n² + d·m²)`.
///
/// The parametrised triple can share a factor dividing `2d`; it is divided
/// out so every output is primitive. Sorted by `(w, u)`.
pub fn euclid_triples(d: u64, bound: u64) -> Result<Vec<(u64, u64, u64)>, Error> {
    if d == 0 || square_free_part(&BigInt::from(d)).1 != BigInt::one() {
        return Err(Error::InvalidArgument(format!("d = {d} is not square-free")));
    }
    if bound == 0 {
        return Err(Error::InvalidArgument("bound must be ≥ 1".into()));
    }
    let d = d as u128;
    let limit = 2 * d * bound as u128;
    let mut out = Vec::new();
    let mut m: u128 = 1;
    while d * m * m < limit {
        let mut n: u128 = 1;
        while n * n + d * m * m <= limit {
            if n * n > d * m * m && n.gcd(&m) == 1 {
                let u = n * n - d * m * m;
                let v = 2 * m * n;
                let w = n * n + d * m * m;
                let g = u.gcd(&v).gcd(&w);
                let (u, v, w) = (u / g, v / g, w / g);
                if w <= bound as u128 {
                    out.push((u as u64, v as u64, w as u64));
                }
            }
            n += 1;
        }
        m += 1;
    }
    out.sort_by_key(|&(u, _, w)| (w, u));
    out.dedup();
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionReport {
    #[serde(with = "crate::rational::serde_str")]
    pub det: Rational,
    #[serde(with = "crate::rational::serde_str")]
    pub trace: Rational,
    pub is_algebraic_integer: bool,
}

/// Determinant and trace of `g = b·s + c`.
///
/// `g` is an algebraic integer iff both are integers (only integrality is
/// tested, so the sign convention of the trace does not matter).
pub fn expansion_report(
    field: &FieldSpec,
    b: &Rational,
    c: &Rational,
) -> Result<ExpansionReport, Error> {
    let det = combo_det(field, b, c);
    if det <= int(1) {
        return Err(Error::NotExpanding(format_rational(&det)));
    }
    let trace = c * int(2) - &field.a * b;
    let is_algebraic_integer = is_integer(&det) && is_integer(&trace);
    Ok(ExpansionReport {
        det,
        trace,
        is_algebraic_integer,
    })
}

/// Exact squared Euclidean length of a companion-basis vector.
pub fn gram_norm_sq(field: &FieldSpec, v: &Vec2Q) -> Rational {
    field.gram.quadratic_form(v)
}

/// Floating-point change of basis to standard coordinates (columns `b₁`, `b₂`).
pub fn embed_to_standard(field: &FieldSpec) -> Mat2F {
    let a = to_f64(&field.a);
    Mat2::new(1.0, -a / 2.0, 0.0, (1.0 - a * a / 4.0).sqrt())
}

/// Decomposes a Gram-orthogonal linear map back into `(x, y, reflected)`.
pub fn decompose(field: &FieldSpec, linear: &Mat2Q) -> Option<(Rational, Rational, bool)> {
    let det = linear.det();
    let reflected = det.is_negative();
    let base = if reflected {
        linear * &reflection_matrix()
    } else {
        linear.clone()
    };
    let x = base.c.clone();
    let y = base.a.clone();
    if linear_combo(field, &x, &y, false) == base {
        Some((x, y, reflected))
    } else {
        None
    }
}

/// `a` as `2u/w`, for display.
pub fn describe(field: &FieldSpec) -> String {
    format!(
        "a = {} (u, v, w) = ({}, {}, {}) field Q(sqrt(-{}))",
        format_rational(&field.a),
        field.u,
        field.v,
        field.w,
        field.d
    )
}
