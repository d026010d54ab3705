//! Small fixed-size linear algebra over any [`Scalar`].
//!
//! The same `Vec2`/`Mat2`/`Affine2` types carry exact rationals for the
//! combinatorial work and `f64` for rendering.

use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{CheckedAdd, CheckedMul, CheckedSub, Num, ToPrimitive};

/// Anything we can do 2×2 linear algebra over.
pub trait Scalar: Num + Clone + PartialEq + Debug + Neg<Output = Self> {}

impl<T> Scalar for T where T: Num + Clone + PartialEq + Debug + Neg<Output = T> {}

/// Scalars whose arithmetic can report overflow instead of wrapping.
pub trait CheckedScalar: Scalar + CheckedAdd + CheckedSub + CheckedMul {}

impl<T> CheckedScalar for T where T: Scalar + CheckedAdd + CheckedSub + CheckedMul {}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Vec2<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Vec2<T> {
    pub fn new(x: T, y: T) -> Self {
        Vec2 { x, y }
    }

    pub fn zero() -> Self {
        Vec2::new(T::zero(), T::zero())
    }

    pub fn is_zero(&self) -> bool {
        self.x.is_zero() && self.y.is_zero()
    }

    pub fn scale(&self, s: &T) -> Self {
        Vec2::new(self.x.clone() * s.clone(), self.y.clone() * s.clone())
    }

    pub fn dot(&self, other: &Self) -> T {
        self.x.clone() * other.x.clone() + self.y.clone() * other.y.clone()
    }

    pub fn map<U, F: Fn(&T) -> U>(&self, f: F) -> Vec2<U> {
        Vec2 {
            x: f(&self.x),
            y: f(&self.y),
        }
    }
}

impl<T: CheckedScalar> Vec2<T> {
    pub fn checked_add(&self, o: &Self) -> Option<Self> {
        Some(Vec2::new(self.x.checked_add(&o.x)?, self.y.checked_add(&o.y)?))
    }

    pub fn checked_sub(&self, o: &Self) -> Option<Self> {
        Some(Vec2::new(self.x.checked_sub(&o.x)?, self.y.checked_sub(&o.y)?))
    }

    pub fn checked_dot(&self, o: &Self) -> Option<T> {
        self.x.checked_mul(&o.x)?.checked_add(&self.y.checked_mul(&o.y)?)
    }
}

impl<T: Scalar + ToPrimitive> Vec2<T> {
    pub fn to_f64(&self) -> Vec2<f64> {
        self.map(|v| v.to_f64().unwrap_or(f64::NAN))
    }
}

impl<T: Scalar> Add for &Vec2<T> {
    type Output = Vec2<T>;
    fn add(self, rhs: &Vec2<T>) -> Vec2<T> {
        Vec2::new(
            self.x.clone() + rhs.x.clone(),
            self.y.clone() + rhs.y.clone(),
        )
    }
}

impl<T: Scalar> Sub for &Vec2<T> {
    type Output = Vec2<T>;
    fn sub(self, rhs: &Vec2<T>) -> Vec2<T> {
        Vec2::new(
            self.x.clone() - rhs.x.clone(),
            self.y.clone() - rhs.y.clone(),
        )
    }
}

impl<T: Scalar> Neg for &Vec2<T> {
    type Output = Vec2<T>;
    fn neg(self) -> Vec2<T> {
        Vec2::new(-self.x.clone(), -self.y.clone())
    }
}

/// Row-major 2×2 matrix `[[a, b], [c, d]]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Mat2<T> {
    pub a: T,
    pub b: T,
    pub c: T,
    pub d: T,
}

impl<T: Scalar> Mat2<T> {
    pub fn new(a: T, b: T, c: T, d: T) -> Self {
        Mat2 { a, b, c, d }
    }

    pub fn from_rows(rows: [[T; 2]; 2]) -> Self {
        let [[a, b], [c, d]] = rows;
        Mat2 { a, b, c, d }
    }

    pub fn identity() -> Self {
        Mat2::new(T::one(), T::zero(), T::zero(), T::one())
    }

    pub fn zero() -> Self {
        Mat2::new(T::zero(), T::zero(), T::zero(), T::zero())
    }

    pub fn rows(&self) -> [[T; 2]; 2] {
        [
            [self.a.clone(), self.b.clone()],
            [self.c.clone(), self.d.clone()],
        ]
    }

    pub fn det(&self) -> T {
        self.a.clone() * self.d.clone() - self.b.clone() * self.c.clone()
    }

    pub fn trace(&self) -> T {
        self.a.clone() + self.d.clone()
    }

    pub fn transpose(&self) -> Self {
        Mat2::new(
            self.a.clone(),
            self.c.clone(),
            self.b.clone(),
            self.d.clone(),
        )
    }

    pub fn is_identity(&self) -> bool {
        self.a.is_one() && self.b.is_zero() && self.c.is_zero() && self.d.is_one()
    }

    pub fn scale(&self, s: &T) -> Self {
        Mat2::new(
            self.a.clone() * s.clone(),
            self.b.clone() * s.clone(),
            self.c.clone() * s.clone(),
            self.d.clone() * s.clone(),
        )
    }

    /// `None` when singular.
    pub fn inverse(&self) -> Option<Self> {
        let det = self.det();
        if det.is_zero() {
            return None;
        }
        Some(Mat2::new(
            self.d.clone() / det.clone(),
            -self.b.clone() / det.clone(),
            -self.c.clone() / det.clone(),
            self.a.clone() / det,
        ))
    }

    pub fn apply(&self, v: &Vec2<T>) -> Vec2<T> {
        Vec2::new(
            self.a.clone() * v.x.clone() + self.b.clone() * v.y.clone(),
            self.c.clone() * v.x.clone() + self.d.clone() * v.y.clone(),
        )
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut out = Mat2::identity();
        for _ in 0..n {
            out = &out * self;
        }
        out
    }

    /// `vᵀ · self · v`.
    pub fn quadratic_form(&self, v: &Vec2<T>) -> T {
        v.dot(&self.apply(v))
    }

    pub fn map<U, F: Fn(&T) -> U>(&self, f: F) -> Mat2<U> {
        Mat2 {
            a: f(&self.a),
            b: f(&self.b),
            c: f(&self.c),
            d: f(&self.d),
        }
    }
}

impl<T: CheckedScalar> Mat2<T> {
    pub fn checked_mul(&self, r: &Self) -> Option<Self> {
        let dot = |p: &T, q: &T, u: &T, v: &T| p.checked_mul(u)?.checked_add(&q.checked_mul(v)?);
        Some(Mat2::new(
            dot(&self.a, &self.b, &r.a, &r.c)?,
            dot(&self.a, &self.b, &r.b, &r.d)?,
            dot(&self.c, &self.d, &r.a, &r.c)?,
            dot(&self.c, &self.d, &r.b, &r.d)?,
        ))
    }

    pub fn checked_apply(&self, v: &Vec2<T>) -> Option<Vec2<T>> {
        Some(Vec2::new(
            self.a.checked_mul(&v.x)?.checked_add(&self.b.checked_mul(&v.y)?)?,
            self.c.checked_mul(&v.x)?.checked_add(&self.d.checked_mul(&v.y)?)?,
        ))
    }

    pub fn checked_quadratic_form(&self, v: &Vec2<T>) -> Option<T> {
        v.checked_dot(&self.checked_apply(v)?)
    }
}

impl<T: Scalar + ToPrimitive> Mat2<T> {
    pub fn to_f64(&self) -> Mat2<f64> {
        self.map(|v| v.to_f64().unwrap_or(f64::NAN))
    }
}

impl<T: Scalar> Mul for &Mat2<T> {
    type Output = Mat2<T>;
    fn mul(self, r: &Mat2<T>) -> Mat2<T> {
        Mat2::new(
            self.a.clone() * r.a.clone() + self.b.clone() * r.c.clone(),
            self.a.clone() * r.b.clone() + self.b.clone() * r.d.clone(),
            self.c.clone() * r.a.clone() + self.d.clone() * r.c.clone(),
            self.c.clone() * r.b.clone() + self.d.clone() * r.d.clone(),
        )
    }
}

impl<T: Scalar> Add for &Mat2<T> {
    type Output = Mat2<T>;
    fn add(self, r: &Mat2<T>) -> Mat2<T> {
        Mat2::new(
            self.a.clone() + r.a.clone(),
            self.b.clone() + r.b.clone(),
            self.c.clone() + r.c.clone(),
            self.d.clone() + r.d.clone(),
        )
    }
}

impl<T: Scalar> Sub for &Mat2<T> {
    type Output = Mat2<T>;
    fn sub(self, r: &Mat2<T>) -> Mat2<T> {
        Mat2::new(
            self.a.clone() - r.a.clone(),
            self.b.clone() - r.b.clone(),
            self.c.clone() - r.c.clone(),
            self.d.clone() - r.d.clone(),
        )
    }
}

/// `x ↦ linear · x + translation`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Affine2<T> {
    pub linear: Mat2<T>,
    pub translation: Vec2<T>,
}

impl<T: Scalar> Affine2<T> {
    pub fn new(linear: Mat2<T>, translation: Vec2<T>) -> Self {
        Affine2 {
            linear,
            translation,
        }
    }

    pub fn identity() -> Self {
        Affine2::new(Mat2::identity(), Vec2::zero())
    }

    pub fn is_identity(&self) -> bool {
        self.linear.is_identity() && self.translation.is_zero()
    }

    pub fn apply(&self, p: &Vec2<T>) -> Vec2<T> {
        &self.linear.apply(p) + &self.translation
    }

    /// `self ∘ inner`: apply `inner` first.
    pub fn compose(&self, inner: &Affine2<T>) -> Self {
        Affine2::new(
            &self.linear * &inner.linear,
            &self.linear.apply(&inner.translation) + &self.translation,
        )
    }

    pub fn inverse(&self) -> Option<Self> {
        let inv = self.linear.inverse()?;
        let t = -&inv.apply(&self.translation);
        Some(Affine2::new(inv, t))
    }

    pub fn map<U, F: Fn(&T) -> U>(&self, f: F) -> Affine2<U> {
        Affine2 {
            linear: self.linear.map(&f),
            translation: self.translation.map(&f),
        }
    }
}

impl<T: CheckedScalar> Affine2<T> {
    pub fn checked_apply(&self, p: &Vec2<T>) -> Option<Vec2<T>> {
        self.linear.checked_apply(p)?.checked_add(&self.translation)
    }

    /// `self ∘ inner`, or `None` on overflow.
    pub fn checked_compose(&self, inner: &Affine2<T>) -> Option<Self> {
        Some(Affine2::new(
            self.linear.checked_mul(&inner.linear)?,
            self.linear
                .checked_apply(&inner.translation)?
                .checked_add(&self.translation)?,
        ))
    }
}

impl<T: Scalar + ToPrimitive> Affine2<T> {
    pub fn to_f64(&self) -> Affine2<f64> {
        self.map(|v| v.to_f64().unwrap_or(f64::NAN))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    type Q = Ratio<i64>;

    fn q(n: i64, d: i64) -> Q {
        Ratio::new(n, d)
    }

    #[test]
    fn inverse_round_trips_for_rationals() {
        let m = Mat2::new(q(2, 1), q(1, 1), q(-1, 1), q(2, 1));
        let inv = m.inverse().unwrap();
        assert_eq!(&m * &inv, Mat2::identity());
        assert_eq!(inv.a, q(2, 5));
    }

    #[test]
    fn singular_has_no_inverse() {
        let m = Mat2::new(1.0, 2.0, 2.0, 4.0);
        assert!(m.inverse().is_none());
    }

    #[test]
    fn affine_compose_order() {
        let shift = Affine2::new(Mat2::identity(), Vec2::new(q(1, 1), q(0, 1)));
        let flip = Affine2::new(Mat2::identity().scale(&q(-1, 1)), Vec2::zero());
        // flip(shift(0)) = -(1, 0)
        let p = flip.compose(&shift).apply(&Vec2::zero());
        assert_eq!(p, Vec2::new(q(-1, 1), q(0, 1)));
        let inv = flip.compose(&shift).inverse().unwrap();
        assert!(inv.compose(&flip.compose(&shift)).is_identity());
    }

    #[test]
    fn checked_ops_agree_and_detect_overflow() {
        let m = Mat2::new(q(2, 3), q(1, 1), q(-1, 5), q(2, 1));
        let f = Affine2::new(m.clone(), Vec2::new(q(1, 2), q(-3, 1)));
        let g = Affine2::new(m.inverse().unwrap(), Vec2::new(q(0, 1), q(7, 4)));
        assert_eq!(f.checked_compose(&g), Some(f.compose(&g)));
        let p = Vec2::new(q(5, 7), q(1, 3));
        assert_eq!(f.checked_apply(&p), Some(f.apply(&p)));
        let huge = Mat2::identity().scale(&q(i64::MAX, 1));
        assert_eq!(huge.checked_mul(&huge), None);
    }

    #[test]
    fn works_for_f32_too() {
        let m: Mat2<f32> = Mat2::new(0.0, -1.0, 1.0, 0.0);
        assert_eq!(m.pow(4), Mat2::identity());
    }
}
