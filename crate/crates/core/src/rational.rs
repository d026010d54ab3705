//! Exact rational helpers: parsing, the `"p/q"` wire form, square roots and
//! square-free parts.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::linalg::CheckedScalar;
use crate::{Error, Rational, SmallRational};

/// Exact scalars the neighbor-graph search can run over.
pub trait ExactScalar: CheckedScalar + Eq + Ord + std::hash::Hash + ToPrimitive {
    /// `None` when `q` does not fit.
    fn from_rational(q: &Rational) -> Option<Self>;
    fn to_rational(&self) -> Rational;
    /// Far enough from the representable limits to keep computing with.
    fn in_range(&self) -> bool {
        true
    }
}

impl ExactScalar for Rational {
    fn from_rational(q: &Rational) -> Option<Self> {
        Some(q.clone())
    }

    fn to_rational(&self) -> Rational {
        self.clone()
    }
}

const SMALL_LIMIT: i128 = 1 << 100;

impl ExactScalar for SmallRational {
    fn from_rational(q: &Rational) -> Option<Self> {
        let v = SmallRational::new(q.numer().to_i128()?, q.denom().to_i128()?);
        v.in_range().then_some(v)
    }

    fn to_rational(&self) -> Rational {
        Rational::new(BigInt::from(*self.numer()), BigInt::from(*self.denom()))
    }

    fn in_range(&self) -> bool {
        self.numer().checked_abs().is_some_and(|n| n < SMALL_LIMIT) && *self.denom() < SMALL_LIMIT
    }
}

/// Default tolerance for [`sqrt_lower_bound`] when used for pruning.
pub fn default_sqrt_tolerance() -> Rational {
    Rational::new(BigInt::one(), BigInt::from(1_000_000_000u64))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `"p"` or `"p/q"` with decimal integers; the result is reduced.
pub fn parse_rational(s: &str) -> Result<Rational, Error> {
    let bad = || Error::Parse(format!("malformed rational {s:?}"));
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n, Some(d)),
        None => (s, None),
    };
    let valid_int = |t: &str, signed: bool| {
        let digits = if signed {
            t.strip_prefix('-').unwrap_or(t)
        } else {
            t
        };
        !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())
    };
    if !valid_int(num, true) {
        return Err(bad());
    }
    let n: BigInt = num.parse().map_err(|_| bad())?;
    let d: BigInt = match den {
        Some(d) if valid_int(d, false) => d.parse().map_err(|_| bad())?,
        Some(_) => return Err(bad()),
        None => BigInt::one(),
    };
    if d.is_zero() {
        return Err(Error::Parse(format!("zero denominator in {s:?}")));
    }
    Ok(Rational::new(n, d))
}

/// Canonical wire form: `"p"` for integers, `"p/q"` otherwise.
pub fn format_rational(q: &Rational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Serde adapter for `Rational` as a `"p/q"` string.
pub mod serde_str {
    use super::*;
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(de::Error::custom)
    }
}

/// A rational `p` with `p ≤ √q` and `√q − p ≤ tol`.
///
/// Newton's iteration from above keeps an upper bound `x ≥ √q`, rounded up to
/// a dyadic grid so the numbers stay small; `q / x` is then a lower bound,
/// rounded down to the same grid.
pub fn sqrt_lower_bound(q: &Rational, tol: &Rational) -> Rational {
    assert!(q.is_positive(), "sqrt_lower_bound needs q > 0");
    assert!(tol.is_positive(), "sqrt_lower_bound needs tol > 0");
    // grid = 2^-k ≤ tol / 4
    let mut k = 0u32;
    let quarter = tol / int(4);
    let mut grid = int(1);
    while grid > quarter {
        grid /= int(2);
        k += 1;
    }
    let scale = BigInt::one() << k;
    let round_up = |v: &Rational| -> Rational {
        Rational::new((v * Rational::from_integer(scale.clone())).ceil().to_integer(), scale.clone())
    };
    let round_down = |v: &Rational| -> Rational {
        Rational::new((v * Rational::from_integer(scale.clone())).floor().to_integer(), scale.clone())
    };

    let one = int(1);
    let mut x = round_up(if *q > one { q } else { &one });
    for _ in 0..10_000 {
        let lower = q / &x;
        if &x - &lower <= &quarter * int(2) {
            break;
        }
        let next = round_up(&((&x + &lower) / int(2)));
        if next >= x {
            break;
        }
        x = next;
    }
    let p = round_down(&(q / &x));
    debug_assert!(&p * &p <= *q);
    p
}

/// Largest square-free divisor `d` with `n = d · v²`; returns `(d, v)`.
pub fn square_free_part(n: &BigInt) -> (BigInt, BigInt) {
    assert!(n.is_positive(), "square-free part of a non-positive integer");
    let mut rest = n.clone();
    let mut d = BigInt::one();
    let mut v = BigInt::one();
    let mut p = BigInt::from(2u32);
    while &p * &p <= rest {
        let mut e = 0u32;
        while (&rest % &p).is_zero() {
            rest /= &p;
            e += 1;
        }
        if e > 0 {
            v *= p.pow(e / 2);
            if e % 2 == 1 {
                d *= &p;
            }
        }
        p += if p == BigInt::from(2u32) { 1u32 } else { 2u32 };
    }
    d *= rest;
    (d, v)
}

pub fn is_integer(q: &Rational) -> bool {
    q.denom().is_one()
}

pub fn to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

pub fn gcd3(a: &BigInt, b: &BigInt, c: &BigInt) -> BigInt {
    a.gcd(b).gcd(c)
}
