//! Exact neighbor-graph analysis of planar self-similar sets whose maps use
//! rational symmetries of a lattice.
//!
//! Everything combinatorial runs over [`Rational`]; floating point only shows
//! up in dimension estimates and rendering.

pub mod analysis;
pub mod dimension;
pub mod error;
pub mod export;
pub mod field;
pub mod ifs;
pub mod linalg;
pub mod neighbor;
pub mod rational;
pub mod render;
pub mod search;
pub mod topology;

pub use error::Error;
pub use linalg::{Affine2, CheckedScalar, Mat2, Scalar, Vec2};
pub use rational::ExactScalar;

pub type Rational = num_rational::BigRational;
/// Fixed-width fast path; arithmetic on it is always checked.
pub type SmallRational = num_rational::Ratio<i128>;

pub type Vec2Q = Vec2<Rational>;
pub type Mat2Q = Mat2<Rational>;
pub type AffineQ = Affine2<Rational>;

pub type Vec2F = Vec2<f64>;
pub type Mat2F = Mat2<f64>;
pub type AffineF = Affine2<f64>;

pub type Result<T, E = Error> = std::result::Result<T, E>;
