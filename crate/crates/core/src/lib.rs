//! Exact combinatorial models for the curve graph of the once-punctured
//! torus and its compactified boundary.
//!
//! The crate is organised around the Farey graph: slopes are reduced
//! fractions `p/q` (with `1/0` for the vertical curve), edges are pairs of
//! slopes intersecting once, and everything downstream — boundary points as
//! continued-fraction codes, the `SL(2,Z)` action, markings, and the join
//! topology over abstract components — is computed in exact integer
//! arithmetic.
//!
//! Core types are generic over the integer scalar through [`FareyInt`] so
//! that bounded exhaustive sweeps can run on `i64` while unbounded dynamics
//! use arbitrary precision. The crate-root aliases fix the default
//! big-integer instantiation.

pub mod action;
pub mod boundary;
pub mod error;
pub mod join;
pub mod markings;
pub mod oracle;
pub mod slopes;

use std::fmt::{Debug, Display};
use std::hash::Hash;
use std::str::FromStr;

use num_integer::{Integer, Roots};
use num_traits::{FromPrimitive, Signed, ToPrimitive};

pub use error::{Error, Result};

/// Integer scalar the exact arithmetic runs on.
///
/// `i64` is enough for the bounded oracle sweeps; `BigInt` is required for
/// iterated mapping classes, whose matrix entries grow geometrically.
pub trait FareyInt:
    Integer
    + Signed
    + Roots
    + Clone
    + Hash
    + Debug
    + Display
    + FromPrimitive
    + ToPrimitive
    + FromStr
    + Send
    + Sync
    + 'static
{
}

impl<T> FareyInt for T where
    T: Integer
        + Signed
        + Roots
        + Clone
        + Hash
        + Debug
        + Display
        + FromPrimitive
        + ToPrimitive
        + FromStr
        + Send
        + Sync
        + 'static
{
}

/// Default arbitrary-precision scalar.
pub type Int = num_bigint::BigInt;
/// Exact rational over the default scalar.
pub type Rational = num_rational::Ratio<Int>;

pub type Slope = slopes::Slope<Int>;
pub type ContinuedFraction = slopes::ContinuedFraction<Int>;
pub type PivotSequence = slopes::PivotSequence<Int>;
pub type BoundaryPoint = boundary::BoundaryPoint<Int>;
pub type PeriodicCf = boundary::PeriodicCf<Int>;
pub type MappingClass = action::MappingClass<Int>;
pub type NTClass = action::NTClass<Int>;
pub type Marking = markings::Marking<Int>;
pub type Universe = join::Universe<Int>;
pub type WeightedLamination = join::WeightedLamination<Int>;
pub type ProductPoint = join::ProductPoint<Int>;









/// 2^k as an exact scalar.
pub(crate) fn two_pow<I: FareyInt>(k: usize) -> I {
    let two = I::one() + I::one();
    let mut out = I::one();
    for _ in 0..k {
        out = out * two.clone();
    }
    out
}
