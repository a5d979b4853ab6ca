//! Length scales and the divisibility partial order between them.
//!
//! A scale is a positive rational length `z` drawn from one of two scale
//! sets: the dyadic set `{2^-r : r = 0, 1, 2, ...}` or the full reciprocal
//! set `{1/n : n = 1, 2, 3, ...}`. Scales are kept exact; the coarsening
//! relation `z` precedes `z'` holds exactly when `z'/z` is an integer >= 2.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};

use crate::rational::{format_rat, Rat};

/// Which set of admissible lengths a [`Scale`] is drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScaleSet {
    /// `{ 2^-r : r = 0, 1, 2, ... }`
    PowersOfTwo,
    /// `{ 1/n : n = 1, 2, 3, ... }`
    AllReciprocals,
}

impl ScaleSet {
    /// Membership test for a candidate length.
    pub fn contains(self, value: &Rat) -> bool {
        if !value.is_positive() {
            return false;
        }
        if !value.numer().is_one() {
            return false;
        }
        match self {
            ScaleSet::AllReciprocals => true,
            ScaleSet::PowersOfTwo => is_power_of_two(value.denom()),
        }
    }
}

fn is_power_of_two(n: &BigInt) -> bool {
    if !n.is_positive() {
        return false;
    }
    let mut n = n.clone();
    let two = BigInt::from(2);
    while n.is_even() {
        n /= &two;
    }
    n.is_one()
}

/// A positive rational lattice spacing, tagged with its scale set.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Scale {
    value: Rat,
    scale_set: ScaleSet,
}

impl Scale {
    /// Creates a scale, checking membership in the scale set.
    pub fn new(value: Rat, scale_set: ScaleSet) -> Result<Self, ScaleError> {
        if scale_set.contains(&value) {
            Ok(Self { value, scale_set })
        } else {
            Err(ScaleError::NotInScaleSet { value: format_rat(&value), scale_set })
        }
    }

    /// The scale `1/n` in the reciprocal set.
    pub fn reciprocal(n: u64) -> Result<Self, ScaleError> {
        if n == 0 {
            return Err(ScaleError::ZeroFactor);
        }
        Self::new(Rat::new(BigInt::one(), BigInt::from(n)), ScaleSet::AllReciprocals)
    }

    /// The scale `2^-r` in the dyadic set.
    pub fn power_of_two(r: u32) -> Result<Self, ScaleError> {
        Self::new(Rat::new(BigInt::one(), BigInt::from(2).pow(r)), ScaleSet::PowersOfTwo)
    }

    pub fn value(&self) -> &Rat {
        &self.value
    }

    pub fn scale_set(&self) -> ScaleSet {
        self.scale_set
    }

    /// `self` precedes `other` iff `other = d * self` for an integer `d >= 2`.
    pub fn precedes(&self, other: &Scale) -> bool {
        self.refinement_factor(other).is_some_and(|d| d >= BigInt::from(2))
    }

    /// The integer `d` with `other = d * self`, if one exists.
    pub fn refinement_factor(&self, other: &Scale) -> Option<BigInt> {
        let ratio = other.value.clone() / self.value.clone();
        if ratio.denom().is_one() && ratio.numer().is_positive() {
            Some(ratio.numer().clone())
        } else {
            None
        }
    }

    /// The scale `d * z`, which must itself belong to the scale set.
    ///
    /// In the dyadic set this requires `d` to be a power of two, and in
    /// both sets the coarse length may not exceed 1.
    pub fn coarsen(&self, d: i64) -> Result<Scale, ScaleError> {
        if d < 1 {
            return Err(ScaleError::ZeroFactor);
        }
        let coarse = self.value.clone() * Rat::from_integer(BigInt::from(d));
        Scale::new(coarse, self.scale_set).map_err(|_| ScaleError::CoarseningLeavesSet {
            value: format_rat(&self.value),
            factor: d,
            scale_set: self.scale_set,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScaleError {
    #[error("{value} is not a member of scale set {scale_set:?}")]
    NotInScaleSet { value: String, scale_set: ScaleSet },
    #[error("coarsening {value} by factor {factor} leaves scale set {scale_set:?}")]
    CoarseningLeavesSet { value: String, factor: i64, scale_set: ScaleSet },
    #[error("scale factor must be positive")]
    ZeroFactor,
}
