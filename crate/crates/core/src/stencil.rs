//! Exact-rational averaging stencils.
//!
//! A [`WeightStencil`] is the finite weight table of one coarsening
//! operator: it maps fine-cell offsets to rational weights. Weights are
//! stored sparsely (zero entries are dropped), always sum to exactly 1,
//! and are confined to the convention's support window for the factor:
//! `[-(d-1), d-1]^D` for centered labelling, `[0, d-1]^D` for corner
//! labelling.
//!
//! Stencils are immutable value objects; all algebra that produces new
//! stencils lives in [`crate::engine`] and [`crate::schemes`].

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::index::{Convention, IndexBox, Offset};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::rational::{format_rat, parse_rat, rat_int, rat_sum, Rat};

/// Weight table of a single coarsening operator with refinement factor
/// `d`, acting on a `D`-dimensional lattice.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "StencilRepr", into = "StencilRepr")]
pub struct WeightStencil {
    factor: i64,
    dim: usize,
    convention: Convention,
    weights: BTreeMap<Offset, Rat>,
}

impl WeightStencil {
    /// Builds a stencil from explicit (offset, weight) pairs.
    ///
    /// Zero weights are dropped, duplicate offsets are rejected, every
    /// offset must lie in the convention's support window, and the
    /// weights must sum to exactly 1.
    pub fn new(
        factor: i64,
        dim: usize,
        convention: Convention,
        entries: impl IntoIterator<Item = (Vec<i64>, Rat)>,
    ) -> Result<Self, StencilError> {
        if factor < 1 {
            return Err(StencilError::BadFactor { factor });
        }
        if dim < 1 {
            return Err(StencilError::BadDimension { dim });
        }
        let mut weights: BTreeMap<Offset, Rat> = BTreeMap::new();
        for (offset, weight) in entries {
            if offset.len() != dim {
                return Err(StencilError::OffsetDimension { offset, dim });
            }
            check_window(factor, convention, &offset)?;
            if weight == rat_int(0) {
                continue;
            }
            let key: Offset = SmallVec::from_slice(&offset);
            if weights.insert(key, weight).is_some() {
                return Err(StencilError::DuplicateOffset { offset });
            }
        }
        Self::from_map(factor, dim, convention, weights)
    }

    /// Builds a stencil from an accumulated weight map (used by
    /// composition, where collisions are sums rather than errors).
    pub(crate) fn from_map(
        factor: i64,
        dim: usize,
        convention: Convention,
        mut weights: BTreeMap<Offset, Rat>,
    ) -> Result<Self, StencilError> {
        weights.retain(|_, w| *w != rat_int(0));
        let sum = rat_sum(weights.values());
        if sum != rat_int(1) {
            return Err(StencilError::NotNormalized { sum: format_rat(&sum) });
        }
        for offset in weights.keys() {
            check_window(factor, convention, offset)?;
        }
        Ok(Self { factor, dim, convention, weights })
    }

    /// Builds a stencil from integer relative weights over a shared
    /// positive denominator, so normalization can be checked with one
    /// integer sum instead of a rational reduction per entry.
    pub(crate) fn from_scaled(
        factor: i64,
        dim: usize,
        convention: Convention,
        entries: Vec<(Offset, BigInt)>,
        denom: BigInt,
    ) -> Result<Self, StencilError> {
        debug_assert!(denom > BigInt::zero());
        let mut sum = BigInt::zero();
        for (_, n) in &entries {
            sum += n;
        }
        if sum != denom {
            return Err(StencilError::NotNormalized {
                sum: format_rat(&Rat::new(sum, denom)),
            });
        }
        let mut weights: BTreeMap<Offset, Rat> = BTreeMap::new();
        for (offset, n) in entries {
            if n.is_zero() {
                continue;
            }
            check_window(factor, convention, &offset)?;
            if weights.insert(offset.clone(), Rat::new(n, denom.clone())).is_some() {
                return Err(StencilError::DuplicateOffset { offset: offset.to_vec() });
            }
        }
        Ok(Self { factor, dim, convention, weights })
    }

    /// The stencil of the identity operator: factor 1, weight 1 at the
    /// origin.
    pub fn identity(dim: usize, convention: Convention) -> Result<Self, StencilError> {
        Self::new(1, dim, convention, [(vec![0; dim], rat_int(1))])
    }

    /// Tensor product of one-dimensional profiles sharing a factor and
    /// convention: the weight at `(i_1, ..., i_D)` is the product of the
    /// per-axis weights.
    pub fn tensor_product(profiles: &[WeightStencil]) -> Result<Self, StencilError> {
        let first = profiles.first().ok_or(StencilError::BadDimension { dim: 0 })?;
        for p in profiles {
            if p.dim != 1 {
                return Err(StencilError::NotAProfile { dim: p.dim });
            }
            if p.factor != first.factor || p.convention != first.convention {
                return Err(StencilError::MismatchedProfiles);
            }
        }
        let mut denom = BigInt::one();
        let mut entries: Vec<(Offset, BigInt)> = vec![(SmallVec::new(), BigInt::one())];
        for p in profiles {
            let lcm = p
                .weights
                .values()
                .fold(BigInt::one(), |acc, w| acc.lcm(w.denom()));
            let scaled: Vec<(i64, BigInt)> = p
                .weights
                .iter()
                .map(|(i, w)| (i[0], w.numer() * (&lcm / w.denom())))
                .collect();
            let mut next = Vec::with_capacity(entries.len() * scaled.len());
            for (prefix, n) in &entries {
                for (i, ni) in &scaled {
                    let mut key = prefix.clone();
                    key.push(*i);
                    next.push((key, n * ni));
                }
            }
            entries = next;
            denom *= lcm;
        }
        Self::from_scaled(first.factor, profiles.len(), first.convention, entries, denom)
    }

    pub fn factor(&self) -> i64 {
        self.factor
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn convention(&self) -> Convention {
        self.convention
    }

    /// Weight at an offset; absent offsets carry weight 0.
    pub fn weight_at(&self, offset: &[i64]) -> Rat {
        let key: Offset = SmallVec::from_slice(offset);
        self.weights.get(&key).cloned().unwrap_or_else(|| rat_int(0))
    }

    /// Iterates the nonzero entries in lexicographic offset order.
    pub fn support(&self) -> impl Iterator<Item = (&Offset, &Rat)> {
        self.weights.iter()
    }

    /// Number of nonzero weights.
    pub fn support_size(&self) -> usize {
        self.weights.len()
    }

    /// Smallest box containing every nonzero offset.
    pub fn support_box(&self) -> IndexBox {
        let mut lo = vec![i64::MAX; self.dim];
        let mut hi = vec![i64::MIN; self.dim];
        for offset in self.weights.keys() {
            for (k, &c) in offset.iter().enumerate() {
                lo[k] = lo[k].min(c);
                hi[k] = hi[k].max(c);
            }
        }
        IndexBox::new(lo, hi).expect("a normalized stencil has nonempty support")
    }

    /// Sum of all weights (1 by construction; exposed for tests).
    pub fn weight_sum(&self) -> Rat {
        rat_sum(self.weights.values())
    }

    pub fn is_identity(&self) -> bool {
        self.factor == 1
    }

    /// True when every sign flip of every offset carries the same
    /// weight, the symmetry of centered averaging kernels.
    pub fn is_sign_symmetric(&self) -> bool {
        self.weights.iter().all(|(offset, w)| {
            let flipped: Vec<i64> = offset.iter().map(|c| -c).collect();
            self.weight_at(&flipped) == *w && {
                (0..self.dim).all(|k| {
                    let mut one: Vec<i64> = offset.to_vec();
                    one[k] = -one[k];
                    self.weight_at(&one) == *w
                })
            }
        })
    }

    /// True when permuting coordinates never changes a weight (checked
    /// via sorting, which suffices together with sign symmetry for the
    /// symmetric kernels in the catalogue).
    pub fn is_permutation_symmetric(&self) -> bool {
        self.weights.iter().all(|(offset, w)| {
            let mut sorted: Vec<i64> = offset.to_vec();
            sorted.sort_unstable();
            self.weight_at(&sorted) == *w
        })
    }
}

fn check_window(factor: i64, convention: Convention, offset: &[i64]) -> Result<(), StencilError> {
    let ok = match convention {
        Convention::Centered => offset.iter().all(|&c| c.abs() < factor),
        Convention::Corner => offset.iter().all(|&c| 0 <= c && c < factor),
    };
    if ok {
        Ok(())
    } else {
        Err(StencilError::OutsideWindow { offset: offset.to_vec(), factor, convention })
    }
}

/// Serialized form: explicit entries with `p/q` weights.
#[derive(Serialize, Deserialize, Clone)]
struct StencilRepr {
    dimension: usize,
    factor: i64,
    convention: Convention,
    weights: Vec<WeightEntry>,
}

#[derive(Serialize, Deserialize, Clone)]
struct WeightEntry {
    offset: Vec<i64>,
    weight: String,
}

impl From<WeightStencil> for StencilRepr {
    fn from(s: WeightStencil) -> Self {
        StencilRepr {
            dimension: s.dim,
            factor: s.factor,
            convention: s.convention,
            weights: s
                .weights
                .iter()
                .map(|(offset, w)| WeightEntry { offset: offset.to_vec(), weight: format_rat(w) })
                .collect(),
        }
    }
}

impl TryFrom<StencilRepr> for WeightStencil {
    type Error = StencilError;

    fn try_from(r: StencilRepr) -> Result<Self, Self::Error> {
        let entries = r
            .weights
            .into_iter()
            .map(|e| {
                let w = parse_rat(&e.weight)
                    .map_err(|err| StencilError::BadWeight { text: err.to_string() })?;
                Ok((e.offset, w))
            })
            .collect::<Result<Vec<_>, StencilError>>()?;
        WeightStencil::new(r.factor, r.dimension, r.convention, entries)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum StencilError {
    #[error("refinement factor must be at least 1, got {factor}")]
    BadFactor { factor: i64 },
    #[error("dimension must be at least 1, got {dim}")]
    BadDimension { dim: usize },
    #[error("offset {offset:?} does not have dimension {dim}")]
    OffsetDimension { offset: Vec<i64>, dim: usize },
    #[error("offset {offset:?} lies outside the {convention:?} support window for factor {factor}")]
    OutsideWindow { offset: Vec<i64>, factor: i64, convention: Convention },
    #[error("offset {offset:?} appears more than once")]
    DuplicateOffset { offset: Vec<i64> },
    #[error("weights sum to {sum}, not 1")]
    NotNormalized { sum: String },
    #[error("one-dimensional profile expected, got dimension {dim}")]
    NotAProfile { dim: usize },
    #[error("tensor factors must share refinement factor and convention")]
    MismatchedProfiles,
    #[error("unparseable weight: {text}")]
    BadWeight { text: String },
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn halves() -> WeightStencil {
        WeightStencil::new(
            2,
            1,
            Convention::Centered,
            [(vec![-1], rat(1, 2)), (vec![0], rat_int(0)), (vec![1], rat(1, 2))],
        )
        .unwrap()
    }

    #[test]
    fn zero_weights_are_dropped_but_queryable() {
        let s = halves();
        assert_eq!(s.support_size(), 2);
        assert_eq!(s.weight_at(&[0]), rat_int(0));
        assert_eq!(s.weight_at(&[1]), rat(1, 2));
        assert_eq!(s.weight_at(&[5]), rat_int(0));
    }

    #[test]
    fn support_window_is_enforced() {
        let err = WeightStencil::new(2, 1, Convention::Centered, [(vec![2], rat_int(1))]);
        assert!(matches!(err, Err(StencilError::OutsideWindow { .. })));
        let err = WeightStencil::new(2, 1, Convention::Corner, [(vec![-1], rat_int(1))]);
        assert!(matches!(err, Err(StencilError::OutsideWindow { .. })));
    }

    #[test]
    fn normalization_is_enforced() {
        let err = WeightStencil::new(2, 1, Convention::Centered, [(vec![0], rat(1, 2))]);
        assert!(matches!(err, Err(StencilError::NotNormalized { .. })));
    }

    #[test]
    fn duplicate_offsets_are_rejected() {
        let err = WeightStencil::new(
            2,
            1,
            Convention::Centered,
            [(vec![0], rat(1, 2)), (vec![0], rat(1, 2))],
        );
        assert!(matches!(err, Err(StencilError::DuplicateOffset { .. })));
    }

    #[test]
    fn tensor_product_multiplies_axis_weights() {
        let s = WeightStencil::tensor_product(&[halves(), halves()]).unwrap();
        assert_eq!(s.dim(), 2);
        assert_eq!(s.support_size(), 4);
        assert_eq!(s.weight_at(&[-1, 1]), rat(1, 4));
        assert_eq!(s.weight_at(&[0, 0]), rat_int(0));
        assert_eq!(s.weight_sum(), rat_int(1));
    }

    #[test]
    fn tensor_product_rejects_mismatched_factors() {
        let id = WeightStencil::identity(1, Convention::Centered).unwrap();
        let err = WeightStencil::tensor_product(&[halves(), id]);
        assert!(matches!(err, Err(StencilError::MismatchedProfiles)));
    }

    #[test]
    fn support_box_bounds_nonzero_offsets() {
        let s = halves();
        let b = s.support_box();
        assert_eq!((b.lo(), b.hi()), (&[-1][..], &[1][..]));
    }

    #[test]
    fn json_round_trip() {
        let s = WeightStencil::tensor_product(&[halves(), halves()]).unwrap();
        let text = serde_json::to_string(&s).unwrap();
        assert!(text.contains("\"1/4\""));
        let back: WeightStencil = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn json_rejects_unnormalized_input() {
        let text = "{\"dimension\":1,\"factor\":2,\"convention\":\"centered\",\"weights\":[{\"offset\":[0],\"weight\":\"1/3\"}]}";
        assert!(serde_json::from_str::<WeightStencil>(text).is_err());
    }
}
