//! Verifying that averaging families are coherent.
//!
//! A family `{avg_d}` is coherent when `avg_e . avg_d = avg_{e*d}` for
//! all admissible factors. On stencils this is a finite statement: the
//! composed weight table must equal the table at the product factor,
//! offset by offset. This module provides
//!
//! * the decomposition counter behind the centered proof: for a target
//!   offset `i`, all splittings `i = r*d + t` with `r` in the outer
//!   window and `t` in the inner window ([`enumerate_decompositions`]),
//!   classified as exactly one or two solutions;
//! * the integer identity `sum (e-|r|)(d-|t|) = ed - |i|` over those
//!   splittings ([`check_weight_identity`]), which is the scalar heart
//!   of the centered coherence proof;
//! * a generic family verifier ([`verify_family_coherence`]) producing
//!   per-offset discrepancy reports;
//! * a randomized double-precision spot check of the application path
//!   ([`field_level_spot_check`]), separating algebraic truth from
//!   floating-point plumbing.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::engine::{apply_f64, compose};
use crate::field::CellField;
use crate::index::{Convention, IndexBox};
use crate::rational::{serialize_rat, Rat};
use crate::scale::Scale;
use crate::schemes::{SchemeError, StencilFamily};
use crate::stencil::WeightStencil;

/// How a one-dimensional decomposition count arises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecompositionCase {
    /// `|i| > d(e-1)`: one solution, with the outer offset pinned at
    /// `r = sign(i) * (e-1)`.
    Pinned,
    /// `d` divides `i`: one solution `(i/d, 0)`.
    Divisible,
    /// `|i| < d(e-1)` and `d` does not divide `i`: two solutions,
    /// bracketing `i` between its two nearest multiples of `d`.
    Split,
    /// Corner labelling: Euclidean division gives the one solution.
    CornerUnique,
}

impl DecompositionCase {
    pub fn expected_count(self) -> usize {
        match self {
            DecompositionCase::Split => 2,
            _ => 1,
        }
    }
}

/// All splittings `i = r*d + t` with both parts inside their windows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DecompositionSolutions {
    pub i: i64,
    pub d: i64,
    pub e: i64,
    pub convention: Convention,
    pub case: DecompositionCase,
    /// `(r, t)` pairs in increasing `r` order, duplicate-free.
    pub solutions: Vec<(i64, i64)>,
}

/// Enumerates the splittings of a composite offset.
///
/// Centered windows are `|r| <= e-1`, `|t| <= d-1`; corner windows are
/// `0 <= r <= e-1`, `0 <= t <= d-1`. The offset must lie in the
/// composite window (`|i| <= ed-1`, respectively `0 <= i <= ed-1`).
pub fn enumerate_decompositions(
    i: i64,
    d: i64,
    e: i64,
    convention: Convention,
) -> Result<DecompositionSolutions, CoherenceError> {
    if d < 1 || e < 1 {
        return Err(CoherenceError::BadFactors { d, e });
    }
    let in_range = match convention {
        Convention::Centered => i.abs() < e * d,
        Convention::Corner => 0 <= i && i < e * d,
    };
    if !in_range {
        return Err(CoherenceError::OffsetOutOfRange { i, d, e, convention });
    }

    let r_window: Vec<i64> = match convention {
        Convention::Centered => (-(e - 1)..=(e - 1)).collect(),
        Convention::Corner => (0..=(e - 1)).collect(),
    };
    let t_ok = |t: i64| match convention {
        Convention::Centered => t.abs() < d,
        Convention::Corner => 0 <= t && t < d,
    };
    let solutions: Vec<(i64, i64)> = r_window
        .into_iter()
        .filter_map(|r| {
            let t = i - r * d;
            t_ok(t).then_some((r, t))
        })
        .collect();

    let case = match convention {
        Convention::Corner => DecompositionCase::CornerUnique,
        Convention::Centered => {
            if i % d == 0 {
                DecompositionCase::Divisible
            } else if i.abs() > d * (e - 1) {
                DecompositionCase::Pinned
            } else {
                DecompositionCase::Split
            }
        }
    };

    Ok(DecompositionSolutions { i, d, e, convention, case, solutions })
}

/// One failed instance of the splitting-weight identity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WeightIdentityViolation {
    pub i: i64,
    pub expected: i64,
    pub actual: i64,
}

/// Result of checking `sum (e-|r|)(d-|t|) = ed - |i|` over all
/// composite offsets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WeightIdentityReport {
    pub d: i64,
    pub e: i64,
    pub checked_offsets: usize,
    pub violations: Vec<WeightIdentityViolation>,
}

impl WeightIdentityReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks, for every centered offset `|i| <= ed-1`, that the sum of
/// `(e-|r|)(d-|t|)` over all splittings equals `ed - |i|`. This is the
/// exact scalar identity that makes the centered kernel coherent; the
/// arithmetic is pure integer arithmetic.
pub fn check_weight_identity(d: i64, e: i64) -> Result<WeightIdentityReport, CoherenceError> {
    if d < 1 || e < 1 {
        return Err(CoherenceError::BadFactors { d, e });
    }
    let mut violations = Vec::new();
    let bound = e * d - 1;
    for i in -bound..=bound {
        let sols = enumerate_decompositions(i, d, e, Convention::Centered)?;
        let actual: i64 = sols.solutions.iter().map(|&(r, t)| (e - r.abs()) * (d - t.abs())).sum();
        let expected = e * d - i.abs();
        if actual != expected {
            violations.push(WeightIdentityViolation { i, expected, actual });
        }
    }
    Ok(WeightIdentityReport { d, e, checked_offsets: (2 * bound + 1) as usize, violations })
}

/// One offset where a composed stencil disagrees with the family
/// member at the product factor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WeightDiscrepancy {
    pub offset: Vec<i64>,
    #[serde(serialize_with = "serialize_rat")]
    pub expected: Rat,
    #[serde(serialize_with = "serialize_rat")]
    pub actual: Rat,
}

/// Outcome for a single factor pair `(d, e)`: does applying the `d`
/// member and then the `e` member equal the `e*d` member?
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PairCheck {
    /// Inner factor, applied first.
    pub d: i64,
    /// Outer factor, applied second.
    pub e: i64,
    pub coherent: bool,
    pub discrepancies: Vec<WeightDiscrepancy>,
}

/// Full coherence report for a family over a list of factor pairs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoherenceReport {
    pub family: String,
    pub dimension: usize,
    pub pairs: Vec<PairCheck>,
}

impl CoherenceReport {
    pub fn coherent(&self) -> bool {
        self.pairs.iter().all(|p| p.coherent)
    }
}

/// Compares `compose(family(e), family(d))` against `family(e*d)` as
/// exact stencils for every listed pair, reporting every offset whose
/// weights differ.
pub fn verify_family_coherence(
    family: &StencilFamily,
    factor_pairs: &[(i64, i64)],
) -> Result<CoherenceReport, CoherenceError> {
    let mut pairs = Vec::with_capacity(factor_pairs.len());
    for &(d, e) in factor_pairs {
        let inner = family.stencil(d)?;
        let outer = family.stencil(e)?;
        let expected = family.stencil(e * d)?;
        let actual = compose(&outer, &inner).map_err(|err| CoherenceError::Compose {
            d,
            e,
            message: err.to_string(),
        })?;
        let discrepancies = diff_stencils(&expected, &actual);
        pairs.push(PairCheck { d, e, coherent: discrepancies.is_empty(), discrepancies });
    }
    Ok(CoherenceReport { family: family.name().to_owned(), dimension: family.dim(), pairs })
}

/// Offsets at which two stencils carry different weights.
pub fn diff_stencils(expected: &WeightStencil, actual: &WeightStencil) -> Vec<WeightDiscrepancy> {
    let mut offsets: Vec<Vec<i64>> = expected.support().map(|(o, _)| o.to_vec()).collect();
    offsets.extend(actual.support().map(|(o, _)| o.to_vec()));
    offsets.sort();
    offsets.dedup();
    offsets
        .into_iter()
        .filter_map(|offset| {
            let expected = expected.weight_at(&offset);
            let actual = actual.weight_at(&offset);
            if expected == actual {
                None
            } else {
                Some(WeightDiscrepancy { offset, expected, actual })
            }
        })
        .collect()
}

/// Result of the randomized double-precision application check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldCheckReport {
    pub d: i64,
    pub e: i64,
    pub seed: u64,
    pub cells_compared: usize,
    pub max_abs_diff: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Applies the `d` member then the `e` member to a random double field
/// with entries in `[-1, 1]` and compares against one application of
/// the `e*d` member. This guards the floating application path; the
/// algebraic statement itself is checked exactly by
/// [`verify_family_coherence`].
pub fn field_level_spot_check(
    family: &StencilFamily,
    d: i64,
    e: i64,
    seed: u64,
) -> Result<FieldCheckReport, CoherenceError> {
    const TOLERANCE: f64 = 1e-12;

    let inner = family.stencil(d)?;
    let outer = family.stencil(e)?;
    let product = family.stencil(e * d)?;

    // A scale fine enough that both the staged and the direct path stay
    // inside the reciprocal scale set.
    let n = (e * d * e * d) as u64;
    let scale = Scale::reciprocal(n).map_err(|err| CoherenceError::Compose {
        d,
        e,
        message: err.to_string(),
    })?;

    let dim = family.dim();
    let half = 2 * e * d;
    let extent = match family.convention() {
        Convention::Centered => IndexBox::new(vec![-half; dim], vec![half; dim]),
        Convention::Corner => IndexBox::new(vec![0; dim], vec![2 * half; dim]),
    }
    .expect("extent bounds are ordered");

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let field = CellField::from_fn(scale, family.convention(), extent, |_| {
        rng.gen_range(-1.0..=1.0)
    });

    let staged = apply_f64(&outer, &apply_f64(&inner, &field).map_err(|err| {
        CoherenceError::Compose { d, e, message: err.to_string() }
    })?)
    .map_err(|err| CoherenceError::Compose { d, e, message: err.to_string() })?;
    let direct = apply_f64(&product, &field)
        .map_err(|err| CoherenceError::Compose { d, e, message: err.to_string() })?;

    // The staged path sees a narrower input at the second stage, so its
    // extent can be a strict subset of the direct one; compare on the
    // common cells.
    let mut max_abs_diff: f64 = 0.0;
    let mut cells = 0usize;
    for cell in staged.extent().clone().iter() {
        if let (Ok(a), Ok(b)) = (staged.get(&cell), direct.get(&cell)) {
            max_abs_diff = max_abs_diff.max((a - b).abs());
            cells += 1;
        }
    }

    Ok(FieldCheckReport {
        d,
        e,
        seed,
        cells_compared: cells,
        max_abs_diff,
        tolerance: TOLERANCE,
        pass: cells > 0 && max_abs_diff <= TOLERANCE,
    })
}

/// Every ordered factor pair `(d, e)` with both in `lo..=hi` and the
/// pair admissible for the family.
pub fn admissible_pairs(family: &StencilFamily, lo: i64, hi: i64) -> Vec<(i64, i64)> {
    let mut pairs = Vec::new();
    for d in lo..=hi {
        for e in lo..=hi {
            if family.kind().admits_factor(d)
                && family.kind().admits_factor(e)
                && family.kind().admits_factor(e * d)
            {
                pairs.push((d, e));
            }
        }
    }
    pairs
}

#[derive(Debug, thiserror::Error)]
pub enum CoherenceError {
    #[error("factors must be at least 1, got d={d}, e={e}")]
    BadFactors { d: i64, e: i64 },
    #[error("offset {i} is outside the composite {convention:?} window for d={d}, e={e}")]
    OffsetOutOfRange { i: i64, d: i64, e: i64, convention: Convention },
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error("checking pair d={d}, e={e} failed: {message}")]
    Compose { d: i64, e: i64, message: String },
}
