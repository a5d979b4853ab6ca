//! Applying stencils to fields and composing stencils symbolically.
//!
//! Application is a strided convolution: the output value at coarse
//! cell `a` is the weighted sum of fine values at `d*a + t` over the
//! stencil support. The output extent is the set of coarse cells whose
//! whole support window lies inside the input extent; nothing is padded
//! and nothing outside the input is ever read. Composition multiplies
//! weight tables directly, so operator identities can be checked as
//! finite exact computations without picking a field.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::field::CellField;
use crate::index::{IndexBox, Offset};
use crate::rational::{rat_int, Rat};
use crate::scale::ScaleError;
use crate::stencil::{StencilError, WeightStencil};

/// Floor division for a positive divisor.
fn floor_div(a: i64, b: i64) -> i64 {
    a.div_euclid(b)
}

/// Ceiling division for a positive divisor.
fn ceil_div(a: i64, b: i64) -> i64 {
    -((-a).div_euclid(b))
}

/// The coarse cells whose full stencil support fits inside `input`.
pub fn output_extent(stencil: &WeightStencil, input: &IndexBox) -> Result<IndexBox, EngineError> {
    if stencil.dim() != input.dim() {
        return Err(EngineError::DimensionMismatch {
            stencil: stencil.dim(),
            field: input.dim(),
        });
    }
    let d = stencil.factor();
    let support = stencil.support_box();
    let mut lo = Vec::with_capacity(input.dim());
    let mut hi = Vec::with_capacity(input.dim());
    for k in 0..input.dim() {
        let a_min = ceil_div(input.lo()[k] - support.lo()[k], d);
        let a_max = floor_div(input.hi()[k] - support.hi()[k], d);
        if a_min > a_max {
            return Err(EngineError::EmptyOutput { axis: k });
        }
        lo.push(a_min);
        hi.push(a_max);
    }
    Ok(IndexBox::new(lo, hi).expect("bounds were checked per axis"))
}

fn check_compatible(stencil: &WeightStencil, dim: usize, convention: crate::index::Convention)
    -> Result<(), EngineError>
{
    if stencil.dim() != dim {
        return Err(EngineError::DimensionMismatch { stencil: stencil.dim(), field: dim });
    }
    if stencil.convention() != convention {
        return Err(EngineError::ConventionMismatch);
    }
    Ok(())
}

/// Applies a stencil to an exact-rational field, producing the coarse
/// field at scale `d * z`.
pub fn apply(stencil: &WeightStencil, field: &CellField<Rat>) -> Result<CellField<Rat>, EngineError> {
    check_compatible(stencil, field.dim(), field.convention())?;
    let out_box = output_extent(stencil, field.extent())?;
    let coarse = field.scale().coarsen(stencil.factor())?;
    let d = stencil.factor();
    let mut fine = vec![0i64; field.dim()];
    Ok(CellField::from_fn(coarse, field.convention(), out_box, |a| {
        let mut acc = rat_int(0);
        for (t, w) in stencil.support() {
            for k in 0..a.len() {
                fine[k] = d * a[k] + t[k];
            }
            let v = field.get(&fine).expect("output extent keeps the support inside the input");
            acc += w * v;
        }
        acc
    }))
}

/// Integer-relative-weight plan for floating application: weights are
/// scaled by their common denominator so each term is an exact integer
/// times a field value, and one division restores the normalization at
/// the end. Falls back to direct weight conversion when the integers
/// would not be exactly representable.
struct FloatPlan {
    entries: Vec<(Offset, f64)>,
    norm: f64,
}

impl FloatPlan {
    fn of(stencil: &WeightStencil) -> FloatPlan {
        let mut q = num_bigint::BigInt::from(1);
        for (_, w) in stencil.support() {
            q = q.lcm(w.denom());
        }
        let exact = q.bits() <= 53
            && stencil.support().all(|(_, w)| {
                let rel = w * Rat::from_integer(q.clone());
                rel.numer().abs().bits() <= 53
            });
        if exact {
            let entries = stencil
                .support()
                .map(|(o, w)| {
                    let rel = w * Rat::from_integer(q.clone());
                    (o.clone(), rel.numer().to_f64().expect("53-bit integer"))
                })
                .collect();
            FloatPlan { entries, norm: q.to_f64().expect("53-bit integer") }
        } else {
            let entries = stencil
                .support()
                .map(|(o, w)| (o.clone(), crate::rational::to_f64(w)))
                .collect();
            FloatPlan { entries, norm: 1.0 }
        }
    }
}

fn kahan_step(sum: &mut f64, comp: &mut f64, term: f64) {
    let y = term - *comp;
    let t = *sum + y;
    *comp = (t - *sum) - y;
    *sum = t;
}

/// Applies a stencil to a floating field. For fields with entries in
/// `[-1, 1]` and factors up to 16 the result is within relative error
/// 1e-12 of the exact rational value (compensated summation with
/// integer relative weights and a single normalizing division). As
/// with any fixed-precision summation, the relative guarantee is
/// against the scale of the terms; an exact value that nearly cancels
/// to zero is reproduced to the same absolute accuracy, not to twelve
/// digits of itself.
pub fn apply_f64(stencil: &WeightStencil, field: &CellField<f64>) -> Result<CellField<f64>, EngineError> {
    check_compatible(stencil, field.dim(), field.convention())?;
    let out_box = output_extent(stencil, field.extent())?;
    let coarse = field.scale().coarsen(stencil.factor())?;
    let d = stencil.factor();
    let plan = FloatPlan::of(stencil);
    let mut fine = vec![0i64; field.dim()];
    Ok(CellField::from_fn(coarse, field.convention(), out_box, |a| {
        let mut sum = 0.0;
        let mut comp = 0.0;
        for (t, w) in &plan.entries {
            for k in 0..a.len() {
                fine[k] = d * a[k] + t[k];
            }
            let v = field.get(&fine).expect("output extent keeps the support inside the input");
            kahan_step(&mut sum, &mut comp, w * v);
        }
        sum / plan.norm
    }))
}

/// Largest dense accumulator the composite bounding box may occupy
/// before composition falls back to sparse accumulation.
const DENSE_CELL_CAP: usize = 1 << 23;

/// Composite stencil: applying the result equals applying `inner` and
/// then `outer`. The weight at offset `o` is the sum of
/// `outer(r) * inner(t)` over all splittings `o = r * d_inner + t`.
///
/// The products are accumulated as integers over the common
/// denominator of both weight tables, so the inner loop needs no
/// rational reductions; the result is exact either way. When the
/// composite bounding box is small enough and every possible partial
/// sum provably fits in an `i128`, the sums go through a flat dense
/// buffer; otherwise through a map of arbitrary-precision integers.
pub fn compose(outer: &WeightStencil, inner: &WeightStencil) -> Result<WeightStencil, EngineError> {
    if outer.dim() != inner.dim() {
        return Err(EngineError::DimensionMismatch { stencil: outer.dim(), field: inner.dim() });
    }
    if outer.convention() != inner.convention() {
        return Err(EngineError::ConventionMismatch);
    }
    let dim = outer.dim();
    let scale_to_integers = |stencil: &WeightStencil| {
        let lcm = stencil
            .support()
            .fold(BigInt::one(), |acc, (_, w)| acc.lcm(w.denom()));
        let scaled: Vec<(Offset, BigInt)> = stencil
            .support()
            .map(|(o, w)| (o.clone(), w.numer() * (&lcm / w.denom())))
            .collect();
        (scaled, lcm)
    };
    let (outer_scaled, outer_lcm) = scale_to_integers(outer);
    let (inner_scaled, inner_lcm) = scale_to_integers(inner);

    let d = inner.factor();
    let denom = &outer_lcm * &inner_lcm;
    let composite_factor = outer.factor() * d;

    let sums = match dense_plan(&outer_scaled, &inner_scaled, d, dim) {
        Some(plan) => compose_dense(&outer_scaled, &inner_scaled, d, &plan),
        None => compose_sparse(&outer_scaled, &inner_scaled, d),
    };
    WeightStencil::from_scaled(composite_factor, dim, outer.convention(), sums, denom)
        .map_err(EngineError::Stencil)
}

/// Row-major layout of the composite support's bounding box, used only
/// when the whole computation provably fits the fast path.
struct DensePlan {
    lo: Vec<i64>,
    strides: Vec<i64>,
    cells: usize,
}

/// Decides whether dense `i128` accumulation is safe: the bounding box
/// of all composite offsets must stay under [`DENSE_CELL_CAP`] cells,
/// and the largest possible partial sum, bounded by
/// `max|outer| * max|inner| * min(support sizes)`, must fit an `i128`
/// with room to spare.
fn dense_plan(
    outer: &[(Offset, BigInt)],
    inner: &[(Offset, BigInt)],
    d: i64,
    dim: usize,
) -> Option<DensePlan> {
    let bounds = |entries: &[(Offset, BigInt)]| {
        let mut lo = entries[0].0.clone();
        let mut hi = entries[0].0.clone();
        for (o, _) in entries {
            for k in 0..dim {
                lo[k] = lo[k].min(o[k]);
                hi[k] = hi[k].max(o[k]);
            }
        }
        (lo, hi)
    };
    let (olo, ohi) = bounds(outer);
    let (ilo, ihi) = bounds(inner);
    let lo: Vec<i64> = (0..dim).map(|k| olo[k].checked_mul(d)?.checked_add(ilo[k])).collect::<Option<_>>()?;
    let hi: Vec<i64> = (0..dim).map(|k| ohi[k].checked_mul(d)?.checked_add(ihi[k])).collect::<Option<_>>()?;
    let mut cells = 1usize;
    let mut strides = vec![0i64; dim];
    for k in (0..dim).rev() {
        strides[k] = cells as i64;
        let side = usize::try_from(hi[k] - lo[k] + 1).ok()?;
        cells = cells.checked_mul(side)?;
        if cells > DENSE_CELL_CAP {
            return None;
        }
    }
    let max_abs = |entries: &[(Offset, BigInt)]| {
        entries.iter().fold(BigInt::zero(), |acc, (_, n)| acc.max(n.abs()))
    };
    let terms_per_cell = outer.len().min(inner.len());
    let bound = max_abs(outer) * max_abs(inner) * BigInt::from(terms_per_cell);
    if bound >= BigInt::from(i128::MAX >> 1) {
        return None;
    }
    Some(DensePlan { lo, strides, cells })
}

/// Accumulates composite sums in a flat `i128` buffer. The caller's
/// [`dense_plan`] guarantees no index lands outside the buffer and no
/// partial sum overflows.
fn compose_dense(
    outer: &[(Offset, BigInt)],
    inner: &[(Offset, BigInt)],
    d: i64,
    plan: &DensePlan,
) -> Vec<(Offset, BigInt)> {
    let dim = plan.lo.len();
    let inner_parts: Vec<(i64, i128)> = inner
        .iter()
        .map(|(t, n)| {
            let part: i64 = t.iter().zip(&plan.strides).map(|(tk, s)| tk * s).sum();
            (part, n.to_i128().expect("dense_plan bounds the magnitudes"))
        })
        .collect();
    let mut dense = vec![0i128; plan.cells];
    for (r, nr_big) in outer {
        let nr = nr_big.to_i128().expect("dense_plan bounds the magnitudes");
        let base: i64 = (0..dim).map(|k| (r[k] * d - plan.lo[k]) * plan.strides[k]).sum();
        for (part, nt) in &inner_parts {
            let idx = (base + part) as usize;
            debug_assert!(idx < plan.cells);
            dense[idx] += nr * nt;
        }
    }
    let mut out = Vec::new();
    for (idx, n) in dense.iter().enumerate() {
        if *n == 0 {
            continue;
        }
        let mut rem = idx as i64;
        let offset: Offset = (0..dim)
            .map(|k| {
                let q = plan.lo[k] + rem / plan.strides[k];
                rem %= plan.strides[k];
                q
            })
            .collect();
        out.push((offset, BigInt::from(*n)));
    }
    out
}

/// Accumulates composite sums in a map, exact for any magnitudes and
/// any support geometry.
fn compose_sparse(
    outer: &[(Offset, BigInt)],
    inner: &[(Offset, BigInt)],
    d: i64,
) -> Vec<(Offset, BigInt)> {
    let mut sums: BTreeMap<Offset, BigInt> = BTreeMap::new();
    for (r, nr) in outer {
        for (t, nt) in inner {
            let offset: Offset = r.iter().zip(t.iter()).map(|(ri, ti)| ri * d + ti).collect();
            let entry = sums.entry(offset).or_insert_with(BigInt::zero);
            *entry += nr * nt;
        }
    }
    sums.into_iter().collect()
}

/// `s`-fold self-composition, a stencil with factor `d^s`.
pub fn iterate(stencil: &WeightStencil, s: u32) -> Result<WeightStencil, EngineError> {
    if s < 1 {
        return Err(EngineError::BadIterationCount);
    }
    let mut acc = stencil.clone();
    for _ in 1..s {
        acc = compose(&acc, stencil)?;
    }
    Ok(acc)
}

fn validate_profiles(profiles: &[WeightStencil]) -> Result<(i64, crate::index::Convention), EngineError> {
    let first = profiles.first().ok_or(EngineError::DimensionMismatch { stencil: 0, field: 0 })?;
    for p in profiles {
        if p.dim() != 1 {
            return Err(EngineError::Stencil(StencilError::NotAProfile { dim: p.dim() }));
        }
        if p.factor() != first.factor() || p.convention() != first.convention() {
            return Err(EngineError::Stencil(StencilError::MismatchedProfiles));
        }
    }
    Ok((first.factor(), first.convention()))
}

fn contracted_axis_bounds(profile: &WeightStencil, lo: i64, hi: i64, axis: usize)
    -> Result<(i64, i64), EngineError>
{
    let support = profile.support_box();
    let d = profile.factor();
    let a_min = ceil_div(lo - support.lo()[0], d);
    let a_max = floor_div(hi - support.hi()[0], d);
    if a_min > a_max {
        return Err(EngineError::EmptyOutput { axis });
    }
    Ok((a_min, a_max))
}

/// Applies a tensor-product stencil one axis at a time.
///
/// For rational fields the result is bit-identical to
/// `apply(tensor_product(profiles), field)`; the cost drops from one
/// sum over the full product support per output cell to `D` short
/// per-axis sums.
pub fn apply_separable(
    profiles: &[WeightStencil],
    field: &CellField<Rat>,
) -> Result<CellField<Rat>, EngineError> {
    let (d, convention) = validate_profiles(profiles)?;
    if profiles.len() != field.dim() {
        return Err(EngineError::DimensionMismatch { stencil: profiles.len(), field: field.dim() });
    }
    if convention != field.convention() {
        return Err(EngineError::ConventionMismatch);
    }

    let mut bounds: Vec<(i64, i64)> =
        field.extent().lo().iter().zip(field.extent().hi()).map(|(&l, &h)| (l, h)).collect();
    let mut values: Vec<Rat> = field.values().to_vec();
    let mut current =
        IndexBox::new(bounds.iter().map(|b| b.0).collect(), bounds.iter().map(|b| b.1).collect())
            .expect("field extent is a valid box");

    for (axis, profile) in profiles.iter().enumerate() {
        let (a_min, a_max) = contracted_axis_bounds(profile, bounds[axis].0, bounds[axis].1, axis)?;
        bounds[axis] = (a_min, a_max);
        let next = IndexBox::new(
            bounds.iter().map(|b| b.0).collect(),
            bounds.iter().map(|b| b.1).collect(),
        )
        .expect("per-axis bounds were checked");
        let mut out = Vec::with_capacity(next.num_cells());
        let mut fine = vec![0i64; field.dim()];
        for cell in next.iter() {
            let mut acc = rat_int(0);
            for (t, w) in profile.support() {
                fine.copy_from_slice(&cell);
                fine[axis] = d * cell[axis] + t[0];
                let rank = current.rank_of(&fine).expect("support stays inside the input");
                acc += w * &values[rank];
            }
            out.push(acc);
        }
        values = out;
        current = next;
    }

    let coarse = field.scale().coarsen(d)?;
    CellField::from_values(coarse, convention, current, values)
        .map_err(|e| EngineError::Internal(e.to_string()))
}

/// Floating-point counterpart of [`apply_separable`].
///
/// Per element the result stays within 4 units in the last place of
/// [`apply_f64`] on the same inputs whenever the weighted sum is
/// well conditioned. When a sum cancels catastrophically (exact value
/// far below the magnitude of its terms) both paths lose significance
/// together and the agreement degrades in proportion; no summation
/// order can promise ulp-level agreement there.
pub fn apply_separable_f64(
    profiles: &[WeightStencil],
    field: &CellField<f64>,
) -> Result<CellField<f64>, EngineError> {
    let (d, convention) = validate_profiles(profiles)?;
    if profiles.len() != field.dim() {
        return Err(EngineError::DimensionMismatch { stencil: profiles.len(), field: field.dim() });
    }
    if convention != field.convention() {
        return Err(EngineError::ConventionMismatch);
    }

    let mut bounds: Vec<(i64, i64)> =
        field.extent().lo().iter().zip(field.extent().hi()).map(|(&l, &h)| (l, h)).collect();
    let mut values: Vec<f64> = field.values().to_vec();
    let mut current =
        IndexBox::new(bounds.iter().map(|b| b.0).collect(), bounds.iter().map(|b| b.1).collect())
            .expect("field extent is a valid box");

    for (axis, profile) in profiles.iter().enumerate() {
        let (a_min, a_max) = contracted_axis_bounds(profile, bounds[axis].0, bounds[axis].1, axis)?;
        bounds[axis] = (a_min, a_max);
        let next = IndexBox::new(
            bounds.iter().map(|b| b.0).collect(),
            bounds.iter().map(|b| b.1).collect(),
        )
        .expect("per-axis bounds were checked");
        let plan = FloatPlan::of(profile);
        let mut out = Vec::with_capacity(next.num_cells());
        let mut fine = vec![0i64; field.dim()];
        for cell in next.iter() {
            let mut sum = 0.0;
            let mut comp = 0.0;
            for (t, w) in &plan.entries {
                fine.copy_from_slice(&cell);
                fine[axis] = d * cell[axis] + t[0];
                let rank = current.rank_of(&fine).expect("support stays inside the input");
                kahan_step(&mut sum, &mut comp, w * values[rank]);
            }
            out.push(sum / plan.norm);
        }
        values = out;
        current = next;
    }

    let coarse = field.scale().coarsen(d)?;
    CellField::from_values(coarse, convention, current, values)
        .map_err(|e| EngineError::Internal(e.to_string()))
}

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("stencil dimension {stencil} does not match field dimension {field}")]
    DimensionMismatch { stencil: usize, field: usize },
    #[error("stencil and field use different cell labelling conventions")]
    ConventionMismatch,
    #[error("no output cell has its full support inside the input extent (axis {axis})")]
    EmptyOutput { axis: usize },
    #[error("iteration count must be at least 1")]
    BadIterationCount,
    #[error(transparent)]
    Scale(#[from] ScaleError),
    #[error(transparent)]
    Stencil(#[from] StencilError),
    #[error("internal error: {0}")]
    Internal(String),
}
