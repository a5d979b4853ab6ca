//! The bridge between smooth functions and lattice fields.
//!
//! A function on `R^D` enters the lattice hierarchy by cell sampling
//! against the triangular (hat) kernel `hat(x) = max(0, 1 - |x|)`: the
//! value stored at a cell with center `c` on the lattice of spacing `z`
//! is `integral of f(x) * prod_k hat((x_k - c_k) / z) / z dx`. The hat
//! kernel obeys an exact refinement identity,
//!
//! ```text
//! hat(x / d) = sum over |i| <= d-1 of ((d - |i|) / d) * hat(x - i),
//! ```
//!
//! machine-checked by [`hat_refinement_check`]. The coefficients
//! `(d - |i|) / d` are `d` times the centered averaging weights in one
//! dimension, which is exactly why centered averaging commutes with
//! sampling: averaging the samples at spacing `z` with factor `d`
//! reproduces the samples at spacing `d * z`, for any integrable
//! function ([`commute_check`]). Uniform corner averaging satisfies no
//! such identity and leaves a residual ([`scheme_commute_check`]
//! reports it).
//!
//! For polynomials of per-axis degree at most 3 the sampling integral
//! is evaluated in exact rational arithmetic through the kernel's
//! central moments (1, 0, `z*z/6`, 0); that is the polynomial cap
//! enforced by [`SampledPolynomial`]. Other smooth functions go through
//! floating-point composite Simpson quadrature ([`hat_sample_f64`]),
//! which is approximate and never used in exact checks.
//!
//! Multiscale structure is packaged as a [`Tower`]: a base field with a
//! chain of averaged levels, one per factor. For a coherent family the
//! tower is path-independent: factoring the total scale change
//! differently changes intermediate levels but not the final one.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::Signed;
use serde::Serialize;

use crate::engine::{apply, EngineError};
use crate::field::{CellField, ScaleFraction};
use crate::index::{Convention, IndexBox};
use crate::rational::{format_rat, rat, rat_int, serialize_rat, to_f64, Rat};
use crate::scale::{Scale, ScaleError};
use crate::schemes::{SchemeError, SchemeKind, StencilFamily};

/// Highest per-axis degree with exact hat-kernel moments.
pub const MAX_AXIS_DEGREE: u32 = 3;

/// Panels per axis per cell in the floating quadrature path.
pub const SIMPSON_PANELS: usize = 1 << 10;

/// A `D`-variate polynomial with rational coefficients, restricted to
/// per-axis degree at most [`MAX_AXIS_DEGREE`] so that hat-kernel cell
/// sampling stays in exact rational arithmetic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampledPolynomial {
    dim: usize,
    terms: BTreeMap<Vec<u32>, Rat>,
}

impl SampledPolynomial {
    /// Builds a polynomial from `(exponents, coefficient)` terms.
    /// Duplicate exponent vectors accumulate; zero terms are dropped.
    pub fn new(
        dim: usize,
        terms: impl IntoIterator<Item = (Vec<u32>, Rat)>,
    ) -> Result<Self, ContinuumError> {
        if dim < 1 {
            return Err(ContinuumError::DimensionMismatch { expected: 1, got: dim });
        }
        let mut map: BTreeMap<Vec<u32>, Rat> = BTreeMap::new();
        for (exps, coeff) in terms {
            if exps.len() != dim {
                return Err(ContinuumError::DimensionMismatch { expected: dim, got: exps.len() });
            }
            for (axis, &e) in exps.iter().enumerate() {
                if e > MAX_AXIS_DEGREE {
                    return Err(ContinuumError::DegreeTooHigh { axis, degree: e });
                }
            }
            let entry = map.entry(exps).or_insert_with(|| rat_int(0));
            *entry += coeff;
        }
        map.retain(|_, c| *c != rat_int(0));
        Ok(Self { dim, terms: map })
    }

    /// The constant polynomial `value`.
    pub fn constant(dim: usize, value: Rat) -> Result<Self, ContinuumError> {
        Self::new(dim, [(vec![0; dim], value)])
    }

    /// The monomial `prod_k x_k^{exps[k]}`.
    pub fn monomial(exps: Vec<u32>) -> Result<Self, ContinuumError> {
        let dim = exps.len();
        Self::new(dim, [(exps, rat_int(1))])
    }

    /// Parses a polynomial in the variables `x`, `y`, `z` (axes 0, 1,
    /// 2). Terms are joined by `+` or `-`; a term is a `*`-separated
    /// product of rational constants (`p` or `p/q`) and powers
    /// (`x`, `x^2`). Example: `x^2*y - 3/4*x + 1`.
    pub fn parse(text: &str, dim: usize) -> Result<Self, ContinuumError> {
        let terms = parse_polynomial_terms(text, dim)?;
        Self::new(dim, terms)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Terms as `(per-axis exponents, coefficient)`, sorted.
    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &Rat)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Exact evaluation at a rational point.
    pub fn eval(&self, point: &[Rat]) -> Result<Rat, ContinuumError> {
        if point.len() != self.dim {
            return Err(ContinuumError::DimensionMismatch { expected: self.dim, got: point.len() });
        }
        let mut acc = rat_int(0);
        for (exps, coeff) in &self.terms {
            let mut term = coeff.clone();
            for (k, &e) in exps.iter().enumerate() {
                for _ in 0..e {
                    term *= &point[k];
                }
            }
            acc += term;
        }
        Ok(acc)
    }

    /// Evaluation with `f64` inputs, for quadrature cross-checks.
    pub fn eval_f64(&self, point: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (exps, coeff) in &self.terms {
            let mut term = to_f64(coeff);
            for (k, &e) in exps.iter().enumerate() {
                term *= point[k].powi(e as i32);
            }
            acc += term;
        }
        acc
    }
}

fn axis_name(axis: usize) -> String {
    match axis {
        0 => "x".into(),
        1 => "y".into(),
        2 => "z".into(),
        k => format!("x{k}"),
    }
}

impl fmt::Display for SampledPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0/1");
        }
        for (position, (exps, coeff)) in self.terms.iter().enumerate() {
            if position == 0 {
                if coeff.is_negative() {
                    f.write_str("-")?;
                }
            } else if coeff.is_negative() {
                f.write_str(" - ")?;
            } else {
                f.write_str(" + ")?;
            }
            write!(f, "{}", format_rat(&coeff.abs()))?;
            for (axis, &e) in exps.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                write!(f, "*{}", axis_name(axis))?;
                if e > 1 {
                    write!(f, "^{e}")?;
                }
            }
        }
        Ok(())
    }
}

/// Tokenized term parser for [`SampledPolynomial::parse`].
fn parse_polynomial_terms(
    text: &str,
    dim: usize,
) -> Result<Vec<(Vec<u32>, Rat)>, ContinuumError> {
    let err = |position: usize, reason: &str| ContinuumError::Parse {
        position,
        reason: reason.to_owned(),
    };
    let bytes = text.as_bytes();
    let mut pos = 0usize;
    let skip_space = |pos: &mut usize| {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
    };
    let read_uint = |pos: &mut usize| -> Option<String> {
        let start = *pos;
        while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
            *pos += 1;
        }
        (*pos > start).then(|| text[start..*pos].to_owned())
    };

    // Folds any run of leading `+`/`-` signs into one.
    let read_signs = |pos: &mut usize, sign: &mut Rat| {
        skip_space(pos);
        while *pos < bytes.len() && (bytes[*pos] == b'+' || bytes[*pos] == b'-') {
            if bytes[*pos] == b'-' {
                *sign = -sign.clone();
            }
            *pos += 1;
            skip_space(pos);
        }
    };

    let mut terms = Vec::new();
    skip_space(&mut pos);
    if pos == bytes.len() {
        return Err(err(pos, "empty polynomial"));
    }
    let mut sign = rat_int(1);
    read_signs(&mut pos, &mut sign);
    loop {
        // One term: '*'-separated factors.
        let mut coeff = sign.clone();
        let mut exps = vec![0u32; dim];
        let mut saw_factor = false;
        loop {
            skip_space(&mut pos);
            if pos >= bytes.len() {
                break;
            }
            let c = bytes[pos];
            if c.is_ascii_digit() {
                let start = pos;
                let numer = read_uint(&mut pos).expect("digit seen");
                let mut denom = String::from("1");
                skip_space(&mut pos);
                if pos < bytes.len() && bytes[pos] == b'/' {
                    pos += 1;
                    skip_space(&mut pos);
                    denom = read_uint(&mut pos)
                        .ok_or_else(|| err(pos, "expected a denominator after `/`"))?;
                }
                let n: num_bigint::BigInt =
                    numer.parse().map_err(|_| err(start, "numerator out of range"))?;
                let d: num_bigint::BigInt =
                    denom.parse().map_err(|_| err(start, "denominator out of range"))?;
                if d == num_bigint::BigInt::from(0) {
                    return Err(err(start, "denominator is zero"));
                }
                coeff *= Rat::new(n, d);
            } else if c == b'x' || c == b'y' || c == b'z' {
                let axis = match c {
                    b'x' => 0usize,
                    b'y' => 1,
                    _ => 2,
                };
                if axis >= dim {
                    return Err(err(
                        pos,
                        &format!("variable `{}` needs dimension at least {}", c as char, axis + 1),
                    ));
                }
                pos += 1;
                let mut power = 1u32;
                skip_space(&mut pos);
                if pos < bytes.len() && bytes[pos] == b'^' {
                    pos += 1;
                    skip_space(&mut pos);
                    let digits =
                        read_uint(&mut pos).ok_or_else(|| err(pos, "expected an exponent"))?;
                    power = digits.parse().map_err(|_| err(pos, "exponent out of range"))?;
                }
                exps[axis] = exps[axis]
                    .checked_add(power)
                    .ok_or_else(|| err(pos, "exponent out of range"))?;
            } else {
                return Err(err(pos, "expected a number or a variable"));
            }
            saw_factor = true;
            skip_space(&mut pos);
            if pos < bytes.len() && bytes[pos] == b'*' {
                pos += 1;
                continue;
            }
            break;
        }
        if !saw_factor {
            return Err(err(pos, "expected a term"));
        }
        terms.push((exps, coeff));
        skip_space(&mut pos);
        if pos >= bytes.len() {
            break;
        }
        if bytes[pos] != b'+' && bytes[pos] != b'-' {
            return Err(err(pos, "expected `+` or `-` between terms"));
        }
        sign = rat_int(1);
        read_signs(&mut pos, &mut sign);
        if pos >= bytes.len() {
            return Err(err(pos, "expected a term after the sign"));
        }
    }
    Ok(terms)
}

/// The triangular kernel `max(0, 1 - |x|)`, exactly.
pub fn hat(x: &Rat) -> Rat {
    let v = rat_int(1) - x.abs();
    if v.is_negative() {
        rat_int(0)
    } else {
        v
    }
}

/// Checks the refinement identity
/// `hat(x/d) = sum over |i| <= d-1 of ((d - |i|)/d) * hat(x - i)`
/// by exact evaluation at every integer in `[-d, d]`.
///
/// Node equality implies the full identity: both sides are piecewise
/// linear with all breakpoints at integers of `[-d, d]` (the left side
/// breaks at `-d, 0, d`; each summand breaks at `i-1, i, i+1`), and
/// both vanish identically outside that interval, so agreeing at the
/// nodes pins every linear piece.
pub fn hat_refinement_check(d: i64) -> Result<bool, ContinuumError> {
    if d < 1 {
        return Err(ContinuumError::BadFactor { d });
    }
    for x in -d..=d {
        let left = hat(&rat(x, d));
        let mut right = rat_int(0);
        for i in -(d - 1)..=(d - 1) {
            right += rat(d - i.abs(), d) * hat(&rat_int(x - i));
        }
        if left != right {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Moment `integral of x^e * hat((x - c)/z) / z dx` for `e <= 3`.
///
/// In central form the kernel's moments are `1, 0, z*z/6, 0`, giving
/// `1`, `c`, `c*c + z*z/6`, and `c*c*c + 3*c*(z*z/6)`.
fn hat_moment(e: u32, c: &Rat, z: &Rat) -> Rat {
    match e {
        0 => rat_int(1),
        1 => c.clone(),
        2 => c * c + z * z / rat_int(6),
        3 => c * c * c + c * (z * z) / rat_int(2),
        _ => unreachable!("SampledPolynomial caps per-axis degree at {MAX_AXIS_DEGREE}"),
    }
}

/// The center of cell `a` along one axis: `a * z` for centered
/// labelling, `(a + 1/2) * z` for corner labelling.
fn cell_center(a: i64, z: &Rat, convention: Convention) -> Rat {
    match convention {
        Convention::Centered => rat_int(a) * z,
        Convention::Corner => (rat_int(a) + rat(1, 2)) * z,
    }
}

/// Samples a polynomial onto the lattice of spacing `z` by exact
/// hat-kernel cell averaging: the value at cell `a` is
/// `integral of p(x) * prod_k hat((x_k - c_k)/z) / z dx` with `c` the
/// cell center under `convention`.
pub fn hat_sample(
    p: &SampledPolynomial,
    z: &Scale,
    convention: Convention,
    extent: &IndexBox,
) -> Result<CellField<Rat>, ContinuumError> {
    if extent.dim() != p.dim() {
        return Err(ContinuumError::DimensionMismatch { expected: p.dim(), got: extent.dim() });
    }
    let zv = z.value().clone();
    Ok(CellField::from_fn(z.clone(), convention, extent.clone(), |a| {
        let centers: Vec<Rat> = a.iter().map(|&ak| cell_center(ak, &zv, convention)).collect();
        let mut acc = rat_int(0);
        for (exps, coeff) in &p.terms {
            let mut term = coeff.clone();
            for (k, &e) in exps.iter().enumerate() {
                term *= hat_moment(e, &centers[k], &zv);
            }
            acc += term;
        }
        acc
    }))
}

/// Hat-kernel sampling of an arbitrary function by composite Simpson
/// quadrature with [`SIMPSON_PANELS`] panels per axis per cell.
///
/// Approximate, unlike [`hat_sample`]: the kernel's kink sits on a
/// panel boundary, so the error for smooth integrands is the usual
/// fourth-order Simpson remainder, but no exact-arithmetic guarantee is
/// made and this path is never used in exact checks.
pub fn hat_sample_f64(
    f: impl Fn(&[f64]) -> f64,
    z: &Scale,
    convention: Convention,
    extent: &IndexBox,
) -> Result<CellField<f64>, ContinuumError> {
    let dim = extent.dim();
    let zf = to_f64(z.value());
    let n = SIMPSON_PANELS;
    let h = 2.0 * zf / n as f64;
    let mut point = vec![0.0f64; dim];
    Ok(CellField::from_fn(z.clone(), convention, extent.clone(), |a| {
        let axis_nodes: Vec<Vec<(f64, f64)>> = a
            .iter()
            .map(|&ak| {
                let c = match convention {
                    Convention::Centered => ak as f64 * zf,
                    Convention::Corner => (ak as f64 + 0.5) * zf,
                };
                (0..=n)
                    .map(|i| {
                        let x = c - zf + i as f64 * h;
                        let simpson = if i == 0 || i == n {
                            1.0
                        } else if i % 2 == 1 {
                            4.0
                        } else {
                            2.0
                        };
                        let kernel = (1.0 - (x - c).abs() / zf).max(0.0) / zf;
                        (x, simpson * h / 3.0 * kernel)
                    })
                    .collect()
            })
            .collect();
        tensor_quadrature(&f, &axis_nodes, &mut point, 0)
    }))
}

fn tensor_quadrature(
    f: &impl Fn(&[f64]) -> f64,
    axis_nodes: &[Vec<(f64, f64)>],
    point: &mut [f64],
    axis: usize,
) -> f64 {
    if axis == axis_nodes.len() {
        return f(point);
    }
    let mut sum = 0.0;
    let mut comp = 0.0;
    for &(x, w) in &axis_nodes[axis] {
        if w == 0.0 {
            continue;
        }
        point[axis] = x;
        let term = w * tensor_quadrature(f, axis_nodes, point, axis + 1);
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum
}

/// One coarse cell where averaging the samples disagrees with sampling
/// at the coarse scale.
#[derive(Debug, Clone, Serialize)]
pub struct CellResidual {
    pub cell: Vec<i64>,
    /// Averaged-samples value minus direct coarse sample.
    #[serde(serialize_with = "serialize_rat")]
    pub residual: Rat,
}

/// Outcome of a sampling commutation check: whether averaging the fine
/// samples reproduces the coarse samples, cell by cell, exactly.
#[derive(Debug, Clone, Serialize)]
pub struct CommuteReport {
    pub scheme: SchemeKind,
    pub factor: i64,
    pub fine_scale: ScaleFraction,
    pub coarse_extent: IndexBox,
    pub cells_compared: usize,
    /// Cells with nonzero residual; empty means exact commutation.
    pub residuals: Vec<CellResidual>,
}

impl CommuteReport {
    pub fn commutes(&self) -> bool {
        self.residuals.is_empty()
    }
}

/// Checks that centered averaging commutes with hat sampling:
/// `apply(bf stencil, hat_sample(p, z))` must equal
/// `hat_sample(p, d * z)` exactly on the output extent.
pub fn commute_check(
    p: &SampledPolynomial,
    z: &Scale,
    d: i64,
    extent: &IndexBox,
) -> Result<CommuteReport, ContinuumError> {
    scheme_commute_check(SchemeKind::Bf, p, z, d, extent)
}

/// The same commutation comparison for any catalogue scheme. The hat
/// refinement identity matches the centered weights, so `bf` commutes
/// for every polynomial; uniform corner averaging does not, and this
/// report carries its residuals.
pub fn scheme_commute_check(
    kind: SchemeKind,
    p: &SampledPolynomial,
    z: &Scale,
    d: i64,
    extent: &IndexBox,
) -> Result<CommuteReport, ContinuumError> {
    let family = StencilFamily::new(kind, p.dim())?;
    let stencil = family.stencil(d)?;
    let fine = hat_sample(p, z, family.convention(), extent)?;
    let averaged = apply(&stencil, &fine)?;
    let direct = hat_sample(p, averaged.scale(), family.convention(), averaged.extent())?;
    let mut residuals = Vec::new();
    for (cell, (va, vd)) in averaged
        .extent()
        .iter()
        .zip(averaged.values().iter().zip(direct.values()))
    {
        let r = va - vd;
        if r != rat_int(0) {
            residuals.push(CellResidual { cell, residual: r });
        }
    }
    Ok(CommuteReport {
        scheme: kind,
        factor: d,
        fine_scale: ScaleFraction::of(z),
        coarse_extent: averaged.extent().clone(),
        cells_compared: averaged.values().len(),
        residuals,
    })
}

/// One averaged level of a [`Tower`].
#[derive(Debug, Clone)]
pub struct TowerLevel {
    /// Factor applied to the previous level.
    pub factor: i64,
    /// Product of all factors from the base up to this level.
    pub cumulative_factor: i64,
    pub field: CellField<Rat>,
}

/// A base field with a chain of successively averaged levels, one per
/// factor, all from one scheme family. Built by [`build_tower`]; each
/// level is the family stencil applied to the level before it.
#[derive(Debug, Clone)]
pub struct Tower {
    family: StencilFamily,
    base: CellField<Rat>,
    levels: Vec<TowerLevel>,
}

impl Tower {
    pub fn family(&self) -> &StencilFamily {
        &self.family
    }

    pub fn base(&self) -> &CellField<Rat> {
        &self.base
    }

    pub fn levels(&self) -> &[TowerLevel] {
        &self.levels
    }

    /// The coarsest field: the last level, or the base if no factors
    /// were applied.
    pub fn top(&self) -> &CellField<Rat> {
        self.levels.last().map(|l| &l.field).unwrap_or(&self.base)
    }
}

/// Averages `base` through `factors` in order, recording every level.
///
/// Fails with [`ContinuumError::ExtentExhausted`] when a level's extent
/// has no cell whose support fits in the previous level; the error
/// carries how many levels were achieved.
pub fn build_tower(
    base: CellField<Rat>,
    family: &StencilFamily,
    factors: &[i64],
) -> Result<Tower, ContinuumError> {
    if family.dim() != base.dim() {
        return Err(ContinuumError::DimensionMismatch {
            expected: family.dim(),
            got: base.dim(),
        });
    }
    if family.convention() != base.convention() {
        return Err(ContinuumError::ConventionMismatch);
    }
    let mut levels = Vec::with_capacity(factors.len());
    let mut current = base.clone();
    let mut cumulative = 1i64;
    for (achieved, &d) in factors.iter().enumerate() {
        let stencil = family.stencil(d)?;
        cumulative = cumulative
            .checked_mul(d)
            .ok_or(ContinuumError::FactorOverflow { factor: d })?;
        let next = match apply(&stencil, &current) {
            Ok(field) => field,
            Err(EngineError::EmptyOutput { .. }) => {
                return Err(ContinuumError::ExtentExhausted { achieved, factor: d });
            }
            Err(e) => return Err(ContinuumError::Engine(e)),
        };
        levels.push(TowerLevel { factor: d, cumulative_factor: cumulative, field: next.clone() });
        current = next;
    }
    Ok(Tower { family: family.clone(), base, levels })
}

#[derive(Debug, thiserror::Error)]
pub enum ContinuumError {
    #[error("refinement factor must be at least 1, got {d}")]
    BadFactor { d: i64 },
    #[error("axis {axis} has degree {degree}; exact hat moments stop at degree {MAX_AXIS_DEGREE}")]
    DegreeTooHigh { axis: usize, degree: u32 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("family and base field use different cell labelling conventions")]
    ConventionMismatch,
    #[error("product of tower factors overflows at factor {factor}")]
    FactorOverflow { factor: i64 },
    #[error("tower stops after {achieved} level(s): factor {factor} leaves no coarse cells")]
    ExtentExhausted { achieved: usize, factor: i64 },
    #[error("cannot parse polynomial at byte {position}: {reason}")]
    Parse { position: usize, reason: String },
    #[error(transparent)]
    Scale(#[from] ScaleError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
}
