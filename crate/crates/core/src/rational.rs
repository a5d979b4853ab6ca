//! Exact rational scalars used throughout the crate.
//!
//! Every weight, scale, and exact field value is a [`Rat`]
//! (an arbitrary-precision `BigRational`). Identities between averaging
//! operators are checked with zero tolerance, so nothing in the algebraic
//! layer is ever represented in floating point; `f64` appears only at
//! application time via [`to_f64`].

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact rational scalar.
pub type Rat = BigRational;

/// Shorthand for `p/q` from machine integers.
///
/// Panics if `q == 0`, like `BigRational::new`.
pub fn rat(p: i64, q: i64) -> Rat {
    Rat::new(BigInt::from(p), BigInt::from(q))
}

/// Shorthand for the integer `n` as a rational.
pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Formats a rational as `p/q` with `q > 0` and the fraction reduced.
///
/// Integers are written `p/1` so the textual form is uniform; parsers
/// accept a bare `p` as well (see [`parse_rat`]).
pub fn format_rat(r: &Rat) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Parses `p/q` or a bare integer `p`.
pub fn parse_rat(s: &str) -> Result<Rat, RatParseError> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), Some(d.trim())),
        None => (s, None),
    };
    let p: BigInt = num
        .parse()
        .map_err(|_| RatParseError::new(s, "numerator is not an integer"))?;
    let q: BigInt = match den {
        Some(d) => d
            .parse()
            .map_err(|_| RatParseError::new(s, "denominator is not an integer"))?,
        None => BigInt::from(1),
    };
    if q.is_zero() {
        return Err(RatParseError::new(s, "denominator is zero"));
    }
    Ok(Rat::new(p, q))
}

/// Exact sum of rationals.
///
/// Accumulates over a running common denominator so each term costs at
/// most one gcd, instead of the full reduction a chain of `+` performs;
/// the single reduction happens at the end.
pub fn rat_sum<'a, I>(values: I) -> Rat
where
    I: IntoIterator<Item = &'a Rat>,
{
    let mut num = BigInt::zero();
    let mut den = BigInt::one();
    for v in values {
        if *v.denom() == den {
            num += v.numer();
        } else {
            let g = den.gcd(v.denom());
            let lift = v.denom() / &g;
            num = num * &lift + v.numer() * (&den / &g);
            den *= lift;
        }
    }
    Rat::new(num, den)
}

/// Nearest-double conversion. Exact integers up to 2^53 convert exactly.
pub fn to_f64(r: &Rat) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // Fall back to a quotient of leading digits for out-of-range parts.
        let n = r.numer().to_f64().unwrap_or(f64::MAX.copysign(if r.numer().is_negative() { -1.0 } else { 1.0 }));
        let d = r.denom().to_f64().unwrap_or(f64::MAX);
        n / d
    })
}

/// Serde helper: emits a rational as its `p/q` string form.
pub fn serialize_rat<S: serde::Serializer>(r: &Rat, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format_rat(r))
}

/// Malformed rational literal.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid rational `{input}`: {reason}")]
pub struct RatParseError {
    pub input: String,
    pub reason: &'static str,
}

impl RatParseError {
    fn new(input: &str, reason: &'static str) -> Self {
        Self { input: input.to_owned(), reason }
    }
}
