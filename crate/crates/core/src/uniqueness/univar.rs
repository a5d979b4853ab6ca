//! Univariate root analysis for the branch solver.
//!
//! Two exact questions are answered about a univariate rational
//! polynomial: how many distinct real roots it has (Sturm chain), and
//! which of those roots are rational (rational root theorem). When the
//! two counts differ, the polynomial has an irrational real root and
//! the caller must treat the branch as inconclusive rather than
//! silently dropping solutions.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::rational::{rat_int, Rat};

use super::poly::Poly;

/// Dense coefficient vector, index = degree, trailing zeros trimmed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UniPoly {
    coeffs: Vec<Rat>,
}

impl UniPoly {
    pub fn new(mut coeffs: Vec<Rat>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        UniPoly { coeffs }
    }

    /// Extracts the dense form of a polynomial known to mention only
    /// the variable `v` (constants allowed). `None` if another
    /// variable appears.
    pub fn from_poly(p: &Poly, v: u32) -> Option<UniPoly> {
        let vars = p.vars();
        if vars.iter().any(|&w| w != v) {
            return None;
        }
        let coeffs = p
            .coeffs_in(v)
            .into_iter()
            .map(|c| c.as_constant())
            .collect::<Option<Vec<_>>>()?;
        Some(UniPoly::new(coeffs))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, x: &Rat) -> Rat {
        let mut acc = rat_int(0);
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    fn leading(&self) -> &Rat {
        self.coeffs.last().expect("nonzero polynomial")
    }

    fn derivative(&self) -> UniPoly {
        if self.coeffs.len() <= 1 {
            return UniPoly::new(Vec::new());
        }
        UniPoly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * rat_int(k as i64))
                .collect(),
        )
    }

    /// Remainder of `self` divided by nonzero `other`.
    fn rem(&self, other: &UniPoly) -> UniPoly {
        let d = other.degree();
        let lead = other.leading();
        let mut r = self.coeffs.clone();
        while r.last().is_some_and(|c| c.is_zero()) {
            r.pop();
        }
        while r.len() > d {
            let k = r.len() - 1;
            let factor = r[k].clone() / lead;
            for (j, c) in other.coeffs.iter().enumerate() {
                let delta = &factor * c;
                r[k - d + j] -= delta;
            }
            while r.last().is_some_and(|c| c.is_zero()) {
                r.pop();
            }
        }
        UniPoly::new(r)
    }

    /// Number of distinct real roots, via the sign variation of the
    /// Sturm chain at minus and plus infinity.
    pub fn count_real_roots(&self) -> usize {
        if self.is_zero() || self.degree() == 0 {
            return 0;
        }
        let mut chain = vec![self.clone(), self.derivative()];
        loop {
            let n = chain.len();
            if chain[n - 1].is_zero() {
                chain.pop();
                break;
            }
            let r = chain[n - 2].rem(&chain[n - 1]);
            if r.is_zero() {
                break;
            }
            chain.push(UniPoly::new(r.coeffs.iter().map(|c| -c.clone()).collect()));
        }
        let sign_at = |p: &UniPoly, at_plus_infinity: bool| -> i32 {
            if p.is_zero() {
                return 0;
            }
            let lead = p.leading();
            let mut s = if lead.is_positive() { 1 } else { -1 };
            if !at_plus_infinity && p.degree() % 2 == 1 {
                s = -s;
            }
            s
        };
        let variations = |at_plus: bool| -> usize {
            let mut count = 0;
            let mut prev = 0;
            for p in &chain {
                let s = sign_at(p, at_plus);
                if s != 0 {
                    if prev != 0 && s != prev {
                        count += 1;
                    }
                    prev = s;
                }
            }
            count
        };
        variations(false) - variations(true)
    }

    /// All rational roots (distinct), or `None` when the coefficient
    /// integers are too large to factor by trial division.
    pub fn rational_roots(&self) -> Option<Vec<Rat>> {
        if self.is_zero() {
            return None;
        }
        if self.degree() == 0 {
            return Some(Vec::new());
        }
        // Clear denominators to integer coefficients.
        let mut denom_lcm = BigInt::one();
        for c in &self.coeffs {
            denom_lcm = denom_lcm.lcm(c.denom());
        }
        let ints: Vec<BigInt> =
            self.coeffs.iter().map(|c| c.numer() * (&denom_lcm / c.denom())).collect();

        // Strip x^k so the constant term is nonzero; zero is then a
        // root exactly when k > 0.
        let shift = ints.iter().position(|c| !c.is_zero()).unwrap_or(0);
        let stripped = &ints[shift..];
        let mut roots: Vec<Rat> = Vec::new();
        if shift > 0 {
            roots.push(rat_int(0));
        }
        if stripped.len() <= 1 {
            return Some(roots);
        }
        let a0 = stripped[0].abs();
        let alead = stripped[stripped.len() - 1].abs();
        let p_divs = divisors(&a0)?;
        let q_divs = divisors(&alead)?;
        for p in &p_divs {
            for q in &q_divs {
                let candidate = Rat::new(BigInt::from(*p), BigInt::from(*q));
                for cand in [candidate.clone(), -candidate] {
                    if self.eval(&cand).is_zero() && !roots.contains(&cand) {
                        roots.push(cand);
                    }
                }
            }
        }
        roots.sort();
        Some(roots)
    }
}

/// Positive divisors by trial division; `None` when out of `u64` range
/// (the caller then reports the branch as inconclusive).
fn divisors(n: &BigInt) -> Option<Vec<u64>> {
    let n: u64 = n.try_into().ok()?;
    if n == 0 {
        return None;
    }
    let mut out = Vec::new();
    let mut d = 1u64;
    while d.checked_mul(d).is_some_and(|sq| sq <= n) {
        if n.is_multiple_of(d) {
            out.push(d);
            if d != n / d {
                out.push(n / d);
            }
        }
        d += 1;
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn upoly(coeffs: &[i64]) -> UniPoly {
        UniPoly::new(coeffs.iter().map(|&c| rat_int(c)).collect())
    }

    #[test]
    fn sturm_counts_distinct_real_roots() {
        // (x-1)(x-2) = x^2 - 3x + 2
        assert_eq!(upoly(&[2, -3, 1]).count_real_roots(), 2);
        // x^2 + 1
        assert_eq!(upoly(&[1, 0, 1]).count_real_roots(), 0);
        // x^2 - 2: two irrational roots
        assert_eq!(upoly(&[-2, 0, 1]).count_real_roots(), 2);
        // (x-1)^2: one distinct root
        assert_eq!(upoly(&[1, -2, 1]).count_real_roots(), 1);
        // x^3 - x
        assert_eq!(upoly(&[0, -1, 0, 1]).count_real_roots(), 3);
    }

    #[test]
    fn rational_roots_found_exactly() {
        // 8x^2 - 6x + 1 = (2x - 1)(4x - 1)
        let p = upoly(&[1, -6, 8]);
        let roots = p.rational_roots().unwrap();
        assert_eq!(roots, vec![rat(1, 4), rat(1, 2)]);
        assert_eq!(p.count_real_roots(), 2);

        // x^2 - 2 has real but no rational roots
        let q = upoly(&[-2, 0, 1]);
        assert!(q.rational_roots().unwrap().is_empty());
        assert_eq!(q.count_real_roots(), 2);

        // x^3 - x/4 has roots 0, 1/2, -1/2
        let r = UniPoly::new(vec![rat_int(0), rat(-1, 4), rat_int(0), rat_int(1)]);
        assert_eq!(r.rational_roots().unwrap(), vec![rat(-1, 2), rat_int(0), rat(1, 2)]);
    }

    #[test]
    fn extraction_from_multivariate() {
        let x = Poly::var(3);
        let p = x.mul(&x).sub(&Poly::constant(rat_int(9)));
        let u = UniPoly::from_poly(&p, 3).unwrap();
        assert_eq!(u.degree(), 2);
        assert_eq!(u.rational_roots().unwrap(), vec![rat_int(-3), rat_int(3)]);
        let mixed = p.add(&Poly::var(5));
        assert!(UniPoly::from_poly(&mixed, 3).is_none());
    }
}
