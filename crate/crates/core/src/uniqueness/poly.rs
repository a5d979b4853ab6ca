//! Sparse multivariate polynomials over the rationals.
//!
//! Just enough algebra for the constraint solver: arithmetic,
//! substitution, evaluation, and structural queries (degree in a
//! variable, linearity, variable content). Variables are indices into a
//! name table owned by the constraint system.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use smallvec::SmallVec;

use crate::rational::{format_rat, rat_int, Rat};

/// A power product, sorted by variable index, zero exponents removed.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Default, Hash)]
pub struct Monomial(SmallVec<[(u32, u32); 4]>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(SmallVec::new())
    }

    pub fn var(v: u32) -> Self {
        Monomial(SmallVec::from_slice(&[(v, 1)]))
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut exps: BTreeMap<u32, u32> = self.0.iter().copied().collect();
        for &(v, e) in &other.0 {
            *exps.entry(v).or_insert(0) += e;
        }
        Monomial(exps.into_iter().filter(|&(_, e)| e > 0).collect())
    }

    pub fn degree_in(&self, v: u32) -> u32 {
        self.0.iter().find(|&&(w, _)| w == v).map_or(0, |&(_, e)| e)
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().map(|&(_, e)| e).sum()
    }

    pub fn vars(&self) -> impl Iterator<Item = u32> + '_ {
        self.0.iter().map(|&(v, _)| v)
    }

    /// The monomial with `v`'s exponent removed entirely.
    fn without(&self, v: u32) -> Monomial {
        Monomial(self.0.iter().copied().filter(|&(w, _)| w != v).collect())
    }

    /// The monomial with `v`'s exponent reduced by `k`.
    fn reduce(&self, v: u32, k: u32) -> Monomial {
        Monomial(
            self.0
                .iter()
                .copied()
                .filter_map(|(w, e)| {
                    if w == v {
                        (e > k).then_some((w, e - k))
                    } else {
                        Some((w, e))
                    }
                })
                .collect(),
        )
    }
}

/// Polynomial with exact rational coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Poly {
    terms: BTreeMap<Monomial, Rat>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn constant(c: Rat) -> Self {
        let mut p = Poly::zero();
        if c != rat_int(0) {
            p.terms.insert(Monomial::one(), c);
        }
        p
    }

    pub fn var(v: u32) -> Self {
        let mut p = Poly::zero();
        p.terms.insert(Monomial::var(v), rat_int(1));
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn as_constant(&self) -> Option<Rat> {
        if self.terms.is_empty() {
            return Some(rat_int(0));
        }
        if self.terms.len() == 1 {
            if let Some(c) = self.terms.get(&Monomial::one()) {
                return Some(c.clone());
            }
        }
        None
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rat)> {
        self.terms.iter()
    }

    pub fn add_term(&mut self, mono: Monomial, coeff: Rat) {
        use std::collections::btree_map::Entry;
        if coeff == rat_int(0) {
            return;
        }
        match self.terms.entry(mono) {
            Entry::Occupied(mut e) => {
                *e.get_mut() += coeff;
                if *e.get() == rat_int(0) {
                    e.remove();
                }
            }
            Entry::Vacant(e) => {
                e.insert(coeff);
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Poly {
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect() }
    }

    pub fn scale(&self, c: &Rat) -> Poly {
        if *c == rat_int(0) {
            return Poly::zero();
        }
        Poly { terms: self.terms.iter().map(|(m, k)| (m.clone(), k * c)).collect() }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> Poly {
        let mut out = Poly::constant(rat_int(1));
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    pub fn vars(&self) -> BTreeSet<u32> {
        self.terms.keys().flat_map(|m| m.vars()).collect()
    }

    pub fn degree_in(&self, v: u32) -> u32 {
        self.terms.keys().map(|m| m.degree_in(v)).max().unwrap_or(0)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|m| m.total_degree()).max().unwrap_or(0)
    }

    pub fn is_linear(&self) -> bool {
        self.total_degree() <= 1
    }

    /// Splits `self = A * v + B` when `v` appears at degree exactly 0
    /// or 1; `A` and `B` are free of `v`. Returns `None` when `v`
    /// appears squared or higher.
    pub fn linear_in(&self, v: u32) -> Option<(Poly, Poly)> {
        if self.degree_in(v) > 1 {
            return None;
        }
        let mut a = Poly::zero();
        let mut b = Poly::zero();
        for (m, c) in &self.terms {
            if m.degree_in(v) == 1 {
                a.add_term(m.without(v), c.clone());
            } else {
                b.add_term(m.clone(), c.clone());
            }
        }
        Some((a, b))
    }

    /// Coefficients of `self` viewed as a polynomial in `v`: entry `k`
    /// is the coefficient polynomial of `v^k`.
    pub fn coeffs_in(&self, v: u32) -> Vec<Poly> {
        let deg = self.degree_in(v) as usize;
        let mut out = vec![Poly::zero(); deg + 1];
        for (m, c) in &self.terms {
            let k = m.degree_in(v) as usize;
            out[k].add_term(m.reduce(v, k as u32), c.clone());
        }
        out
    }

    /// Substitutes a polynomial for a variable.
    pub fn substitute(&self, v: u32, p: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (k, coeff_poly) in self.coeffs_in(v).into_iter().enumerate() {
            if coeff_poly.is_zero() {
                continue;
            }
            out = out.add(&coeff_poly.mul(&p.pow(k as u32)));
        }
        out
    }

    /// Renames variables; indices absent from the map are unchanged.
    pub fn rename_vars(&self, map: &BTreeMap<u32, u32>) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let renamed = m
                .0
                .iter()
                .map(|&(v, e)| (map.get(&v).copied().unwrap_or(v), e))
                .fold(Monomial::one(), |acc, (v, e)| {
                    let mut single = Monomial::one();
                    single.0.push((v, e));
                    acc.mul(&single)
                });
            out.add_term(renamed, c.clone());
        }
        out
    }

    /// Evaluates with every variable given a value; `None` if a
    /// variable is missing from the map.
    pub fn eval(&self, values: &BTreeMap<u32, Rat>) -> Option<Rat> {
        let mut acc = rat_int(0);
        for (m, c) in &self.terms {
            let mut term = c.clone();
            for &(v, e) in m.0.iter() {
                let val = values.get(&v)?;
                for _ in 0..e {
                    term *= val;
                }
            }
            acc += term;
        }
        Some(acc)
    }

    /// Variables dividing every term (each with degree >= 1 in every
    /// monomial). Empty for the zero polynomial and for any polynomial
    /// with a constant term.
    pub fn content_vars(&self) -> Vec<u32> {
        let mut iter = self.terms.keys();
        let first = match iter.next() {
            Some(m) => m,
            None => return Vec::new(),
        };
        first
            .vars()
            .filter(|&v| self.terms.keys().all(|m| m.degree_in(v) >= 1))
            .collect()
    }

    /// Divides out one factor of `v` from every term. Panics if some
    /// term lacks `v`; guard with [`Poly::content_vars`].
    pub fn divide_var(&self, v: u32) -> Poly {
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| {
                    assert!(m.degree_in(v) >= 1, "variable does not divide the polynomial");
                    (m.reduce(v, 1), c.clone())
                })
                .collect(),
        }
    }

    /// Renders with variable names from the table.
    pub fn display<'a>(&'a self, names: &'a [String]) -> PolyDisplay<'a> {
        PolyDisplay { poly: self, names }
    }
}

pub struct PolyDisplay<'a> {
    poly: &'a Poly,
    names: &'a [String],
}

impl fmt::Display for PolyDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.poly.is_zero() {
            return f.write_str("0");
        }
        let mut first = true;
        for (m, c) in &self.poly.terms {
            let coeff = format_rat(c);
            let (sign, mag) = match coeff.strip_prefix('-') {
                Some(rest) => ("-", rest.to_owned()),
                None => ("+", coeff),
            };
            if first {
                if sign == "-" {
                    f.write_str("-")?;
                }
                first = false;
            } else {
                write!(f, " {sign} ")?;
            }
            let mut factors: Vec<String> = Vec::new();
            if mag != "1/1" || m.0.is_empty() {
                factors.push(mag.clone());
            }
            for &(v, e) in m.0.iter() {
                let name = self
                    .names
                    .get(v as usize)
                    .map(|s| s.as_str())
                    .unwrap_or("?");
                if e == 1 {
                    factors.push(name.to_owned());
                } else {
                    factors.push(format!("{name}^{e}"));
                }
            }
            f.write_str(&factors.join("*"))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn x() -> Poly {
        Poly::var(0)
    }

    fn y() -> Poly {
        Poly::var(1)
    }

    #[test]
    fn arithmetic_normalizes() {
        let p = x().mul(&y()).add(&x().mul(&y()).neg());
        assert!(p.is_zero());

        let q = x().add(&Poly::constant(rat_int(3)));
        let sq = q.mul(&q);
        assert_eq!(sq.degree_in(0), 2);
        assert_eq!(sq.num_terms(), 3);
        let values: BTreeMap<u32, Rat> = [(0, rat_int(2))].into();
        assert_eq!(sq.eval(&values).unwrap(), rat_int(25));
    }

    #[test]
    fn linear_split() {
        // x*y + 2x + 3 = (y + 2)*x + 3
        let p = x().mul(&y()).add(&x().scale(&rat_int(2))).add(&Poly::constant(rat_int(3)));
        let (a, b) = p.linear_in(0).unwrap();
        assert_eq!(a, y().add(&Poly::constant(rat_int(2))));
        assert_eq!(b, Poly::constant(rat_int(3)));
        assert!(p.mul(&p).linear_in(0).is_none());
    }

    #[test]
    fn substitution_expands() {
        // substitute x := y + 1 into x^2 - 1 gives y^2 + 2y
        let p = x().mul(&x()).sub(&Poly::constant(rat_int(1)));
        let s = p.substitute(0, &y().add(&Poly::constant(rat_int(1))));
        let expected = y().mul(&y()).add(&y().scale(&rat_int(2)));
        assert_eq!(s, expected);
    }

    #[test]
    fn content_and_division() {
        // x^2*y + x*y^2 has content {x, y}
        let p = x().mul(&x()).mul(&y()).add(&x().mul(&y()).mul(&y()));
        let mut content = p.content_vars();
        content.sort();
        assert_eq!(content, vec![0, 1]);
        let q = p.divide_var(0);
        assert_eq!(q, x().mul(&y()).add(&y().mul(&y())));
    }

    #[test]
    fn coefficients_in_a_variable() {
        // x^2*y + x + 5 in x: [5, 1, y]
        let p = x().mul(&x()).mul(&y()).add(&x()).add(&Poly::constant(rat_int(5)));
        let cs = p.coeffs_in(0);
        assert_eq!(cs.len(), 3);
        assert_eq!(cs[0], Poly::constant(rat_int(5)));
        assert_eq!(cs[1], Poly::constant(rat_int(1)));
        assert_eq!(cs[2], y());
    }

    #[test]
    fn rendering_uses_names() {
        let names = vec!["w2[0]".to_owned(), "w2[1]".to_owned()];
        let p = x().mul(&y()).scale(&rat(-1, 2)).add(&Poly::constant(rat_int(1)));
        assert_eq!(p.display(&names).to_string(), "1/1 - 1/2*w2[0]*w2[1]");
    }
}
