//! Exhaustive case-splitting solver for small polynomial systems.
//!
//! The commutation systems are bilinear with a handful of unknowns, so
//! a complete search over zero/nonzero case splits is practical. Every
//! reduction rule partitions the solution set between its children, so
//! the union of the leaves is exactly the solution set of the input,
//! with one deliberate exception: when a univariate equation has real
//! roots that are not rational, or a branch runs past the node budget,
//! the solver records an inconclusive branch rather than guessing.
//! Callers must treat a report with inconclusive branches as "not
//! proven exhaustive", never as "no further solutions".
//!
//! Every candidate assignment that survives to a leaf is evaluated
//! against the original equations before it is reported, so an
//! internal reduction bug cannot fabricate a solution.

use std::collections::{BTreeMap, BTreeSet};

use crate::rational::{format_rat, rat_int, Rat};

use super::poly::Poly;
use super::univar::UniPoly;

/// A branch decision, recorded for reporting.
#[derive(Debug, Clone)]
pub enum BranchCondition {
    Assigned(u32, Rat),
    VarZero(u32),
    VarNonzero(u32),
    PolyZero(Poly),
    PolyNonzero(Poly),
}

impl BranchCondition {
    pub fn render(&self, names: &[String]) -> String {
        let name = |v: &u32| {
            names
                .get(*v as usize)
                .cloned()
                .unwrap_or_else(|| format!("x{v}"))
        };
        match self {
            BranchCondition::Assigned(v, r) => format!("{} = {}", name(v), format_rat(r)),
            BranchCondition::VarZero(v) => format!("{} = 0", name(v)),
            BranchCondition::VarNonzero(v) => format!("{} != 0", name(v)),
            BranchCondition::PolyZero(p) => format!("{} = 0", p.display(names)),
            BranchCondition::PolyNonzero(p) => format!("{} != 0", p.display(names)),
        }
    }
}

/// A fully determined rational solution.
#[derive(Debug, Clone)]
pub struct RawSolution {
    pub values: BTreeMap<u32, Rat>,
    pub trail: Vec<BranchCondition>,
}

/// A branch the solver could not finish: free variables left over, an
/// irrational root, or budget exhaustion.
#[derive(Debug, Clone)]
pub struct StuckBranch {
    pub reason: String,
    pub trail: Vec<BranchCondition>,
}

#[derive(Debug, Clone, Default)]
pub struct RawOutcome {
    pub solutions: Vec<RawSolution>,
    pub underdetermined: Vec<StuckBranch>,
    pub inconclusive: Vec<StuckBranch>,
    pub nodes_explored: usize,
    pub budget_exhausted: bool,
}

impl RawOutcome {
    /// True when the leaves provably enumerate the whole solution set.
    pub fn exhaustive(&self) -> bool {
        self.inconclusive.is_empty() && self.underdetermined.is_empty() && !self.budget_exhausted
    }
}

#[derive(Clone)]
struct Node {
    eqs: Vec<Poly>,
    /// Deferred relations `a*v + b = 0`, chronological; `a`, `b` only
    /// mention variables deferred later, so resolving newest-first
    /// yields numeric values.
    pendings: Vec<(u32, Poly, Poly)>,
    nonzero_polys: Vec<Poly>,
    nonzero_vars: BTreeSet<u32>,
    trail: Vec<BranchCondition>,
}

enum Processed {
    Dead,
    Leaf(Node),
    Children(Vec<Node>, Option<StuckBranch>),
    Underdetermined(StuckBranch),
    Inconclusive(StuckBranch),
}

/// Solves `polys = 0` over the variables `vars`, assuming each of
/// `nonzero_vars` is nonzero. The node budget bounds the number of
/// branch states processed; exceeding it yields a non-exhaustive
/// outcome, not an error.
pub fn solve_system(
    polys: &[Poly],
    vars: &[u32],
    nonzero_vars: &[u32],
    node_budget: usize,
) -> Result<RawOutcome, String> {
    let mut out = RawOutcome::default();
    let root = Node {
        eqs: polys.to_vec(),
        pendings: Vec::new(),
        nonzero_polys: nonzero_vars.iter().map(|&v| Poly::var(v)).collect(),
        nonzero_vars: nonzero_vars.iter().copied().collect(),
        trail: nonzero_vars
            .iter()
            .map(|&v| BranchCondition::VarNonzero(v))
            .collect(),
    };
    let mut stack = vec![root];
    while let Some(node) = stack.pop() {
        if out.nodes_explored >= node_budget {
            out.budget_exhausted = true;
            out.inconclusive.push(StuckBranch {
                reason: format!(
                    "node budget of {node_budget} exhausted with {} branches unexplored",
                    stack.len() + 1
                ),
                trail: node.trail,
            });
            break;
        }
        out.nodes_explored += 1;
        match process(node)? {
            Processed::Dead => {}
            Processed::Leaf(leaf) => finalize(leaf, vars, polys, &mut out)?,
            Processed::Children(children, stuck) => {
                stack.extend(children);
                if let Some(s) = stuck {
                    out.inconclusive.push(s);
                }
            }
            Processed::Underdetermined(s) => out.underdetermined.push(s),
            Processed::Inconclusive(s) => out.inconclusive.push(s),
        }
    }
    Ok(out)
}

/// Applies non-branching reductions until the node is dead, finished,
/// or a branching rule fires.
fn process(mut node: Node) -> Result<Processed, String> {
    loop {
        // Normalize: drop satisfied equations, divide out factors known
        // to be nonzero, detect contradictions.
        let mut i = 0;
        while i < node.eqs.len() {
            loop {
                let content = node.eqs[i].content_vars();
                match content.iter().find(|v| node.nonzero_vars.contains(v)) {
                    Some(&v) => node.eqs[i] = node.eqs[i].divide_var(v),
                    None => break,
                }
            }
            match node.eqs[i].as_constant() {
                Some(c) if c == rat_int(0) => {
                    node.eqs.swap_remove(i);
                }
                Some(_) => return Ok(Processed::Dead),
                None => i += 1,
            }
        }

        if node.eqs.is_empty() {
            return Ok(Processed::Leaf(node));
        }

        // An equation linear in some variable with a constant, nonzero
        // coefficient pins that variable without any case split.
        if let Some((idx, v, coeff, b)) = find_const_linear(&node.eqs) {
            let substitution = b.scale(&(-coeff.recip()));
            node.eqs.swap_remove(idx);
            for eq in &mut node.eqs {
                *eq = eq.substitute(v, &substitution);
            }
            node.pendings.push((v, Poly::constant(coeff), b));
            continue;
        }

        // A fully linear system is finished by exact elimination.
        if node.eqs.iter().all(Poly::is_linear) {
            return Ok(match solve_linear(&node.eqs) {
                LinearOutcome::Inconsistent => Processed::Dead,
                LinearOutcome::Unique(assignments) => {
                    for (v, value) in assignments {
                        node.pendings.push((v, Poly::constant(rat_int(1)), Poly::constant(-value)));
                    }
                    node.eqs.clear();
                    Processed::Leaf(node)
                }
                LinearOutcome::Underdetermined(free) => {
                    Processed::Underdetermined(StuckBranch {
                        reason: format!(
                            "linear elimination leaves {} free variable(s); the branch holds a continuum of solutions",
                            free.len()
                        ),
                        trail: node.trail,
                    })
                }
            });
        }

        // A nonlinear equation in a single variable branches over its
        // rational roots; irrational real roots are surfaced honestly.
        if let Some((idx, v)) = find_univariate(&node.eqs) {
            let eq = node.eqs[idx].clone();
            let up = UniPoly::from_poly(&eq, v).expect("single-variable equation");
            let real_roots = up.count_real_roots();
            let Some(roots) = up.rational_roots() else {
                return Ok(Processed::Inconclusive(StuckBranch {
                    reason: "coefficients too large for rational root enumeration".to_owned(),
                    trail: node.trail,
                }));
            };
            if real_roots == 0 {
                return Ok(Processed::Dead);
            }
            let mut children = Vec::new();
            for root in &roots {
                let mut child = node.clone();
                child.eqs.swap_remove(idx);
                for eq in &mut child.eqs {
                    *eq = eq.substitute(v, &Poly::constant(root.clone()));
                }
                child
                    .pendings
                    .push((v, Poly::constant(rat_int(1)), Poly::constant(-root.clone())));
                child.trail.push(BranchCondition::Assigned(v, root.clone()));
                children.push(child);
            }
            let stuck = (real_roots > roots.len()).then(|| StuckBranch {
                reason: "a univariate equation has an irrational real root; solutions through it are not enumerated".to_owned(),
                trail: node.trail,
            });
            return Ok(Processed::Children(children, stuck));
        }

        // An equation divisible by a variable of unknown status splits
        // into the zero and nonzero cases.
        if let Some((_, v)) = find_content_var(&node.eqs, &node.nonzero_vars) {
            let mut zero_child = node.clone();
            for eq in &mut zero_child.eqs {
                *eq = eq.substitute(v, &Poly::zero());
            }
            zero_child
                .pendings
                .push((v, Poly::constant(rat_int(1)), Poly::zero()));
            zero_child.trail.push(BranchCondition::VarZero(v));

            let mut nonzero_child = node;
            nonzero_child.nonzero_polys.push(Poly::var(v));
            nonzero_child.nonzero_vars.insert(v);
            nonzero_child.trail.push(BranchCondition::VarNonzero(v));
            return Ok(Processed::Children(vec![zero_child, nonzero_child], None));
        }

        // General split: pick an equation a*v + b = 0 that is linear in
        // v with a nonconstant coefficient a, and case on a.
        if let Some((idx, v, a, b)) = find_poly_linear(&node.eqs) {
            let mut a_zero = node.clone();
            a_zero.eqs.swap_remove(idx);
            a_zero.eqs.push(a.clone());
            a_zero.eqs.push(b.clone());
            a_zero.trail.push(BranchCondition::PolyZero(a.clone()));

            let mut a_nonzero = node;
            a_nonzero.eqs.swap_remove(idx);
            for eq in &mut a_nonzero.eqs {
                *eq = eliminate(eq, v, &a, &b);
            }
            a_nonzero.nonzero_polys.push(a.clone());
            a_nonzero.trail.push(BranchCondition::PolyNonzero(a.clone()));
            a_nonzero.pendings.push((v, a, b));
            return Ok(Processed::Children(vec![a_zero, a_nonzero], None));
        }

        return Ok(Processed::Inconclusive(StuckBranch {
            reason: "no reduction applies: every equation is nonlinear in every one of its variables".to_owned(),
            trail: node.trail,
        }));
    }
}

/// `(equation index, variable, constant coefficient, remainder)` for
/// the cheapest split-free substitution available.
fn find_const_linear(eqs: &[Poly]) -> Option<(usize, u32, Rat, Poly)> {
    let mut best: Option<(usize, u32, Rat, Poly)> = None;
    let mut best_size = usize::MAX;
    for (idx, eq) in eqs.iter().enumerate() {
        for v in eq.vars() {
            let Some((a, b)) = eq.linear_in(v) else { continue };
            let Some(c) = a.as_constant() else { continue };
            if c == rat_int(0) {
                continue;
            }
            if b.num_terms() < best_size {
                best_size = b.num_terms();
                best = Some((idx, v, c, b));
            }
        }
    }
    best
}

fn find_univariate(eqs: &[Poly]) -> Option<(usize, u32)> {
    for (idx, eq) in eqs.iter().enumerate() {
        let vars = eq.vars();
        if vars.len() == 1 {
            let v = *vars.iter().next().expect("one variable");
            return Some((idx, v));
        }
    }
    None
}

fn find_content_var(eqs: &[Poly], nonzero: &BTreeSet<u32>) -> Option<(usize, u32)> {
    // Single-monomial equations force one of their variables to zero,
    // so prefer them.
    for pass in 0..2 {
        for (idx, eq) in eqs.iter().enumerate() {
            if pass == 0 && eq.num_terms() != 1 {
                continue;
            }
            if let Some(&v) = eq
                .content_vars()
                .iter()
                .find(|v| !nonzero.contains(v))
            {
                return Some((idx, v));
            }
        }
    }
    None
}

fn find_poly_linear(eqs: &[Poly]) -> Option<(usize, u32, Poly, Poly)> {
    let mut best: Option<(usize, u32, Poly, Poly)> = None;
    let mut best_score = (usize::MAX, usize::MAX);
    for (idx, eq) in eqs.iter().enumerate() {
        for v in eq.vars() {
            let Some((a, b)) = eq.linear_in(v) else { continue };
            if a.is_zero() || a.as_constant().is_some() {
                continue;
            }
            let score = (a.num_terms(), eq.num_terms());
            if score < best_score {
                best_score = score;
                best = Some((idx, v, a, b));
            }
        }
    }
    best
}

/// Rewrites `eq` without `v`, given `a*v + b = 0` and `a != 0`: with
/// `eq = sum E_k v^k` of degree `n` in `v`, returns
/// `sum E_k (-b)^k a^(n-k)`, which is `eq * a^n` after substituting
/// `v = -b/a`.
fn eliminate(eq: &Poly, v: u32, a: &Poly, b: &Poly) -> Poly {
    let coeffs = eq.coeffs_in(v);
    let n = coeffs.len() - 1;
    let neg_b = b.neg();
    let mut out = Poly::zero();
    for (k, ek) in coeffs.iter().enumerate() {
        if ek.is_zero() {
            continue;
        }
        out = out.add(&ek.mul(&neg_b.pow(k as u32)).mul(&a.pow((n - k) as u32)));
    }
    out
}

enum LinearOutcome {
    Inconsistent,
    Unique(Vec<(u32, Rat)>),
    Underdetermined(Vec<u32>),
}

/// Exact Gaussian elimination for a system of linear polynomials
/// (each `sum c_v * v + c0 = 0`).
fn solve_linear(eqs: &[Poly]) -> LinearOutcome {
    let vars: Vec<u32> = {
        let mut set = BTreeSet::new();
        for eq in eqs {
            set.extend(eq.vars());
        }
        set.into_iter().collect()
    };
    let col_of: BTreeMap<u32, usize> = vars.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let n = vars.len();
    let mut rows: Vec<Vec<Rat>> = Vec::with_capacity(eqs.len());
    for eq in eqs {
        let mut row = vec![rat_int(0); n + 1];
        for (mono, c) in eq.terms() {
            match mono.vars().next() {
                Some(v) => row[col_of[&v]] = c.clone(),
                None => row[n] = c.clone(),
            }
        }
        rows.push(row);
    }

    let mut pivot_of_col: Vec<Option<usize>> = vec![None; n];
    let mut rank = 0;
    for col in 0..n {
        let Some(pivot_row) = (rank..rows.len()).find(|&r| rows[r][col] != rat_int(0)) else {
            continue;
        };
        rows.swap(rank, pivot_row);
        let inv = rows[rank][col].clone().recip();
        for cell in &mut rows[rank][col..=n] {
            *cell = &*cell * &inv;
        }
        let pivot = std::mem::take(&mut rows[rank]);
        for (r, row) in rows.iter_mut().enumerate() {
            if r == rank || row[col] == rat_int(0) {
                continue;
            }
            let factor = row[col].clone();
            for (cell, p) in row[col..=n].iter_mut().zip(&pivot[col..=n]) {
                *cell = &*cell - &(&factor * p);
            }
        }
        rows[rank] = pivot;
        pivot_of_col[col] = Some(rank);
        rank += 1;
    }

    for row in &rows[rank..] {
        if row[n] != rat_int(0) {
            return LinearOutcome::Inconsistent;
        }
    }
    let free: Vec<u32> = (0..n)
        .filter(|&c| pivot_of_col[c].is_none())
        .map(|c| vars[c])
        .collect();
    if !free.is_empty() {
        return LinearOutcome::Underdetermined(free);
    }
    let mut assignment = Vec::with_capacity(n);
    for col in 0..n {
        let row = pivot_of_col[col].expect("full rank");
        // Row reads v + c0 = 0.
        assignment.push((vars[col], -rows[row][n].clone()));
    }
    LinearOutcome::Unique(assignment)
}

/// Resolves a finished branch to numeric values, checks it against the
/// side conditions and the original system, and records it.
fn finalize(
    node: Node,
    vars: &[u32],
    original: &[Poly],
    out: &mut RawOutcome,
) -> Result<(), String> {
    let mut values: BTreeMap<u32, Rat> = BTreeMap::new();
    for (v, a, b) in node.pendings.iter().rev() {
        let (Some(a0), Some(b0)) = (a.eval(&values), b.eval(&values)) else {
            out.underdetermined.push(StuckBranch {
                reason: "a deferred relation references an unconstrained variable".to_owned(),
                trail: node.trail,
            });
            return Ok(());
        };
        if a0 == rat_int(0) {
            // The sibling branch with the coefficient pinned to zero
            // covers this case.
            return Ok(());
        }
        values.insert(*v, -b0 / a0);
    }
    let free: Vec<u32> = vars.iter().copied().filter(|v| !values.contains_key(v)).collect();
    if !free.is_empty() {
        out.underdetermined.push(StuckBranch {
            reason: format!("{} variable(s) left unconstrained", free.len()),
            trail: node.trail,
        });
        return Ok(());
    }
    for nz in &node.nonzero_polys {
        let value = nz
            .eval(&values)
            .ok_or_else(|| "side condition references an unsolved variable".to_owned())?;
        if value == rat_int(0) {
            return Ok(());
        }
    }
    for poly in original {
        let residual = poly
            .eval(&values)
            .ok_or_else(|| "original equation references an unsolved variable".to_owned())?;
        if residual != rat_int(0) {
            return Err(format!(
                "internal solver error: a candidate assignment leaves residual {}",
                format_rat(&residual)
            ));
        }
    }
    if !out.solutions.iter().any(|s| s.values == values) {
        out.solutions.push(RawSolution { values, trail: node.trail });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn var(v: u32) -> Poly {
        Poly::var(v)
    }

    fn constant(c: i64) -> Poly {
        Poly::constant(rat_int(c))
    }

    #[test]
    fn linear_system_solved_exactly() {
        // x + y - 3 = 0, x - y - 1 = 0 -> x = 2, y = 1
        let eqs = vec![
            var(0).add(&var(1)).sub(&constant(3)),
            var(0).sub(&var(1)).sub(&constant(1)),
        ];
        let out = solve_system(&eqs, &[0, 1], &[], 1000).unwrap();
        assert!(out.exhaustive());
        assert_eq!(out.solutions.len(), 1);
        let sol = &out.solutions[0];
        assert_eq!(sol.values[&0], rat_int(2));
        assert_eq!(sol.values[&1], rat_int(1));
    }

    #[test]
    fn bilinear_toy_system_enumerates_all_branches() {
        // x*y = 0, x + y = 1 has solutions (0,1) and (1,0).
        let eqs = vec![var(0).mul(&var(1)), var(0).add(&var(1)).sub(&constant(1))];
        let out = solve_system(&eqs, &[0, 1], &[], 1000).unwrap();
        assert!(out.exhaustive());
        let mut sols: Vec<(Rat, Rat)> = out
            .solutions
            .iter()
            .map(|s| (s.values[&0].clone(), s.values[&1].clone()))
            .collect();
        sols.sort();
        assert_eq!(sols, vec![(rat_int(0), rat_int(1)), (rat_int(1), rat_int(0))]);

        // With x marked nonzero only (1,0) survives.
        let gated = solve_system(&eqs, &[0, 1], &[0], 1000).unwrap();
        assert!(gated.exhaustive());
        assert_eq!(gated.solutions.len(), 1);
        assert_eq!(gated.solutions[0].values[&0], rat_int(1));
    }

    #[test]
    fn quadratic_roots_enumerated_and_irrational_flagged() {
        // 8x^2 - 6x + 1 = 0 -> x in {1/4, 1/2}
        let x = var(0);
        let quad = x
            .mul(&x)
            .scale(&rat_int(8))
            .sub(&x.scale(&rat_int(6)))
            .add(&constant(1));
        let out = solve_system(&[quad], &[0], &[], 1000).unwrap();
        assert!(out.exhaustive());
        let mut roots: Vec<Rat> = out.solutions.iter().map(|s| s.values[&0].clone()).collect();
        roots.sort();
        assert_eq!(roots, vec![rat(1, 4), rat(1, 2)]);

        // x^2 - 2 = 0 has no rational solution; the solver must say
        // "inconclusive", not "no solutions".
        let irr = x.mul(&x).sub(&constant(2));
        let out = solve_system(&[irr], &[0], &[], 1000).unwrap();
        assert!(out.solutions.is_empty());
        assert!(!out.exhaustive());
        assert_eq!(out.inconclusive.len(), 1);

        // x^2 + 1 = 0 has no real solution at all: a clean dead end.
        let none = x.mul(&x).add(&constant(1));
        let out = solve_system(&[none], &[0], &[], 1000).unwrap();
        assert!(out.exhaustive());
        assert!(out.solutions.is_empty());
    }

    #[test]
    fn eliminant_split_covers_vanishing_coefficient() {
        // y*x + y - 1 = 0 and x*y - 2x = 0.
        // From the second: x*(y - 2) = 0.
        //   x = 0: first gives y = 1 -> (0, 1).
        //   y = 2: first gives 2x + 1 = 0 -> (-1/2, 2).
        let eqs = vec![
            var(1).mul(&var(0)).add(&var(1)).sub(&constant(1)),
            var(0).mul(&var(1)).sub(&var(0).scale(&rat_int(2))),
        ];
        let out = solve_system(&eqs, &[0, 1], &[], 1000).unwrap();
        assert!(out.exhaustive());
        let mut sols: Vec<(Rat, Rat)> = out
            .solutions
            .iter()
            .map(|s| (s.values[&0].clone(), s.values[&1].clone()))
            .collect();
        sols.sort();
        assert_eq!(
            sols,
            vec![(rat(-1, 2), rat_int(2)), (rat_int(0), rat_int(1))]
        );
    }

    #[test]
    fn budget_exhaustion_is_reported_not_silent() {
        let eqs = vec![var(0).mul(&var(1)), var(0).add(&var(1)).sub(&constant(1))];
        let out = solve_system(&eqs, &[0, 1], &[], 1).unwrap();
        assert!(out.budget_exhausted);
        assert!(!out.exhaustive());
    }

    #[test]
    fn underdetermined_branch_is_reported() {
        // x + y = 1 alone has a continuum of solutions.
        let eqs = vec![var(0).add(&var(1)).sub(&constant(1))];
        let out = solve_system(&eqs, &[0, 1], &[], 1000).unwrap();
        assert!(out.solutions.is_empty());
        assert_eq!(out.underdetermined.len(), 1);
        assert!(!out.exhaustive());
    }
}
