//! From solved weight tables to named, re-verified families.
//!
//! A raw solver solution fixes the weight tables for the two factors of
//! the constraint system. This module rebuilds those tables as
//! stencils, extends them to further factors by linear elimination,
//! matches the result against the closed forms in the scheme catalogue,
//! and re-verifies coherence of the identified family by exact stencil
//! composition.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::engine::compose;
use crate::index::Convention;
use crate::rational::{format_rat, rat_int, Rat};
use crate::schemes::{SchemeKind, StencilFamily};
use crate::stencil::WeightStencil;

use super::constraints::{derive_constraints, window_box, ConstraintSystem};
use super::poly::Poly;
use super::solver::{solve_system, RawSolution};
use super::UniquenessError;

/// Closed forms a solved family can be matched against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClosedForm {
    /// The centered product kernel `w(i) = prod_k (d - |i_k|) / d^2`.
    CenteredKernel,
    /// Weight `1/d` on the offsets of one parity class per axis.
    Parity,
    /// All weight at the origin, every factor.
    CenteredDelta,
    /// Weight `d^-D` on the whole corner window.
    UniformCorner,
}

impl ClosedForm {
    pub fn name(self) -> &'static str {
        match self {
            ClosedForm::CenteredKernel => "centered-kernel",
            ClosedForm::Parity => "parity",
            ClosedForm::CenteredDelta => "delta",
            ClosedForm::UniformCorner => "uniform-corner",
        }
    }

    fn convention(self) -> Convention {
        match self {
            ClosedForm::UniformCorner => Convention::Corner,
            _ => Convention::Centered,
        }
    }

    /// The family member at factor `d` (identity at `d = 1`).
    pub fn stencil(self, d: i64, dim: usize) -> Result<WeightStencil, UniquenessError> {
        match self {
            ClosedForm::CenteredDelta => {
                WeightStencil::new(d, dim, Convention::Centered, [(vec![0; dim], rat_int(1))])
                    .map_err(UniquenessError::Stencil)
            }
            ClosedForm::CenteredKernel => scheme_member(SchemeKind::Bf, d, dim),
            ClosedForm::Parity => scheme_member(SchemeKind::Parity, d, dim),
            ClosedForm::UniformCorner => scheme_member(SchemeKind::UniformCorner, d, dim),
        }
    }
}

fn scheme_member(kind: SchemeKind, d: i64, dim: usize) -> Result<WeightStencil, UniquenessError> {
    let family = StencilFamily::new(kind, dim).map_err(UniquenessError::Scheme)?;
    family.stencil(d).map_err(UniquenessError::Scheme)
}

/// One coherent family produced by a solver: exact weight tables for
/// the solved factors, the branch decisions that led to it, and the
/// result of re-verifying coherence.
#[derive(Debug, Clone, Serialize)]
pub struct SolutionFamily {
    pub name: String,
    /// Closed form every solved stencil matched, if any.
    pub closed_form: Option<ClosedForm>,
    /// Case decisions on the branch that produced this family.
    pub branch_conditions: Vec<String>,
    /// Solved unknowns of the base system, by variable name.
    pub assignments: BTreeMap<String, String>,
    /// Weight tables by factor: the solved pair plus any extensions.
    pub stencils: BTreeMap<i64, WeightStencil>,
    /// Factor pairs `(d, e)` re-checked via `compose(w_e, w_d) = w_ed`.
    pub verified_pairs: usize,
    /// True when every checked pair composed exactly.
    pub verified: bool,
}

impl SolutionFamily {
    /// Builds a family from one raw solution of `sys`, extends it to
    /// `extension_factors`, identifies it, and re-verifies coherence
    /// for all factor pairs with product at most `verify_cap`.
    pub(crate) fn from_solution(
        sys: &ConstraintSystem,
        raw: &RawSolution,
        extension_factors: &[i64],
        verify_cap: i64,
    ) -> Result<SolutionFamily, UniquenessError> {
        let mut stencils = BTreeMap::new();
        for block in &sys.blocks {
            let stencil = reconstruct_stencil(sys, block.factor, &raw.values)?;
            stencils.insert(block.factor, stencil);
        }
        for &f in extension_factors {
            if stencils.contains_key(&f) {
                continue;
            }
            let stencil = extend_to_factor(f, &stencils, sys)?;
            stencils.insert(f, stencil);
        }

        let closed_form = identify(&stencils, sys.dimension, sys.convention);
        let (verified_pairs, verified) = match closed_form {
            Some(form) => verify_closed_form(form, sys.dimension, verify_cap)?,
            None => verify_solved_pairs(&stencils)?,
        };

        let assignments = raw
            .values
            .iter()
            .map(|(v, value)| (sys.var_names[*v as usize].clone(), format_rat(value)))
            .collect();
        let branch_conditions = raw
            .trail
            .iter()
            .map(|c| c.render(&sys.var_names))
            .collect();
        let name = closed_form
            .map(|f| f.name().to_owned())
            .unwrap_or_else(|| "unidentified".to_owned());

        Ok(SolutionFamily {
            name,
            closed_form,
            branch_conditions,
            assignments,
            stencils,
            verified_pairs,
            verified,
        })
    }

    /// Families are the same when their weight tables agree.
    pub(crate) fn same_weights(&self, other: &SolutionFamily) -> bool {
        self.stencils == other.stencils
    }
}

/// Expands orbit values back into a full weight table.
fn reconstruct_stencil(
    sys: &ConstraintSystem,
    factor: i64,
    values: &BTreeMap<u32, Rat>,
) -> Result<WeightStencil, UniquenessError> {
    let block = sys
        .block(factor)
        .ok_or(UniquenessError::UnknownBlock { factor })?;
    let window = window_box(factor, sys.dimension, sys.convention);
    let mut entries = Vec::new();
    for offset in window.iter() {
        let var = block
            .var_at(&offset, sys.symmetry)
            .expect("window offset has an orbit");
        let value = values
            .get(&var)
            .ok_or_else(|| UniquenessError::Internal {
                detail: format!("no value for {}", sys.var_names[var as usize]),
            })?;
        entries.push((offset, value.clone()));
    }
    WeightStencil::new(factor, sys.dimension, sys.convention, entries)
        .map_err(UniquenessError::Stencil)
}

/// Determines the factor-`f` member from the already-solved members by
/// commutation against each of them: those equations are linear in the
/// new table once the known tables are substituted, and must pin it
/// uniquely.
pub(crate) fn extend_to_factor(
    f: i64,
    known: &BTreeMap<i64, WeightStencil>,
    sys: &ConstraintSystem,
) -> Result<WeightStencil, UniquenessError> {
    let mut master: Option<ConstraintSystem> = None;
    let mut polys = Vec::new();
    for (&g, stencil) in known {
        if g == f {
            continue;
        }
        let pair_sys = derive_constraints(g, f, sys.dimension, sys.convention, sys.symmetry)?;
        if master.is_none() {
            master = Some(pair_sys.clone());
        }
        let g_block = pair_sys.block(g).expect("block for known factor");
        let f_block = pair_sys.block(f).expect("block for new factor");

        // Rewire this pair system's f-variables onto the first pair
        // system's numbering so the equations can be pooled.
        let target_block = master
            .as_ref()
            .expect("set above")
            .block(f)
            .expect("block for new factor");
        let rename: BTreeMap<u32, u32> = f_block
            .vars
            .iter()
            .map(|bv| {
                let tv = target_block
                    .var_at(&bv.rep, sys.symmetry)
                    .expect("same window, same orbits");
                (bv.var, tv)
            })
            .collect();

        for constraint in &pair_sys.equations {
            let mut poly = constraint.poly.clone();
            for bv in &g_block.vars {
                poly = poly.substitute(bv.var, &Poly::constant(stencil.weight_at(&bv.rep)));
            }
            polys.push(poly.rename_vars(&rename));
        }
    }
    let master = master.ok_or_else(|| UniquenessError::Extension {
        factor: f,
        detail: "no solved factors to extend from".to_owned(),
    })?;
    let f_vars: Vec<u32> = master
        .block(f)
        .expect("block for new factor")
        .vars
        .iter()
        .map(|bv| bv.var)
        .collect();
    let outcome = solve_system(&polys, &f_vars, &[], 10_000)
        .map_err(|detail| UniquenessError::Internal { detail })?;
    if !outcome.exhaustive() || outcome.solutions.len() != 1 {
        return Err(UniquenessError::Extension {
            factor: f,
            detail: format!(
                "commutation with the solved factors determines {} table(s) (exhaustive: {})",
                outcome.solutions.len(),
                outcome.exhaustive()
            ),
        });
    }
    reconstruct_stencil(&master, f, &outcome.solutions[0].values)
}

/// Tries each catalogue closed form against every solved stencil.
fn identify(
    stencils: &BTreeMap<i64, WeightStencil>,
    dim: usize,
    convention: Convention,
) -> Option<ClosedForm> {
    let candidates = [
        ClosedForm::CenteredKernel,
        ClosedForm::Parity,
        ClosedForm::CenteredDelta,
        ClosedForm::UniformCorner,
    ];
    candidates.into_iter().find(|form| {
        form.convention() == convention
            && stencils.iter().all(|(&f, s)| {
                form.stencil(f, dim).ok().as_ref() == Some(s)
            })
    })
}

/// Checks `compose(w_e, w_d) = w_ed` for every pair with `d*e` at most
/// `cap`, generating members from the closed form. Returns the number
/// of pairs checked and whether all of them held exactly.
pub(crate) fn verify_closed_form(
    form: ClosedForm,
    dim: usize,
    cap: i64,
) -> Result<(usize, bool), UniquenessError> {
    let mut members: BTreeMap<i64, WeightStencil> = BTreeMap::new();
    for f in 1..=cap {
        members.insert(f, form.stencil(f, dim)?);
    }
    let mut pairs = 0;
    for d in 1..=cap {
        for e in 1..=(cap / d) {
            let composed =
                compose(&members[&e], &members[&d]).map_err(|err| UniquenessError::Internal {
                    detail: format!("composition failed during re-verification: {err}"),
                })?;
            pairs += 1;
            if composed != members[&(e * d)] {
                return Ok((pairs, false));
            }
        }
    }
    Ok((pairs, true))
}

/// Fallback verification for unidentified families: checks every pair
/// whose factors and product are all among the solved tables.
fn verify_solved_pairs(
    stencils: &BTreeMap<i64, WeightStencil>,
) -> Result<(usize, bool), UniquenessError> {
    let mut pairs = 0;
    for (&d, inner) in stencils {
        for (&e, outer) in stencils {
            let Some(direct) = stencils.get(&(d * e)) else { continue };
            let composed = compose(outer, inner).map_err(|err| UniquenessError::Internal {
                detail: format!("composition failed during re-verification: {err}"),
            })?;
            pairs += 1;
            if &composed != direct {
                return Ok((pairs, false));
            }
        }
    }
    Ok((pairs, true))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms_generate_identity_at_factor_one() {
        for form in [
            ClosedForm::CenteredKernel,
            ClosedForm::Parity,
            ClosedForm::CenteredDelta,
        ] {
            let s = form.stencil(1, 2).unwrap();
            assert!(s.is_identity());
        }
        let corner = ClosedForm::UniformCorner.stencil(1, 2).unwrap();
        assert!(corner.is_identity());
    }

    #[test]
    fn closed_form_verification_catches_incoherence() {
        // All four catalogue forms are coherent on a small cap.
        for form in [
            ClosedForm::CenteredKernel,
            ClosedForm::Parity,
            ClosedForm::CenteredDelta,
            ClosedForm::UniformCorner,
        ] {
            let (pairs, ok) = verify_closed_form(form, 1, 12).unwrap();
            assert!(ok, "{} failed", form.name());
            assert!(pairs > 20);
        }
    }
}
