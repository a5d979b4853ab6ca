//! Mechanical derivation of commutation constraint systems.
//!
//! For a pair of refinement factors `d` and `e`, a coherent family must
//! satisfy `compose(w_e, w_d) = compose(w_d, w_e)`: both orders coarsen
//! by `e*d`. Treating every weight of `w_d` and `w_e` as an unknown
//! (one unknown per symmetry orbit of the support window) and equating
//! the two composition orders offset by offset yields a bilinear
//! polynomial system. Together with the sum-to-one normalization of
//! each weight block, these are exactly the equations the uniqueness
//! solvers work on. Deriving them by machine instead of transcribing
//! them avoids copying errors in the source material's hand-expanded
//! systems.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::index::{Convention, IndexBox};
use crate::rational::{rat_int, Rat};

use super::poly::{Monomial, Poly};
use super::UniquenessError;

/// Symmetry imposed on the unknown weight tables. Unknowns are orbit
/// representatives; equations at symmetric output offsets coincide and
/// are kept once.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Symmetry {
    /// No symmetry: one unknown per support offset.
    None,
    /// `w(-i) = w(i)` on a one-dimensional window.
    SignSymmetric1D,
    /// Invariance under the symmetries of the square (axis reflections
    /// and the diagonal swap) on a two-dimensional window.
    FullSquareSymmetry2D,
    /// Invariance under coordinate permutations and sign flips on a
    /// three-dimensional window.
    HypercubicSymmetry3D,
}

impl Symmetry {
    /// The dimension the symmetry group acts on; `None` fits any.
    pub fn required_dimension(self) -> Option<usize> {
        match self {
            Symmetry::None => None,
            Symmetry::SignSymmetric1D => Some(1),
            Symmetry::FullSquareSymmetry2D => Some(2),
            Symmetry::HypercubicSymmetry3D => Some(3),
        }
    }

    /// Canonical orbit representative: componentwise absolute value,
    /// sorted increasingly (identity when no symmetry is imposed).
    pub fn canonical(self, offset: &[i64]) -> Vec<i64> {
        match self {
            Symmetry::None => offset.to_vec(),
            _ => {
                let mut c: Vec<i64> = offset.iter().map(|&x| x.abs()).collect();
                c.sort_unstable();
                c
            }
        }
    }
}

/// One unknown: a symmetry orbit of weights inside a support window.
#[derive(Debug, Clone, Serialize)]
pub struct BlockVar {
    /// Index into the system's variable table.
    pub var: u32,
    /// Canonical orbit representative.
    pub rep: Vec<i64>,
    /// Number of window offsets in the orbit.
    pub orbit_size: usize,
}

/// All unknowns describing one factor's weight table.
#[derive(Debug, Clone, Serialize)]
pub struct Block {
    pub factor: i64,
    pub vars: Vec<BlockVar>,
    #[serde(skip)]
    lookup: BTreeMap<Vec<i64>, u32>,
}

impl Block {
    /// Variable for the orbit containing `offset`, if the offset lies
    /// in the support window.
    pub fn var_at(&self, offset: &[i64], symmetry: Symmetry) -> Option<u32> {
        self.lookup.get(&symmetry.canonical(offset)).copied()
    }
}

/// Where an equation came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstraintOrigin {
    /// Equality of the two composition orders at this output offset.
    Commutation { offset: Vec<i64> },
    /// The weights of this factor's block sum to one.
    Normalization { factor: i64 },
}

/// A single polynomial equation `poly = 0`.
#[derive(Debug, Clone)]
pub struct Constraint {
    pub poly: Poly,
    pub origin: ConstraintOrigin,
}

/// The full system for one factor pair: unknown blocks, equations, and
/// the genericity side conditions added by the caller.
#[derive(Debug, Clone)]
pub struct ConstraintSystem {
    pub dimension: usize,
    pub convention: Convention,
    pub symmetry: Symmetry,
    /// Exactly two blocks: index 0 for the `d` factor, 1 for `e`.
    pub blocks: [Block; 2],
    pub var_names: Vec<String>,
    pub equations: Vec<Constraint>,
    /// Variables assumed nonzero before solving.
    pub side_conditions: Vec<u32>,
}

impl ConstraintSystem {
    pub fn block(&self, factor: i64) -> Option<&Block> {
        self.blocks.iter().find(|b| b.factor == factor)
    }

    pub fn num_vars(&self) -> usize {
        self.var_names.len()
    }

    pub fn all_vars(&self) -> Vec<u32> {
        (0..self.var_names.len() as u32).collect()
    }

    pub fn nonzero_vars(&self) -> &[u32] {
        &self.side_conditions
    }

    /// Marks the orbit of `offset` in `factor`'s block as nonzero.
    pub fn require_nonzero(&mut self, factor: i64, offset: &[i64]) -> Result<(), UniquenessError> {
        let block = self
            .block(factor)
            .ok_or(UniquenessError::UnknownBlock { factor })?;
        let var = block
            .var_at(offset, self.symmetry)
            .ok_or_else(|| UniquenessError::UnknownOrbit {
                factor,
                offset: offset.to_vec(),
            })?;
        if !self.side_conditions.contains(&var) {
            self.side_conditions.push(var);
        }
        Ok(())
    }

    /// Human-readable equations, one line each, tagged by origin.
    pub fn render_equations(&self) -> Vec<String> {
        self.equations
            .iter()
            .map(|c| {
                let origin = match &c.origin {
                    ConstraintOrigin::Commutation { offset } => {
                        format!("offset {}", render_offset(offset))
                    }
                    ConstraintOrigin::Normalization { factor } => {
                        format!("normalization w{factor}")
                    }
                };
                format!("{origin}: {} = 0", c.poly.display(&self.var_names))
            })
            .collect()
    }

    /// Evaluates every equation at a full assignment; returns the
    /// nonzero residuals with their origins.
    pub fn residuals(&self, values: &BTreeMap<u32, Rat>) -> Vec<(ConstraintOrigin, Rat)> {
        self.equations
            .iter()
            .filter_map(|c| {
                let r = c.poly.eval(values)?;
                (r != rat_int(0)).then(|| (c.origin.clone(), r))
            })
            .collect()
    }
}

fn render_offset(offset: &[i64]) -> String {
    let parts: Vec<String> = offset.iter().map(|c| c.to_string()).collect();
    format!("({})", parts.join(","))
}

/// Support window of a factor-`f` stencil.
pub(crate) fn window_box(factor: i64, dim: usize, convention: Convention) -> IndexBox {
    let (lo, hi) = match convention {
        Convention::Centered => (-(factor - 1), factor - 1),
        Convention::Corner => (0, factor - 1),
    };
    IndexBox::new(vec![lo; dim], vec![hi; dim]).expect("factor >= 1 gives a nonempty window")
}

fn build_block(
    factor: i64,
    dim: usize,
    convention: Convention,
    symmetry: Symmetry,
    next_var: &mut u32,
    names: &mut Vec<String>,
) -> Block {
    let mut orbits: BTreeMap<Vec<i64>, usize> = BTreeMap::new();
    for off in window_box(factor, dim, convention).iter() {
        *orbits.entry(symmetry.canonical(&off)).or_insert(0) += 1;
    }
    let mut vars = Vec::with_capacity(orbits.len());
    let mut lookup = BTreeMap::new();
    for (rep, orbit_size) in orbits {
        let var = *next_var;
        *next_var += 1;
        let parts: Vec<String> = rep.iter().map(|c| c.to_string()).collect();
        names.push(format!("w{factor}[{}]", parts.join(",")));
        lookup.insert(rep.clone(), var);
        vars.push(BlockVar { var, rep, orbit_size });
    }
    Block { factor, vars, lookup }
}

/// Derives the commutation system for the factor pair `(d, e)` in the
/// given dimension, convention, and symmetry class.
///
/// Each equation's polynomial is the weight of `compose(w_e, w_d)`
/// minus the weight of `compose(w_d, w_e)` at one output offset (orbit
/// representatives only; offsets where the two orders agree
/// identically are skipped). One normalization equation per block
/// closes the system. No side conditions are imposed here.
pub fn derive_constraints(
    d: i64,
    e: i64,
    dimension: usize,
    convention: Convention,
    symmetry: Symmetry,
) -> Result<ConstraintSystem, UniquenessError> {
    if d < 2 || e < 2 || d == e {
        return Err(UniquenessError::BadFactorPair { d, e });
    }
    if dimension < 1 {
        return Err(UniquenessError::BadDimension { dimension });
    }
    if let Some(required) = symmetry.required_dimension() {
        if required != dimension {
            return Err(UniquenessError::SymmetryDimension { required, dimension });
        }
    }

    let mut next_var = 0u32;
    let mut var_names = Vec::new();
    let block_d = build_block(d, dimension, convention, symmetry, &mut next_var, &mut var_names);
    let block_e = build_block(e, dimension, convention, symmetry, &mut next_var, &mut var_names);

    let win_d = window_box(d, dimension, convention);
    let win_e = window_box(e, dimension, convention);
    let composite = window_box(e * d, dimension, convention);

    let mut equations = Vec::new();
    for block in [&block_d, &block_e] {
        let mut poly = Poly::constant(rat_int(-1));
        for bv in &block.vars {
            poly.add_term(Monomial::var(bv.var), rat_int(bv.orbit_size as i64));
        }
        equations.push(Constraint {
            poly,
            origin: ConstraintOrigin::Normalization { factor: block.factor },
        });
    }

    for o in composite.iter() {
        if symmetry.canonical(&o) != o {
            continue;
        }
        let mut poly = Poly::zero();
        // compose(w_e, w_d): output offset = r*d + t, outer weight
        // w_e(r), inner weight w_d(t).
        for r in win_e.iter() {
            let t: Vec<i64> = o.iter().zip(&r).map(|(&oc, &rc)| oc - d * rc).collect();
            if win_d.contains(&t) {
                let ve = block_e.var_at(&r, symmetry).expect("r lies in the e-window");
                let vd = block_d.var_at(&t, symmetry).expect("t lies in the d-window");
                poly.add_term(Monomial::var(ve).mul(&Monomial::var(vd)), rat_int(1));
            }
        }
        // compose(w_d, w_e): output offset = r*e + t.
        for r in win_d.iter() {
            let t: Vec<i64> = o.iter().zip(&r).map(|(&oc, &rc)| oc - e * rc).collect();
            if win_e.contains(&t) {
                let vd = block_d.var_at(&r, symmetry).expect("r lies in the d-window");
                let ve = block_e.var_at(&t, symmetry).expect("t lies in the e-window");
                poly.add_term(Monomial::var(vd).mul(&Monomial::var(ve)), rat_int(-1));
            }
        }
        if !poly.is_zero() {
            equations.push(Constraint {
                poly,
                origin: ConstraintOrigin::Commutation { offset: o },
            });
        }
    }

    Ok(ConstraintSystem {
        dimension,
        convention,
        symmetry,
        blocks: [block_d, block_e],
        var_names,
        equations,
        side_conditions: Vec::new(),
    })
}
