//! The catalogue of named averaging schemes.
//!
//! Each scheme is a rule assigning a [`WeightStencil`] to every
//! admissible refinement factor. The catalogue covers:
//!
//! * `bf`: the centered kernel with weight `d^{-2D} * prod(d - |i_k|)`,
//!   the unique nondegenerate centered scheme in one dimension;
//! * `parity`: weight `1/d` on the offsets `i` with `d - i` odd;
//! * `uniform-corner`: weight `d^{-D}` on every corner-labelled offset;
//! * four corner deltas (`lower-left`, `corner-ne`, `corner-nw`,
//!   `corner-se`), the `diagonal` and `antidiagonal` lines, and the odd
//!   `central` delta, all corner-labelled and two-dimensional.
//!
//! Factor 1 is admitted for every scheme and yields the identity
//! stencil, so each family is closed under composition.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::index::Convention;
use crate::rational::{rat, rat_int, Rat};
use crate::stencil::{StencilError, WeightStencil};

/// Centered averaging stencil with weight `d^{-2D} * prod(d - |i_k|)`
/// at offset `(i_1, ..., i_D)`, support `(2d-1)^D`.
pub fn bf_stencil(d: i64, dim: usize) -> Result<WeightStencil, SchemeError> {
    if dim < 1 {
        return Err(SchemeError::Stencil(StencilError::BadDimension { dim }));
    }
    let profile = bf_profile(d)?;
    WeightStencil::tensor_product(&vec![profile; dim]).map_err(SchemeError::Stencil)
}

fn bf_profile(d: i64) -> Result<WeightStencil, SchemeError> {
    if d < 1 {
        return Err(SchemeError::Stencil(StencilError::BadFactor { factor: d }));
    }
    let entries = (-(d - 1)..=(d - 1)).map(|i| (vec![i], rat(d - i.abs(), d * d)));
    WeightStencil::new(d, 1, Convention::Centered, entries).map_err(SchemeError::Stencil)
}

/// One-dimensional centered stencil with weight `1/d` at every offset
/// `i` in `[-(d-1), d-1]` with `d - i` odd, and 0 elsewhere.
pub fn parity_stencil(d: i64) -> Result<WeightStencil, SchemeError> {
    if d < 2 {
        return Err(SchemeError::FactorNotAdmissible { scheme: SchemeKind::Parity, d });
    }
    let entries = (-(d - 1)..=(d - 1))
        .filter(|i| (d - i).rem_euclid(2) == 1)
        .map(|i| (vec![i], rat(1, d)));
    WeightStencil::new(d, 1, Convention::Centered, entries).map_err(SchemeError::Stencil)
}

/// Corner-labelled stencil giving every offset in `[0, d-1]^D` the
/// weight `d^{-D}`.
pub fn uniform_corner_stencil(d: i64, dim: usize) -> Result<WeightStencil, SchemeError> {
    if d < 1 {
        return Err(SchemeError::Stencil(StencilError::BadFactor { factor: d }));
    }
    if dim < 1 {
        return Err(SchemeError::Stencil(StencilError::BadDimension { dim }));
    }
    let entries = (0..d).map(|i| (vec![i], rat(1, d)));
    let profile = WeightStencil::new(d, 1, Convention::Corner, entries)
        .map_err(SchemeError::Stencil)?;
    WeightStencil::tensor_product(&vec![profile; dim]).map_err(SchemeError::Stencil)
}

/// The degenerate two-dimensional corner schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DegenerateKind {
    /// Delta at `(0, 0)`.
    LowerLeft,
    /// Delta at `(d-1, d-1)`.
    CornerNe,
    /// Delta at `(0, d-1)`.
    CornerNw,
    /// Delta at `(d-1, 0)`.
    CornerSe,
    /// Weight `1/d` on `(i, i)`.
    Diagonal,
    /// Weight `1/d` on `(i, d-1-i)`.
    Antidiagonal,
    /// Delta at `((d-1)/2, (d-1)/2)`; odd factors only.
    Central,
}

/// Builds a degenerate corner scheme's stencil (two-dimensional).
pub fn degenerate_stencil(kind: DegenerateKind, d: i64) -> Result<WeightStencil, SchemeError> {
    if d < 1 {
        return Err(SchemeError::Stencil(StencilError::BadFactor { factor: d }));
    }
    let entries: Vec<(Vec<i64>, Rat)> = match kind {
        DegenerateKind::LowerLeft => vec![(vec![0, 0], rat_int(1))],
        DegenerateKind::CornerNe => vec![(vec![d - 1, d - 1], rat_int(1))],
        DegenerateKind::CornerNw => vec![(vec![0, d - 1], rat_int(1))],
        DegenerateKind::CornerSe => vec![(vec![d - 1, 0], rat_int(1))],
        DegenerateKind::Diagonal => (0..d).map(|i| (vec![i, i], rat(1, d))).collect(),
        DegenerateKind::Antidiagonal => {
            (0..d).map(|i| (vec![i, d - 1 - i], rat(1, d))).collect()
        }
        DegenerateKind::Central => {
            if d % 2 == 0 {
                return Err(SchemeError::FactorNotAdmissible { scheme: SchemeKind::Central, d });
            }
            vec![(vec![(d - 1) / 2, (d - 1) / 2], rat_int(1))]
        }
    };
    WeightStencil::new(d, 2, Convention::Corner, entries).map_err(SchemeError::Stencil)
}

/// Names of the catalogue schemes, as accepted on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    Bf,
    Parity,
    UniformCorner,
    LowerLeft,
    CornerNe,
    CornerNw,
    CornerSe,
    Diagonal,
    Antidiagonal,
    Central,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 10] = [
        SchemeKind::Bf,
        SchemeKind::Parity,
        SchemeKind::UniformCorner,
        SchemeKind::LowerLeft,
        SchemeKind::CornerNe,
        SchemeKind::CornerNw,
        SchemeKind::CornerSe,
        SchemeKind::Diagonal,
        SchemeKind::Antidiagonal,
        SchemeKind::Central,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SchemeKind::Bf => "bf",
            SchemeKind::Parity => "parity",
            SchemeKind::UniformCorner => "uniform-corner",
            SchemeKind::LowerLeft => "lower-left",
            SchemeKind::CornerNe => "corner-ne",
            SchemeKind::CornerNw => "corner-nw",
            SchemeKind::CornerSe => "corner-se",
            SchemeKind::Diagonal => "diagonal",
            SchemeKind::Antidiagonal => "antidiagonal",
            SchemeKind::Central => "central",
        }
    }

    pub fn convention(&self) -> Convention {
        match self {
            SchemeKind::Bf | SchemeKind::Parity => Convention::Centered,
            _ => Convention::Corner,
        }
    }

    fn degenerate(&self) -> Option<DegenerateKind> {
        match self {
            SchemeKind::LowerLeft => Some(DegenerateKind::LowerLeft),
            SchemeKind::CornerNe => Some(DegenerateKind::CornerNe),
            SchemeKind::CornerNw => Some(DegenerateKind::CornerNw),
            SchemeKind::CornerSe => Some(DegenerateKind::CornerSe),
            SchemeKind::Diagonal => Some(DegenerateKind::Diagonal),
            SchemeKind::Antidiagonal => Some(DegenerateKind::Antidiagonal),
            SchemeKind::Central => Some(DegenerateKind::Central),
            _ => None,
        }
    }

    /// True when the scheme generates a stencil for this factor.
    pub fn admits_factor(&self, d: i64) -> bool {
        if d == 1 {
            return true;
        }
        match self {
            SchemeKind::Central => d >= 1 && d % 2 == 1,
            _ => d >= 1,
        }
    }

    /// True when the scheme generates stencils of this dimension.
    pub fn admits_dim(&self, dim: usize) -> bool {
        match self {
            SchemeKind::Bf | SchemeKind::Parity | SchemeKind::UniformCorner => dim >= 1,
            _ => dim == 2,
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = SchemeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SchemeKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| SchemeError::UnknownScheme { name: s.to_owned() })
    }
}

/// A scheme together with a fixed dimension: a map from admissible
/// factors to stencils, with optional per-factor replacements (used to
/// wire in deliberately broken members for negative tests).
#[derive(Debug, Clone)]
pub struct StencilFamily {
    name: String,
    kind: SchemeKind,
    dim: usize,
    overrides: BTreeMap<i64, WeightStencil>,
}

impl StencilFamily {
    pub fn new(kind: SchemeKind, dim: usize) -> Result<Self, SchemeError> {
        if !kind.admits_dim(dim) {
            return Err(SchemeError::DimensionNotAdmissible { scheme: kind, dim });
        }
        Ok(Self { name: format!("{kind}[{dim}d]"), kind, dim, overrides: BTreeMap::new() })
    }

    /// Replaces the member at one factor (the factor must be admissible
    /// and the replacement must match the family's shape).
    pub fn with_override(mut self, d: i64, stencil: WeightStencil) -> Result<Self, SchemeError> {
        if !self.kind.admits_factor(d) {
            return Err(SchemeError::FactorNotAdmissible { scheme: self.kind, d });
        }
        if stencil.dim() != self.dim
            || stencil.convention() != self.kind.convention()
            || stencil.factor() != d
        {
            return Err(SchemeError::OverrideShape { d });
        }
        self.name = format!("{} (replaced at d={d})", self.name);
        self.overrides.insert(d, stencil);
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> SchemeKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn convention(&self) -> Convention {
        self.kind.convention()
    }

    /// The family member at factor `d`. Factor 1 is the identity for
    /// every scheme.
    pub fn stencil(&self, d: i64) -> Result<WeightStencil, SchemeError> {
        if let Some(s) = self.overrides.get(&d) {
            return Ok(s.clone());
        }
        if !self.kind.admits_factor(d) {
            return Err(SchemeError::FactorNotAdmissible { scheme: self.kind, d });
        }
        if d == 1 {
            return WeightStencil::identity(self.dim, self.convention())
                .map_err(SchemeError::Stencil);
        }
        match self.kind {
            SchemeKind::Bf => bf_stencil(d, self.dim),
            SchemeKind::Parity => {
                let profile = parity_stencil(d)?;
                WeightStencil::tensor_product(&vec![profile; self.dim])
                    .map_err(SchemeError::Stencil)
            }
            SchemeKind::UniformCorner => uniform_corner_stencil(d, self.dim),
            other => degenerate_stencil(
                other.degenerate().expect("non-product kinds are degenerate"),
                d,
            ),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SchemeError {
    #[error("unknown scheme '{name}'")]
    UnknownScheme { name: String },
    #[error("scheme {scheme} does not admit factor {d}")]
    FactorNotAdmissible { scheme: SchemeKind, d: i64 },
    #[error("scheme {scheme} does not admit dimension {dim}")]
    DimensionNotAdmissible { scheme: SchemeKind, dim: usize },
    #[error("replacement stencil at factor {d} does not match the family shape")]
    OverrideShape { d: i64 },
    #[error(transparent)]
    Stencil(#[from] StencilError),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bf_d2_two_dimensional_weights() {
        let s = bf_stencil(2, 2).unwrap();
        assert_eq!(s.support_size(), 9);
        assert_eq!(s.weight_at(&[0, 0]), rat(4, 16));
        assert_eq!(s.weight_at(&[0, 1]), rat(2, 16));
        assert_eq!(s.weight_at(&[-1, 0]), rat(2, 16));
        assert_eq!(s.weight_at(&[1, -1]), rat(1, 16));
        assert_eq!(s.weight_sum(), rat_int(1));
    }

    #[test]
    fn bf_d1_is_identity() {
        for dim in 1..=3 {
            let s = bf_stencil(1, dim).unwrap();
            assert_eq!(s.support_size(), 1);
            assert_eq!(s.weight_at(&vec![0; dim]), rat_int(1));
        }
    }

    #[test]
    fn bf_d3_one_dimensional_weights() {
        let s = bf_stencil(3, 1).unwrap();
        assert_eq!(s.weight_at(&[0]), rat(1, 3));
        assert_eq!(s.weight_at(&[1]), rat(2, 9));
        assert_eq!(s.weight_at(&[-1]), rat(2, 9));
        assert_eq!(s.weight_at(&[2]), rat(1, 9));
        assert_eq!(s.weight_at(&[-2]), rat(1, 9));
    }

    #[test]
    fn bf_symmetries() {
        for d in [2, 3, 5] {
            for dim in [1, 2, 3] {
                let s = bf_stencil(d, dim).unwrap();
                assert!(s.is_sign_symmetric());
                assert!(s.is_permutation_symmetric());
                assert_eq!(s.support_size(), (2 * d as usize - 1).pow(dim as u32));
            }
        }
    }

    #[test]
    fn parity_examples() {
        let s = parity_stencil(2).unwrap();
        assert_eq!(s.weight_at(&[-1]), rat(1, 2));
        assert_eq!(s.weight_at(&[0]), rat_int(0));
        assert_eq!(s.weight_at(&[1]), rat(1, 2));

        let s = parity_stencil(3).unwrap();
        assert_eq!(s.weight_at(&[-2]), rat(1, 3));
        assert_eq!(s.weight_at(&[0]), rat(1, 3));
        assert_eq!(s.weight_at(&[2]), rat(1, 3));
        assert_eq!(s.weight_at(&[1]), rat_int(0));

        let s = parity_stencil(5).unwrap();
        let support: Vec<i64> = s.support().map(|(o, _)| o[0]).collect();
        assert_eq!(support, vec![-4, -2, 0, 2, 4]);
        assert!(s.support().all(|(_, w)| *w == rat(1, 5)));
    }

    #[test]
    fn parity_has_d_nonzero_weights_for_all_factors() {
        for d in 2..=16 {
            let s = parity_stencil(d).unwrap();
            assert_eq!(s.support_size(), d as usize, "factor {d}");
            assert_eq!(s.weight_sum(), rat_int(1));
        }
    }

    #[test]
    fn uniform_corner_examples() {
        let s = uniform_corner_stencil(4, 2).unwrap();
        assert_eq!(s.support_size(), 16);
        assert!(s.support().all(|(_, w)| *w == rat(1, 16)));

        let s = uniform_corner_stencil(1, 2).unwrap();
        assert_eq!(s.weight_at(&[0, 0]), rat_int(1));

        let s = uniform_corner_stencil(3, 1).unwrap();
        for i in 0..3 {
            assert_eq!(s.weight_at(&[i]), rat(1, 3));
        }
    }

    #[test]
    fn degenerate_examples() {
        let s = degenerate_stencil(DegenerateKind::LowerLeft, 4).unwrap();
        assert_eq!(s.support_size(), 1);
        assert_eq!(s.weight_at(&[0, 0]), rat_int(1));

        let s = degenerate_stencil(DegenerateKind::Central, 3).unwrap();
        assert_eq!(s.weight_at(&[1, 1]), rat_int(1));

        let s = degenerate_stencil(DegenerateKind::Antidiagonal, 2).unwrap();
        assert_eq!(s.weight_at(&[0, 1]), rat(1, 2));
        assert_eq!(s.weight_at(&[1, 0]), rat(1, 2));
        assert_eq!(s.support_size(), 2);

        let s = degenerate_stencil(DegenerateKind::Diagonal, 3).unwrap();
        for i in 0..3 {
            assert_eq!(s.weight_at(&[i, i]), rat(1, 3));
        }

        assert_eq!(
            degenerate_stencil(DegenerateKind::CornerNe, 4).unwrap().weight_at(&[3, 3]),
            rat_int(1)
        );
        assert_eq!(
            degenerate_stencil(DegenerateKind::CornerNw, 4).unwrap().weight_at(&[0, 3]),
            rat_int(1)
        );
        assert_eq!(
            degenerate_stencil(DegenerateKind::CornerSe, 4).unwrap().weight_at(&[3, 0]),
            rat_int(1)
        );
    }

    #[test]
    fn central_rejects_even_factors() {
        assert!(matches!(
            degenerate_stencil(DegenerateKind::Central, 4),
            Err(SchemeError::FactorNotAdmissible { .. })
        ));
    }

    #[test]
    fn tensor_product_of_bf_profiles_matches_bf() {
        let p = bf_stencil(2, 1).unwrap();
        let s2 = WeightStencil::tensor_product(&[p.clone(), p]).unwrap();
        assert_eq!(s2, bf_stencil(2, 2).unwrap());
    }

    #[test]
    fn tensor_product_of_parity_profiles() {
        let p = parity_stencil(3).unwrap();
        let s = WeightStencil::tensor_product(&[p.clone(), p]).unwrap();
        assert_eq!(s.support_size(), 9);
        for (offset, w) in s.support() {
            assert!(offset.iter().all(|c| c % 2 == 0));
            assert_eq!(*w, rat(1, 9));
        }
    }

    #[test]
    fn family_treats_factor_one_as_identity() {
        for kind in SchemeKind::ALL {
            let dim = if kind.admits_dim(1) { 1 } else { 2 };
            let fam = StencilFamily::new(kind, dim).unwrap();
            let s = fam.stencil(1).unwrap();
            assert!(s.is_identity(), "{kind}");
            assert_eq!(s.weight_at(&vec![0; dim]), rat_int(1));
        }
    }

    #[test]
    fn family_respects_admissibility() {
        let fam = StencilFamily::new(SchemeKind::Central, 2).unwrap();
        assert!(fam.stencil(3).is_ok());
        assert!(fam.stencil(4).is_err());

        assert!(StencilFamily::new(SchemeKind::Diagonal, 3).is_err());
    }

    #[test]
    fn scheme_names_round_trip() {
        for kind in SchemeKind::ALL {
            assert_eq!(kind.name().parse::<SchemeKind>().unwrap(), kind);
        }
        assert!("nonsense".parse::<SchemeKind>().is_err());
    }
}
