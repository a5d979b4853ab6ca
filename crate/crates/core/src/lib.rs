//! Coherent families of lattice averaging operators.
//!
//! This crate implements block-averaging (coarsening) operators on the
//! scaled integer lattices `L_z = z * Z^D` with exact rational weights.
//! It provides:
//!
//! * the catalogue of named weight schemes ([`schemes`]), including the
//!   centered kernel `d^{-2D} * prod(d - |i_k|)`, the parity scheme,
//!   the uniform corner scheme, and the degenerate corner schemes;
//! * a convolution engine ([`engine`]) that applies stencils to fields,
//!   composes them symbolically, and exploits tensor-product structure;
//! * coherence verification ([`coherence`]): checking the operator
//!   identity `avg_e . avg_d = avg_{e*d}` offset by offset, with exact
//!   reporting of any discrepancy;
//! * solvers ([`uniqueness`]) that recover, from the coherence
//!   equations alone, every weight family satisfying them in the small
//!   cases where that set is completely understood;
//! * the continuum bridge ([`continuum`]): sampling piecewise-linear
//!   hat kernels into lattice fields and checking which polynomial
//!   degrees survive averaging exactly, plus multiscale towers.
//!
//! All weight arithmetic is exact; floating point appears only in the
//! explicitly floating application paths and obeys stated tolerances.

pub mod coherence;
pub mod continuum;
pub mod engine;
pub mod field;
pub mod index;
pub mod rational;
pub mod scale;
pub mod schemes;
pub mod stencil;
pub mod uniqueness;

pub use field::{CellField, FieldData};
pub use index::{CellIndex, Convention, IndexBox, Offset};
pub use rational::Rat;
pub use scale::{Scale, ScaleSet};
pub use schemes::{SchemeKind, StencilFamily};
pub use stencil::WeightStencil;
