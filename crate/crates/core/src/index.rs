//! Cell labelling conventions, index boxes, and d-adic index arithmetic.
//!
//! Cells of the lattice `L_z = z Z^D` are named by integer coordinate
//! vectors under one of two conventions:
//!
//! * **Centered** — after shifting the coordinate system by half a cell
//!   per axis, the cell named `(a_1, ..., a_D)` has its center at
//!   `(a_1 z, ..., a_D z)`. The shift is a documented convention only;
//!   nothing stores it.
//! * **Corner** — the cell is named by its lower-left corner.

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

/// Cell labelling convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convention {
    Centered,
    Corner,
}

/// Integer offset vector, inline up to four axes.
pub type Offset = SmallVec<[i64; 4]>;

/// A cell name: integer coordinates plus the convention they live in.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CellIndex {
    pub coords: Offset,
    pub convention: Convention,
}

impl CellIndex {
    pub fn new(coords: impl Into<Offset>, convention: Convention) -> Self {
        Self { coords: coords.into(), convention }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// The coarse cell containing (or representing) this cell under a
    /// factor-`d` scale change.
    ///
    /// Corner labels use floor division. Centered labels map to the
    /// nearest multiple of `d`; exact halfway ties round toward
    /// positive infinity.
    pub fn coarse(&self, d: u32) -> CellIndex {
        let d = i64::from(d.max(1));
        let coords = self
            .coords
            .iter()
            .map(|&c| match self.convention {
                Convention::Corner => c.div_euclid(d),
                Convention::Centered => (2 * c + d).div_euclid(2 * d),
            })
            .collect();
        CellIndex { coords, convention: self.convention }
    }
}

/// Digits of `i` in base `d`, most significant first, padded to length `s`.
///
/// This is the unique expansion `i = i_1 d^(s-1) + ... + i_s` with every
/// digit in `[0, d-1]`; it exists iff `0 <= i <= d^s - 1`.
pub fn d_adic_expand(i: u64, d: u32, s: u32) -> Result<Vec<u32>, IndexError> {
    if d < 2 {
        return Err(IndexError::BadBase { d });
    }
    if s == 0 {
        return Err(IndexError::BadLength);
    }
    let mut digits = vec![0u32; s as usize];
    let mut rest = i;
    for slot in digits.iter_mut().rev() {
        *slot = (rest % u64::from(d)) as u32;
        rest /= u64::from(d);
    }
    if rest != 0 {
        return Err(IndexError::OutOfRange { i, d, s });
    }
    Ok(digits)
}

/// Horner re-evaluation of a digit vector; inverse of [`d_adic_expand`].
pub fn d_adic_value(digits: &[u32], d: u32) -> u64 {
    digits.iter().fold(0u64, |acc, &g| acc * u64::from(d) + u64::from(g))
}

/// An axis-aligned box of cell indices, inclusive on both ends.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexBox {
    lo: Vec<i64>,
    hi: Vec<i64>,
}

impl IndexBox {
    /// Builds a box from inclusive bounds; every axis must be nonempty.
    pub fn new(lo: Vec<i64>, hi: Vec<i64>) -> Result<Self, IndexError> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(IndexError::MismatchedBounds);
        }
        if lo.iter().zip(&hi).any(|(l, h)| l > h) {
            return Err(IndexError::EmptyBox {
                lo: lo.clone(),
                hi: hi.clone(),
            });
        }
        Ok(Self { lo, hi })
    }

    /// A cube `[-half, half]^dim`.
    pub fn cube(dim: usize, half: i64) -> Self {
        Self::new(vec![-half; dim], vec![half; dim]).expect("nonempty cube")
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[i64] {
        &self.lo
    }

    pub fn hi(&self) -> &[i64] {
        &self.hi
    }

    pub fn extent_along(&self, axis: usize) -> usize {
        (self.hi[axis] - self.lo[axis] + 1) as usize
    }

    pub fn num_cells(&self) -> usize {
        (0..self.dim()).map(|k| self.extent_along(k)).product()
    }

    pub fn contains(&self, coords: &[i64]) -> bool {
        coords.len() == self.dim()
            && coords
                .iter()
                .enumerate()
                .all(|(k, &c)| self.lo[k] <= c && c <= self.hi[k])
    }

    /// Row-major rank of a cell, last axis fastest.
    pub fn rank_of(&self, coords: &[i64]) -> Option<usize> {
        if !self.contains(coords) {
            return None;
        }
        let mut rank = 0usize;
        for (k, &c) in coords.iter().enumerate() {
            rank = rank * self.extent_along(k) + (c - self.lo[k]) as usize;
        }
        Some(rank)
    }

    /// Iterates all cells in row-major order.
    pub fn iter(&self) -> IndexBoxIter<'_> {
        IndexBoxIter { bx: self, next: Some(self.lo.clone()) }
    }

    /// The cells common to both boxes, or `None` when they are disjoint
    /// or of different dimensions.
    pub fn intersect(&self, other: &IndexBox) -> Option<IndexBox> {
        if self.dim() != other.dim() {
            return None;
        }
        let lo: Vec<i64> = (0..self.dim()).map(|k| self.lo[k].max(other.lo[k])).collect();
        let hi: Vec<i64> = (0..self.dim()).map(|k| self.hi[k].min(other.hi[k])).collect();
        IndexBox::new(lo, hi).ok()
    }
}

pub struct IndexBoxIter<'a> {
    bx: &'a IndexBox,
    next: Option<Vec<i64>>,
}

impl Iterator for IndexBoxIter<'_> {
    type Item = Vec<i64>;

    fn next(&mut self) -> Option<Vec<i64>> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        for k in (0..self.bx.dim()).rev() {
            if succ[k] < self.bx.hi[k] {
                succ[k] += 1;
                self.next = Some(succ);
                return Some(current);
            }
            succ[k] = self.bx.lo[k];
        }
        // Wrapped around every axis: this was the last cell.
        Some(current)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IndexError {
    #[error("{i} has no {s}-digit base-{d} expansion (max is {d}^{s} - 1)")]
    OutOfRange { i: u64, d: u32, s: u32 },
    #[error("expansion base must be >= 2, got {d}")]
    BadBase { d: u32 },
    #[error("expansion length must be >= 1")]
    BadLength,
    #[error("box bounds must be nonempty vectors of equal dimension")]
    MismatchedBounds,
    #[error("box with lo {lo:?}, hi {hi:?} is empty")]
    EmptyBox { lo: Vec<i64>, hi: Vec<i64> },
}
