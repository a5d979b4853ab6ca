//! Dense cell fields on a finite index box, with exact file round-trips.
//!
//! A field assigns a value to every cell of a finite box of the lattice
//! `L_z`. Values are exact rationals or doubles. Fields are immutable
//! after construction; out-of-extent access is an error rather than a
//! padded or wrapped read.
//!
//! # File format
//!
//! One JSON header line followed by a row-major CSV payload, one line per
//! innermost row (last axis contiguous):
//!
//! ```text
//! {"dimension":1,"scale":{"num":"1","den":"6"},"scale_set":"all-reciprocals","convention":"centered","lo":[-2],"hi":[2],"value_type":"rational"}
//! -2/1,-1/1,0/1,1/1,2/1
//! ```
//!
//! Rationals are written `p/q` reduced with `q > 0`, so rational fields
//! round-trip bit-exactly. Doubles use Rust's shortest round-trip
//! formatting.

use std::io::{BufRead, Write};

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::index::{Convention, IndexBox};
use crate::rational::{format_rat, parse_rat, Rat};
use crate::scale::{Scale, ScaleSet};

/// Values a field file can carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValueType {
    Rational,
    Real,
}

/// A dense field of values on the cells of an [`IndexBox`].
#[derive(Debug, Clone, PartialEq)]
pub struct CellField<T> {
    scale: Scale,
    convention: Convention,
    extent: IndexBox,
    values: Vec<T>,
}

impl<T: Clone> CellField<T> {
    /// Builds a field by evaluating `f` at every cell, row-major.
    pub fn from_fn(
        scale: Scale,
        convention: Convention,
        extent: IndexBox,
        mut f: impl FnMut(&[i64]) -> T,
    ) -> Self {
        let values = extent.iter().map(|c| f(&c)).collect();
        Self { scale, convention, extent, values }
    }

    /// Wraps an existing row-major value buffer.
    pub fn from_values(
        scale: Scale,
        convention: Convention,
        extent: IndexBox,
        values: Vec<T>,
    ) -> Result<Self, FieldError> {
        if values.len() != extent.num_cells() {
            return Err(FieldError::WrongValueCount {
                expected: extent.num_cells(),
                got: values.len(),
            });
        }
        Ok(Self { scale, convention, extent, values })
    }

    pub fn scale(&self) -> &Scale {
        &self.scale
    }

    pub fn convention(&self) -> Convention {
        self.convention
    }

    pub fn extent(&self) -> &IndexBox {
        &self.extent
    }

    pub fn dim(&self) -> usize {
        self.extent.dim()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Value at a cell; out-of-extent coordinates are an error.
    pub fn get(&self, coords: &[i64]) -> Result<&T, FieldError> {
        self.extent
            .rank_of(coords)
            .map(|r| &self.values[r])
            .ok_or_else(|| FieldError::OutOfExtent { coords: coords.to_vec() })
    }

    /// Applies a value transformation, keeping geometry.
    pub fn map<U: Clone>(&self, f: impl FnMut(&T) -> U) -> CellField<U> {
        CellField {
            scale: self.scale.clone(),
            convention: self.convention,
            extent: self.extent.clone(),
            values: self.values.iter().map(f).collect(),
        }
    }
}

/// Header line of the field file format.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldHeader {
    pub dimension: usize,
    pub scale: ScaleFraction,
    pub scale_set: ScaleSet,
    pub convention: Convention,
    pub lo: Vec<i64>,
    pub hi: Vec<i64>,
    pub value_type: ValueType,
}

/// Exact numerator/denominator pair, serialized as decimal strings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScaleFraction {
    pub num: String,
    pub den: String,
}

impl ScaleFraction {
    pub fn of(scale: &Scale) -> Self {
        Self {
            num: scale.value().numer().to_string(),
            den: scale.value().denom().to_string(),
        }
    }

    pub fn to_scale(&self, set: ScaleSet) -> Result<Scale, FieldError> {
        let num: BigInt = self.num.parse().map_err(|_| FieldError::BadHeader("scale numerator".into()))?;
        let den: BigInt = self.den.parse().map_err(|_| FieldError::BadHeader("scale denominator".into()))?;
        if den == BigInt::from(0) {
            return Err(FieldError::BadHeader("scale denominator is zero".into()));
        }
        Scale::new(Rat::new(num, den), set).map_err(|e| FieldError::BadHeader(e.to_string()))
    }
}

/// Field payload with the value type made explicit, as read from a file.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldData {
    Rational(CellField<Rat>),
    Real(CellField<f64>),
}

impl FieldData {
    pub fn value_type(&self) -> ValueType {
        match self {
            FieldData::Rational(_) => ValueType::Rational,
            FieldData::Real(_) => ValueType::Real,
        }
    }

    pub fn convention(&self) -> Convention {
        match self {
            FieldData::Rational(f) => f.convention(),
            FieldData::Real(f) => f.convention(),
        }
    }

    pub fn extent(&self) -> &IndexBox {
        match self {
            FieldData::Rational(f) => f.extent(),
            FieldData::Real(f) => f.extent(),
        }
    }
}

fn write_payload<T>(
    w: &mut impl Write,
    extent: &IndexBox,
    values: &[T],
    mut fmt: impl FnMut(&T) -> String,
) -> std::io::Result<()> {
    let dim = extent.dim();
    let row_len = extent.extent_along(dim - 1);
    for row in values.chunks(row_len) {
        let line: Vec<String> = row.iter().map(&mut fmt).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

/// Writes a rational or real field in the documented format.
pub fn write_field(w: &mut impl Write, field: &FieldData) -> Result<(), FieldError> {
    let (scale, convention, extent, value_type) = match field {
        FieldData::Rational(f) => (f.scale(), f.convention(), f.extent(), ValueType::Rational),
        FieldData::Real(f) => (f.scale(), f.convention(), f.extent(), ValueType::Real),
    };
    let header = FieldHeader {
        dimension: extent.dim(),
        scale: ScaleFraction::of(scale),
        scale_set: scale.scale_set(),
        convention,
        lo: extent.lo().to_vec(),
        hi: extent.hi().to_vec(),
        value_type,
    };
    let header_line = serde_json::to_string(&header).map_err(|e| FieldError::BadHeader(e.to_string()))?;
    writeln!(w, "{header_line}")?;
    match field {
        FieldData::Rational(f) => write_payload(w, extent, f.values(), format_rat)?,
        FieldData::Real(f) => write_payload(w, extent, f.values(), |v| format!("{v}"))?,
    }
    Ok(())
}

/// Reads a field written by [`write_field`].
pub fn read_field(r: &mut impl BufRead) -> Result<FieldData, FieldError> {
    let mut header_line = String::new();
    r.read_line(&mut header_line)?;
    let header: FieldHeader =
        serde_json::from_str(header_line.trim()).map_err(|e| FieldError::BadHeader(e.to_string()))?;
    if header.lo.len() != header.dimension || header.hi.len() != header.dimension {
        return Err(FieldError::BadHeader("extent bounds do not match dimension".into()));
    }
    let extent = IndexBox::new(header.lo.clone(), header.hi.clone())
        .map_err(|e| FieldError::BadHeader(e.to_string()))?;
    let scale = header.scale.to_scale(header.scale_set)?;

    let mut cells: Vec<String> = Vec::with_capacity(extent.num_cells());
    for line in r.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        cells.extend(line.split(',').map(|s| s.trim().to_owned()));
    }
    if cells.len() != extent.num_cells() {
        return Err(FieldError::WrongValueCount { expected: extent.num_cells(), got: cells.len() });
    }

    match header.value_type {
        ValueType::Rational => {
            let values = cells
                .iter()
                .map(|s| parse_rat(s).map_err(|e| FieldError::BadValue(e.to_string())))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(FieldData::Rational(CellField { scale, convention: header.convention, extent, values }))
        }
        ValueType::Real => {
            let values = cells
                .iter()
                .map(|s| s.parse::<f64>().map_err(|e| FieldError::BadValue(format!("{s}: {e}"))))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(FieldData::Real(CellField { scale, convention: header.convention, extent, values }))
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FieldError {
    #[error("cell {coords:?} is outside the field extent")]
    OutOfExtent { coords: Vec<i64> },
    #[error("extent holds {expected} cells but {got} values were supplied")]
    WrongValueCount { expected: usize, got: usize },
    #[error("malformed field header: {0}")]
    BadHeader(String),
    #[error("malformed field value: {0}")]
    BadValue(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
