//! Raw snapshot records.
//!
//! A snapshot file is a sequence of records, one per scalar field:
//!
//! | bytes        | content                                   |
//! |--------------|-------------------------------------------|
//! | 4            | name length `L`, `u32` little-endian       |
//! | L            | field name, UTF-8                          |
//! | 4            | dimension, `u32` little-endian             |
//! | 4            | points per axis `N`, `u32` little-endian   |
//! | 8            | time, `f64` little-endian                  |
//! | 8 · N^dim    | values, `f64` little-endian, row-major     |
//!
//! Row-major means axis 0 (`x₁`) varies slowest.

use std::io::{ErrorKind, Read, Write};

use super::{Grid, ScalarField};
use crate::error::{Error, Result};

pub fn write_record<W: Write>(w: &mut W, name: &str, time: f64, field: &ScalarField) -> Result<()> {
    let grid = field.grid();
    w.write_all(&(name.len() as u32).to_le_bytes())?;
    w.write_all(name.as_bytes())?;
    w.write_all(&(grid.dim() as u32).to_le_bytes())?;
    w.write_all(&(grid.n() as u32).to_le_bytes())?;
    w.write_all(&time.to_le_bytes())?;
    let mut buf = Vec::with_capacity(8 * grid.len());
    for v in field.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct Record {
    pub name: String,
    pub time: f64,
    pub field: ScalarField,
}

/// Reads the next record, or `None` at a clean end of stream.
pub fn read_record<R: Read>(r: &mut R) -> Result<Option<Record>> {
    let mut u32buf = [0u8; 4];
    match r.read_exact(&mut u32buf) {
        Ok(()) => {}
        Err(e) if e.kind() == ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e.into()),
    }
    let name_len = u32::from_le_bytes(u32buf) as usize;
    if name_len > 4096 {
        return Err(Error::Format(format!("implausible name length {name_len}")));
    }
    let mut name = vec![0u8; name_len];
    r.read_exact(&mut name)?;
    let name = String::from_utf8(name).map_err(|e| Error::Format(e.to_string()))?;
    r.read_exact(&mut u32buf)?;
    let dim = u32::from_le_bytes(u32buf) as usize;
    r.read_exact(&mut u32buf)?;
    let n = u32::from_le_bytes(u32buf) as usize;
    let mut f64buf = [0u8; 8];
    r.read_exact(&mut f64buf)?;
    let time = f64::from_le_bytes(f64buf);
    let grid = Grid::new(dim, n)?;
    let mut raw = vec![0u8; 8 * grid.len()];
    r.read_exact(&mut raw)?;
    let values = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Ok(Some(Record {
        name,
        time,
        field: ScalarField::from_values(&grid, values),
    }))
}

pub fn read_all<R: Read>(r: &mut R) -> Result<Vec<Record>> {
    let mut out = Vec::new();
    while let Some(rec) = read_record(r)? {
        out.push(rec);
    }
    Ok(out)
}
