//! Solution export: `(x, t, u)` CSV and the compact binary row dump.
//!
//! Binary layout, little-endian: magic `"WAVE1D\0"` (7 bytes), version
//! `u16`, then `h`, `x_min`, `x_max`, `t_max` as 8-byte floats, then the
//! row-major node values. Row and column counts are implied by the header
//! geometry.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::picard::GridFunction;

pub const BINARY_MAGIC: &[u8; 7] = b"WAVE1D\0";
pub const BINARY_VERSION: u16 = 1;

/// Writes every node as one `x,t,u` line after a header row.
pub fn write_solution_csv<W: Write>(out: &mut W, grid: &GridFunction) -> std::io::Result<()> {
    writeln!(out, "x,t,u")?;
    for k in 0..grid.nt() {
        let t = grid.t_of(k);
        for i in 0..grid.nx() {
            writeln!(
                out,
                "{:.12e},{:.12e},{:.12e}",
                grid.x_of(i),
                t,
                grid.value(k, i)
            )?;
        }
    }
    Ok(())
}

pub fn save_solution_csv(path: &Path, grid: &GridFunction) -> std::io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_solution_csv(&mut out, grid)
}

/// Writes the documented binary dump.
pub fn write_solution_binary<W: Write>(out: &mut W, grid: &GridFunction) -> std::io::Result<()> {
    out.write_all(BINARY_MAGIC)?;
    out.write_all(&BINARY_VERSION.to_le_bytes())?;
    for v in [grid.h(), grid.x_min(), grid.x_max(), grid.t_max()] {
        out.write_all(&v.to_le_bytes())?;
    }
    for k in 0..grid.nt() {
        for v in grid.row(k) {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn save_solution_binary(path: &Path, grid: &GridFunction) -> std::io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_solution_binary(&mut out, grid)
}

/// Reads a binary dump back; geometry comes from the header.
pub fn load_solution_binary(path: &Path) -> Result<GridFunction> {
    let mut reader = BufReader::new(File::open(path).map_err(io_err)?);
    let mut magic = [0u8; 7];
    reader.read_exact(&mut magic).map_err(io_err)?;
    if &magic != BINARY_MAGIC {
        return Err(Error::InvalidDataTable("bad magic in binary dump".into()));
    }
    let mut v16 = [0u8; 2];
    reader.read_exact(&mut v16).map_err(io_err)?;
    if u16::from_le_bytes(v16) != BINARY_VERSION {
        return Err(Error::InvalidDataTable(format!(
            "unsupported dump version {}",
            u16::from_le_bytes(v16)
        )));
    }
    let mut header = [0f64; 4];
    for slot in header.iter_mut() {
        let mut buf = [0u8; 8];
        reader.read_exact(&mut buf).map_err(io_err)?;
        *slot = f64::from_le_bytes(buf);
    }
    let [h, x_min, x_max, t_max] = header;
    if !(h > 0.0) {
        return Err(Error::InvalidDataTable("nonpositive spacing".into()));
    }
    let nx = ((x_max - x_min) / h).round() as usize + 1;
    let nt = (t_max / h).round() as usize + 1;
    let mut rows = Vec::with_capacity(nt);
    for _ in 0..nt {
        let mut row = Vec::with_capacity(nx);
        for _ in 0..nx {
            let mut buf = [0u8; 8];
            reader.read_exact(&mut buf).map_err(io_err)?;
            row.push(f64::from_le_bytes(buf));
        }
        rows.push(row);
    }
    GridFunction::from_rows(h, x_min, rows)
}

fn io_err(e: std::io::Error) -> Error {
    Error::InvalidDataTable(format!("binary dump I/O failure: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_roundtrip() {
        let grid = GridFunction::from_fn(0.25, -1.0, 9, 5, |x, t| x * t + 0.5);
        let dir = std::env::temp_dir().join("wavelab-io-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("dump.bin");
        save_solution_binary(&path, &grid).unwrap();
        let back = load_solution_binary(&path).unwrap();
        assert!(grid.sup_diff(&back).unwrap() == 0.0);
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn rejects_foreign_files() {
        let dir = std::env::temp_dir().join("wavelab-io-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("not-a-dump.bin");
        std::fs::write(&path, b"definitely not WAVE1D data").unwrap();
        assert!(load_solution_binary(&path).is_err());
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn csv_shape() {
        let grid = GridFunction::zeros(0.5, 0.0, 3, 2);
        let mut buf = Vec::new();
        write_solution_csv(&mut buf, &grid).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 1 + 6);
        assert_eq!(lines[0], "x,t,u");
    }
}
