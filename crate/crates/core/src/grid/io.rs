//! Snapshot files. Both layouts store the header `(n, m, R, N, t)` followed
//! by the values in storage order.
//!
//! Binary: 8-byte magic, `n` and `m` and `N` as little-endian `u32`, `R` and
//! `t` as little-endian `f64`, then the values as little-endian `f64`.
//! CSV: a `n,m,R,N,t` header line, one header record, then one value per line.
//! Floats are written with Rust's shortest round-trip formatting.

use std::io::{BufRead, Read, Write};

use super::{Field, Grid};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"QWFIELD1";

pub fn write_binary<W: Write>(f: &Field, mut w: W) -> Result<()> {
    let g = f.grid();
    w.write_all(MAGIC)?;
    w.write_all(&(g.dim() as u32).to_le_bytes())?;
    w.write_all(&(g.points() as u32).to_le_bytes())?;
    w.write_all(&g.half_width().to_le_bytes())?;
    w.write_all(&(f.components() as u32).to_le_bytes())?;
    w.write_all(&f.time().to_le_bytes())?;
    let mut buf = Vec::with_capacity(8 * f.data().len());
    for v in f.data() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn read_binary<R: Read>(mut r: R) -> Result<Field> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::FieldFormat("bad magic".into()));
    }
    let n = read_u32(&mut r)? as usize;
    let m = read_u32(&mut r)? as usize;
    let half = read_f64(&mut r)?;
    let comps = read_u32(&mut r)? as usize;
    let t = read_f64(&mut r)?;
    let grid = Grid::new(n, m, half)?;
    let mut raw = Vec::new();
    r.read_to_end(&mut raw)?;
    if raw.len() != 8 * comps * grid.len() {
        return Err(Error::FieldFormat(format!(
            "expected {} value bytes, found {}",
            8 * comps * grid.len(),
            raw.len()
        )));
    }
    let data = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8"))).collect();
    Field::new(grid, comps, t, data)
}

pub fn write_csv<W: Write>(f: &Field, mut w: W) -> Result<()> {
    let g = f.grid();
    writeln!(w, "n,m,R,N,t")?;
    writeln!(w, "{},{},{:?},{},{:?}", g.dim(), g.points(), g.half_width(), f.components(), f.time())?;
    for v in f.data() {
        writeln!(w, "{v:?}")?;
    }
    Ok(())
}

pub fn read_csv<R: BufRead>(r: R) -> Result<Field> {
    let mut lines = r.lines();
    let mut next = |what: &str| -> Result<String> {
        lines.next().ok_or_else(|| Error::FieldFormat(format!("missing {what}")))?.map_err(Error::from)
    };
    if next("header")?.trim() != "n,m,R,N,t" {
        return Err(Error::FieldFormat("header must be n,m,R,N,t".into()));
    }
    let head = next("header record")?;
    let parts: Vec<&str> = head.trim().split(',').collect();
    if parts.len() != 5 {
        return Err(Error::FieldFormat(format!("header record has {} fields", parts.len())));
    }
    let bad = |s: &str| Error::FieldFormat(format!("cannot parse '{s}'"));
    let n: usize = parts[0].parse().map_err(|_| bad(parts[0]))?;
    let m: usize = parts[1].parse().map_err(|_| bad(parts[1]))?;
    let half: f64 = parts[2].parse().map_err(|_| bad(parts[2]))?;
    let comps: usize = parts[3].parse().map_err(|_| bad(parts[3]))?;
    let t: f64 = parts[4].parse().map_err(|_| bad(parts[4]))?;
    let grid = Grid::new(n, m, half)?;
    let mut data = Vec::with_capacity(comps * grid.len());
    for line in lines {
        let line = line?;
        let s = line.trim();
        if s.is_empty() {
            continue;
        }
        data.push(s.parse::<f64>().map_err(|_| bad(s))?);
    }
    Field::new(grid, comps, t, data)
}
