//! Export formats: CSV grids, a compact binary grid format, NDJSON paths and
//! curves, and CSV tables for level sets, heights and densities.
//!
//! Floats are written with Rust's shortest round-trip formatting, so text
//! output reads back bit-exactly.

use std::collections::BTreeMap;
use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};

use crate::analysis::LevelSet;
use crate::curve_extract::MonotoneCurve;
use crate::error::{Error, Result};
use crate::grid::{GridKind, ValueGrid};
use crate::lattice_sim::{LatticePath, PassageField};
use crate::tasep_bridge::{DensitySample, HeightProfile};

pub const BINARY_MAGIC: &[u8; 5] = b"DLPP1";

fn io_err(e: std::io::Error) -> Error {
    Error::Format(e.to_string())
}

fn write_rows<W: Write>(w: &mut W, n1: usize, n2: usize, values: &[f64]) -> Result<()> {
    for i in 0..n1 {
        let row = &values[i * n2..(i + 1) * n2];
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", line.join(",")).map_err(io_err)?;
    }
    Ok(())
}

/// One line per `i`, preceded by a `# kind=passage_field, ...` header.
pub fn write_passage_csv<W: Write>(w: &mut W, pf: &PassageField) -> Result<()> {
    writeln!(
        w,
        "# kind=passage_field, dims={}x{}, N={}, seed={}",
        pf.n1, pf.n2, pf.scale_n, pf.seed
    )
    .map_err(io_err)?;
    write_rows(w, pf.n1, pf.n2, &pf.values)
}

/// One line per `i`, preceded by a `# kind=value_grid, ...` header.
pub fn write_grid_csv<W: Write>(w: &mut W, vg: &ValueGrid) -> Result<()> {
    writeln!(
        w,
        "# kind=value_grid, dims={}x{}, h={}, base={},{}",
        vg.n1, vg.n2, vg.h, vg.base.0, vg.base.1
    )
    .map_err(io_err)?;
    write_rows(w, vg.n1, vg.n2, &vg.values)
}

/// A CSV grid as read back: header fields plus row-major values.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvGrid {
    pub header: BTreeMap<String, String>,
    pub n1: usize,
    pub n2: usize,
    pub values: Vec<f64>,
}

impl CsvGrid {
    /// Rebuild a [`ValueGrid`]; needs an `h` header field.
    pub fn to_value_grid(&self) -> Result<ValueGrid> {
        let h: f64 = self
            .header
            .get("h")
            .ok_or_else(|| Error::Format("missing h in header".into()))?
            .parse()
            .map_err(|e| Error::Format(format!("bad h: {e}")))?;
        let mut vg = ValueGrid::new(h, self.n1, self.n2, GridKind::Solution, self.values.clone());
        if let Some(b) = self.header.get("base") {
            let parts: Vec<usize> = b
                .split(',')
                .map(|s| s.trim().parse().map_err(|e| Error::Format(format!("bad base: {e}"))))
                .collect::<Result<_>>()?;
            if parts.len() != 2 {
                return Err(Error::Format(format!("bad base {b:?}")));
            }
            vg.base = (parts[0], parts[1]);
            if vg.base != (0, 0) {
                vg.kind = GridKind::Relative;
            }
        }
        Ok(vg)
    }
}

fn parse_header(line: &str) -> Result<BTreeMap<String, String>> {
    let body = line
        .strip_prefix('#')
        .ok_or_else(|| Error::Format("missing '#' header".into()))?;
    let mut map = BTreeMap::new();
    let mut last_key: Option<String> = None;
    for part in body.split(',') {
        match part.split_once('=') {
            Some((k, v)) => {
                let k = k.trim().to_string();
                map.insert(k.clone(), v.trim().to_string());
                last_key = Some(k);
            }
            // `base=i,j` contains a comma
            None => match &last_key {
                Some(k) => {
                    let entry = map.get_mut(k).unwrap();
                    entry.push(',');
                    entry.push_str(part.trim());
                }
                None => return Err(Error::Format(format!("bad header field {part:?}"))),
            },
        }
    }
    Ok(map)
}

pub fn read_grid_csv<R: BufRead>(r: R) -> Result<CsvGrid> {
    let mut lines = r.lines();
    let first = lines
        .next()
        .ok_or_else(|| Error::Format("empty file".into()))?
        .map_err(io_err)?;
    let header = parse_header(&first)?;
    let dims = header
        .get("dims")
        .ok_or_else(|| Error::Format("missing dims in header".into()))?;
    let (a, b) = dims
        .split_once('x')
        .ok_or_else(|| Error::Format(format!("bad dims {dims:?}")))?;
    let parse_dim = |s: &str| s.parse::<usize>().map_err(|e| Error::Format(format!("bad dims: {e}")));
    let (n1, n2) = (parse_dim(a)?, parse_dim(b)?);
    let mut values = Vec::with_capacity(n1 * n2);
    for (i, line) in lines.enumerate() {
        let line = line.map_err(io_err)?;
        if line.is_empty() {
            continue;
        }
        let before = values.len();
        for field in line.split(',') {
            values.push(
                field
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Format(format!("row {i}: {e}")))?,
            );
        }
        if values.len() - before != n2 {
            return Err(Error::Format(format!("row {i} has {} values, expected {n2}", values.len() - before)));
        }
    }
    if values.len() != n1 * n2 {
        return Err(Error::Format(format!("expected {} rows, found {}", n1, values.len() / n2.max(1))));
    }
    Ok(CsvGrid { header, n1, n2, values })
}

/// `DLPP1`, then `n1` and `n2` as little-endian u64, then the values as little-endian f64.
pub fn write_binary<W: Write>(w: &mut W, n1: usize, n2: usize, values: &[f64]) -> Result<()> {
    if values.len() != n1 * n2 {
        return Err(Error::Format("value count does not match dims".into()));
    }
    w.write_all(BINARY_MAGIC).map_err(io_err)?;
    w.write_all(&(n1 as u64).to_le_bytes()).map_err(io_err)?;
    w.write_all(&(n2 as u64).to_le_bytes()).map_err(io_err)?;
    for v in values {
        w.write_all(&v.to_le_bytes()).map_err(io_err)?;
    }
    Ok(())
}

pub fn read_binary<R: Read>(r: &mut R) -> Result<(usize, usize, Vec<f64>)> {
    let mut magic = [0u8; 5];
    r.read_exact(&mut magic).map_err(io_err)?;
    if &magic != BINARY_MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let mut word = [0u8; 8];
    r.read_exact(&mut word).map_err(io_err)?;
    let n1 = u64::from_le_bytes(word) as usize;
    r.read_exact(&mut word).map_err(io_err)?;
    let n2 = u64::from_le_bytes(word) as usize;
    let count = n1
        .checked_mul(n2)
        .ok_or_else(|| Error::Format("dims overflow".into()))?;
    let mut values = Vec::with_capacity(count.min(1 << 24));
    for _ in 0..count {
        r.read_exact(&mut word).map_err(io_err)?;
        values.push(f64::from_le_bytes(word));
    }
    Ok((n1, n2, values))
}

#[derive(Serialize, Deserialize)]
struct LatticePoint {
    i: usize,
    j: usize,
}

#[derive(Serialize, Deserialize)]
struct CurvePoint {
    x: f64,
    y: f64,
}

fn write_ndjson<W: Write, T: Serialize>(w: &mut W, items: impl Iterator<Item = T>) -> Result<()> {
    for item in items {
        serde_json::to_writer(&mut *w, &item).map_err(|e| Error::Format(e.to_string()))?;
        writeln!(w).map_err(io_err)?;
    }
    Ok(())
}

fn read_ndjson<R: BufRead, T: for<'de> Deserialize<'de>>(r: R) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (k, line) in r.lines().enumerate() {
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Format(format!("line {}: {e}", k + 1)))?);
    }
    Ok(out)
}

/// One `{"i": .., "j": ..}` object per line.
pub fn write_path_ndjson<W: Write>(w: &mut W, path: &LatticePath) -> Result<()> {
    write_ndjson(w, path.points.iter().map(|&(i, j)| LatticePoint { i, j }))
}

pub fn read_path_ndjson<R: BufRead>(r: R) -> Result<LatticePath> {
    let pts: Vec<LatticePoint> = read_ndjson(r)?;
    Ok(LatticePath {
        points: pts.into_iter().map(|p| (p.i, p.j)).collect(),
    })
}

/// One `{"x": .., "y": ..}` object per line.
pub fn write_curve_ndjson<W: Write>(w: &mut W, curve: &MonotoneCurve) -> Result<()> {
    write_ndjson(w, curve.points.iter().map(|p| CurvePoint { x: p[0], y: p[1] }))
}

pub fn read_curve_ndjson<R: BufRead>(r: R) -> Result<MonotoneCurve> {
    let pts: Vec<CurvePoint> = read_ndjson(r)?;
    Ok(MonotoneCurve::from_points(pts.into_iter().map(|p| [p.x, p.y]).collect()))
}

/// Columns `x,y,level,polyline`; polylines are numbered per level.
pub fn write_level_sets_csv<W: Write>(w: &mut W, sets: &[LevelSet]) -> Result<()> {
    writeln!(w, "x,y,level,polyline").map_err(io_err)?;
    for set in sets {
        for (k, line) in set.polylines.iter().enumerate() {
            for p in line {
                writeln!(w, "{},{},{},{}", p[0], p[1], set.level, k).map_err(io_err)?;
            }
        }
    }
    Ok(())
}

pub fn read_level_sets_csv<R: BufRead>(r: R) -> Result<Vec<LevelSet>> {
    let mut sets: Vec<LevelSet> = Vec::new();
    for (n, line) in r.lines().enumerate().skip(1) {
        let line = line.map_err(io_err)?;
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 4 {
            return Err(Error::Format(format!("line {}: expected 4 columns", n + 1)));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| Error::Format(format!("line {}: {e}", n + 1)));
        let (x, y, level) = (num(f[0])?, num(f[1])?, num(f[2])?);
        let k: usize = f[3].parse().map_err(|e| Error::Format(format!("line {}: {e}", n + 1)))?;
        if sets.last().is_none_or(|s| s.level.to_bits() != level.to_bits()) {
            sets.push(LevelSet {
                level,
                polylines: Vec::new(),
            });
        }
        let set = sets.last_mut().unwrap();
        if k == set.polylines.len() {
            set.polylines.push(Vec::new());
        } else if k + 1 != set.polylines.len() {
            return Err(Error::Format(format!("line {}: polyline index out of order", n + 1)));
        }
        set.polylines[k].push([x, y]);
    }
    Ok(sets)
}

/// Columns `j,h`.
pub fn write_height_csv<W: Write>(w: &mut W, hp: &HeightProfile) -> Result<()> {
    writeln!(w, "# t={}", hp.t).map_err(io_err)?;
    writeln!(w, "j,h").map_err(io_err)?;
    for (k, h) in hp.heights.iter().enumerate() {
        writeln!(w, "{},{}", hp.j_min + k as i64, h).map_err(io_err)?;
    }
    Ok(())
}

/// Columns `x1,x2,s,t,rho`; undefined densities are written as `nan`.
pub fn write_density_csv<W: Write>(w: &mut W, d: &DensitySample) -> Result<()> {
    writeln!(w, "x1,x2,s,t,rho").map_err(io_err)?;
    for i in 0..d.n1 {
        for j in 0..d.n2 {
            let k = i * d.n2 + j;
            let rho = d.rho[k];
            let rho = if rho.is_nan() { "nan".to_string() } else { rho.to_string() };
            writeln!(
                w,
                "{},{},{},{},{}",
                i as f64 * d.h,
                j as f64 * d.h,
                d.chart[k][0],
                d.chart[k][1],
                rho
            )
            .map_err(io_err)?;
        }
    }
    Ok(())
}
