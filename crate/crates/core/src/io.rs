//! Tabular and binary emission of results, and ingestion of input series.
//!
//! Floats are written with Rust's shortest round-trip formatting, so equal
//! results produce byte-identical files.
//!
//! Run-length-encoded basin rasters are laid out little-endian as:
//!
//! ```text
//! magic   8 bytes  "FXBASIN1"
//! nx      u32
//! ny      u32
//! ncodes  u8, then per code: u8 code, u8 name length, name bytes (UTF-8)
//! nruns   u32, then per run: u8 code, u32 length
//! ```
//!
//! Runs traverse the raster row by row (`dy` rows, `e` columns), lowest `dy`
//! first.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::basins::{BasinClass, BasinGrid};
use crate::bifurcation::{RegionGrid, RegionLabel, SweepResult};
use crate::error::{Error, Result};
use crate::estimator::{MacroDataset, MacroRow, TvpEstimate};
use crate::simulate::{Aggregated, Trajectory};

pub const RLE_MAGIC: &[u8; 8] = b"FXBASIN1";

fn fmt(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        String::new()
    }
}

pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["t", "e", "dy", "eps"])?;
    out.write_record(["0".to_string(), fmt(traj.init.e), fmt(traj.init.dy), String::new()])?;
    for k in 0..traj.len() {
        out.write_record([(k + 1).to_string(), fmt(traj.e[k]), fmt(traj.dy[k]), fmt(traj.eps[k])])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_returns_csv<W: Write>(agg: &Aggregated, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["t", "fx_return"])?;
    for (k, r) in agg.fx_returns.iter().enumerate() {
        out.write_record([(k + 1).to_string(), fmt(*r)])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_annual_csv<W: Write>(agg: &Aggregated, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["year", "growth"])?;
    for (k, g) in agg.annual_growth.iter().enumerate() {
        out.write_record([(k + 1).to_string(), fmt(*g)])?;
    }
    out.flush()?;
    Ok(())
}

/// One row per (parameter value, branch, sample). Diverged branches get a
/// single row with an empty sample; inadmissible values a single `invalid` row.
pub fn write_sweep_csv<W: Write>(res: &SweepResult, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([res.axis.name(), "branch", "sample", "e", "status"])?;
    for pt in &res.points {
        let v = fmt(pt.value);
        if pt.invalid.is_some() {
            out.write_record([v.as_str(), "", "", "", "invalid"])?;
            continue;
        }
        for b in &pt.branches {
            let label = b.seed.to_string();
            match &b.samples {
                Some(s) => {
                    for (k, e) in s.iter().enumerate() {
                        out.write_record([v.clone(), label.clone(), k.to_string(), fmt(*e), "ok".into()])?;
                    }
                }
                None => out.write_record([v.as_str(), label.as_str(), "", "", "diverged"])?,
            }
        }
    }
    out.flush()?;
    Ok(())
}

/// Flip and Neimark-Sacker conditions at P2/P3 for each swept value.
pub fn write_sweep_conditions_csv<W: Write>(res: &SweepResult, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([res.axis.name(), "flip", "ns"])?;
    for pt in &res.points {
        let opt = |x: Option<f64>| x.map(fmt).unwrap_or_default();
        out.write_record([fmt(pt.value), opt(pt.flip), opt(pt.ns)])?;
    }
    out.flush()?;
    Ok(())
}

/// Matrix of region codes: a header row of `axis1` values, then one row per
/// `axis2` value led by that value.
pub fn write_region_csv<W: Write>(grid: &RegionGrid, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec![format!("{}\\{}", grid.axis2.name(), grid.axis1.name())];
    header.extend(grid.values1.iter().map(|v| fmt(*v)));
    out.write_record(&header)?;
    for (i2, v2) in grid.values2.iter().enumerate() {
        let mut row = vec![fmt(*v2)];
        row.extend((0..grid.values1.len()).map(|i1| grid.cell(i1, i2).label.code().to_string()));
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LegendEntry {
    pub code: u8,
    pub name: String,
}

pub fn region_legend() -> Vec<LegendEntry> {
    RegionLabel::ALL.iter().map(|l| LegendEntry { code: l.code(), name: l.name().into() }).collect()
}

pub fn basin_legend() -> Vec<LegendEntry> {
    BasinClass::ALL.iter().map(|c| LegendEntry { code: c.code(), name: c.name().into() }).collect()
}

/// `ny` lines of `nx` class codes, lowest `dy` first.
pub fn write_basin_csv<W: Write>(grid: &BasinGrid, w: W) -> Result<()> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    for j in 0..grid.ny {
        out.write_record(grid.row(j).iter().map(|c| c.code().to_string()))?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RleRaster {
    pub nx: usize,
    pub ny: usize,
    pub classes: Vec<BasinClass>,
}

pub fn encode_rle<W: Write>(nx: usize, ny: usize, classes: &[BasinClass], mut w: W) -> Result<()> {
    if classes.len() != nx * ny {
        return Err(Error::LengthMismatch { left: classes.len(), right: nx * ny });
    }
    let dim = |v: usize| u32::try_from(v).map_err(|_| Error::InvalidRequest(format!("dimension {v} too large")));
    w.write_all(RLE_MAGIC)?;
    w.write_all(&dim(nx)?.to_le_bytes())?;
    w.write_all(&dim(ny)?.to_le_bytes())?;
    w.write_all(&[BasinClass::ALL.len() as u8])?;
    for c in BasinClass::ALL {
        w.write_all(&[c.code(), c.name().len() as u8])?;
        w.write_all(c.name().as_bytes())?;
    }
    let mut runs: Vec<(u8, u32)> = Vec::new();
    for c in classes {
        match runs.last_mut() {
            Some((code, len)) if *code == c.code() => *len += 1,
            _ => runs.push((c.code(), 1)),
        }
    }
    w.write_all(&(runs.len() as u32).to_le_bytes())?;
    for (code, len) in runs {
        w.write_all(&[code])?;
        w.write_all(&len.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn decode_rle<R: Read>(mut r: R) -> Result<RleRaster> {
    let bad = |m: &str| Error::Malformed(format!("basin raster: {m}"));
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != RLE_MAGIC {
        return Err(bad("bad magic bytes"));
    }
    let mut u32buf = [0u8; 4];
    let mut read_u32 = |r: &mut R| -> Result<u32> {
        r.read_exact(&mut u32buf)?;
        Ok(u32::from_le_bytes(u32buf))
    };
    let nx = read_u32(&mut r)? as usize;
    let ny = read_u32(&mut r)? as usize;
    let mut byte = [0u8; 1];
    r.read_exact(&mut byte)?;
    let mut table = Vec::new();
    for _ in 0..byte[0] {
        let mut head = [0u8; 2];
        r.read_exact(&mut head)?;
        let mut name = vec![0u8; head[1] as usize];
        r.read_exact(&mut name)?;
        let name = String::from_utf8(name).map_err(|_| bad("code name is not UTF-8"))?;
        let class = BasinClass::ALL.into_iter().find(|c| c.name() == name).ok_or_else(|| bad("unknown class name"))?;
        table.push((head[0], class));
    }
    let nruns = read_u32(&mut r)?;
    let mut classes = Vec::with_capacity(nx * ny);
    for _ in 0..nruns {
        r.read_exact(&mut byte)?;
        let len = read_u32(&mut r)? as usize;
        let class = table.iter().find(|(c, _)| *c == byte[0]).ok_or_else(|| bad("run uses unknown code"))?.1;
        if classes.len() + len > nx * ny {
            return Err(bad("runs overflow the raster"));
        }
        classes.extend(std::iter::repeat_n(class, len));
    }
    if classes.len() != nx * ny {
        return Err(bad("runs do not cover the raster"));
    }
    Ok(RleRaster { nx, ny, classes })
}

pub fn write_qq_csv<W: Write>(pairs: &[(f64, f64)], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["theoretical", "sample"])?;
    for (t, s) in pairs {
        out.write_record([fmt(*t), fmt(*s)])?;
    }
    out.flush()?;
    Ok(())
}

/// `year, pi_t, se, dy_bp_t, flagged`; `dy_bp_t` is empty in the first year.
pub fn write_tvp_csv<W: Write>(est: &TvpEstimate, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["year", "pi_t", "se", "dy_bp_t", "flagged"])?;
    let tm = &est.trade_multiplier;
    for (t, year) in est.years.iter().enumerate() {
        let dy_bp = if t == 0 { String::new() } else { fmt(tm.dy_bp[t - 1]) };
        let flagged = est.pi_t[t] <= 0.0;
        out.write_record([year.to_string(), fmt(est.pi_t[t]), fmt(est.pi_se[t]), dy_bp, (flagged as u8).to_string()])?;
    }
    out.flush()?;
    Ok(())
}

/// Reads `year,y,m,z,rer` rows (header required, extra columns ignored).
pub fn read_macro_csv<R: Read>(r: R) -> Result<MacroDataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let rows = rdr.deserialize::<MacroRow>().collect::<std::result::Result<Vec<_>, _>>()?;
    MacroDataset::new(rows)
}

/// Reads one numeric column by header name.
pub fn read_column_csv<R: Read>(r: R, column: &str) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let idx = rdr
        .headers()?
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| Error::Malformed(format!("no column `{column}` in header")))?;
    let mut out = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let field = rec.get(idx).unwrap_or("");
        if field.is_empty() {
            continue;
        }
        let v: f64 =
            field.parse().map_err(|_| Error::Malformed(format!("row {}: `{field}` is not a number", line + 2)))?;
        out.push(v);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basins::{basin_grid, BasinWindow, OrbitCaps};
    use crate::params::ModelParams;

    #[test]
    fn rle_roundtrip() {
        let p = ModelParams { mu: 4.5, w_f: 0.9, w_c: 0.1, sigma: 0.0, ..Default::default() };
        let g = basin_grid(&p, BasinWindow::around_central(&p, 0.7, 0.5), 30, 21, &OrbitCaps::default()).unwrap();
        let mut buf = Vec::new();
        encode_rle(g.nx, g.ny, &g.classes, &mut buf).unwrap();
        assert_eq!(&buf[..8], RLE_MAGIC);
        let back = decode_rle(buf.as_slice()).unwrap();
        assert_eq!((back.nx, back.ny), (30, 21));
        assert_eq!(back.classes, g.classes);
    }

    #[test]
    fn rle_rejects_garbage() {
        assert!(decode_rle(&b"NOTMAGIC\0\0\0\0"[..]).is_err());
        let mut buf = Vec::new();
        encode_rle(2, 2, &[BasinClass::P2; 4], &mut buf).unwrap();
        buf.truncate(buf.len() - 2);
        assert!(decode_rle(buf.as_slice()).is_err());
    }

    #[test]
    fn macro_csv_parsing() {
        let text = "year,y,m,z,rer\n2000,1.0,2.0,3.0,0.1\n2001, 1.1,2.1,3.2,0.2\n";
        let d = read_macro_csv(text.as_bytes()).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.rows[1].y, 1.1);
        assert!(read_macro_csv("year,y,m\n2000,1,2\n".as_bytes()).is_err());
        assert!(read_macro_csv("year,y,m,z,rer\n2000,1,2,3,x\n".as_bytes()).is_err());
    }

    #[test]
    fn column_csv_parsing() {
        let text = "t,r\n1,0.5\n2,-0.25\n";
        assert_eq!(read_column_csv(text.as_bytes(), "r").unwrap(), vec![0.5, -0.25]);
        assert!(read_column_csv(text.as_bytes(), "q").is_err());
        assert!(read_column_csv("r\nabc\n".as_bytes(), "r").is_err());
    }

    #[test]
    fn float_format_roundtrips() {
        for v in [0.1, 1e-300, -3.5e-5, 123456.789] {
            assert_eq!(fmt(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt(f64::NAN), "");
    }
}
