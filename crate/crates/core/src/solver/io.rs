//! Trajectory export.
//!
//! Binary layout (little-endian):
//!
//! ```text
//! magic   8 bytes  b"DNLSTRJ1"
//! nx      u64
//! levels  u64      number of stored time levels
//! length  f64      L
//! dt      f64      spacing of the stored levels
//! k       f64
//! lambda  f64
//! data    levels × nx × (re f64, im f64), row-major in time
//! ```

use std::io::{Read, Write};
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{LabError, Result};
use crate::solver::{SchemeInfo, Trajectory};
use crate::spectral::{Grid, GridSpec, SpacetimeField};

pub const MAGIC: &[u8; 8] = b"DNLSTRJ1";

/// Long-format CSV with header `t,x,re,im`.
pub fn write_csv<W: Write>(data: &SpacetimeField, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "x", "re", "im"])?;
    let x = data.grid().x();
    for (level, slice) in data.slices().enumerate() {
        let t = data.times()[level];
        for (z, &xj) in slice.iter().zip(x) {
            w.write_record([
                format!("{t:e}"),
                format!("{xj:e}"),
                format!("{:e}", z.re),
                format!("{:e}", z.im),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_binary<W: Write>(traj: &Trajectory, mut out: W) -> Result<()> {
    let data = &traj.data;
    let dt = match data.levels() {
        1 => 0.0,
        _ => data.uniform_step().ok_or_else(|| {
            LabError::InvalidParameter("binary export needs uniformly spaced levels".into())
        })?,
    };
    out.write_all(MAGIC)?;
    out.write_all(&(data.grid().nx() as u64).to_le_bytes())?;
    out.write_all(&(data.levels() as u64).to_le_bytes())?;
    for v in [data.grid().length(), dt, traj.k, traj.lambda] {
        out.write_all(&v.to_le_bytes())?;
    }
    for z in data.values() {
        out.write_all(&z.re.to_le_bytes())?;
        out.write_all(&z.im.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

/// Reads a dump written by [`write_binary`]; the grid's `horizon` is the last
/// stored time and `dt` the level spacing.
pub fn read_binary<R: Read>(mut input: R) -> Result<Trajectory> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(LabError::Parse("not a trajectory dump (bad magic)".into()));
    }
    let nx = read_u64(&mut input)? as usize;
    let levels = read_u64(&mut input)? as usize;
    let length = read_f64(&mut input)?;
    let dt = read_f64(&mut input)?;
    let k = read_f64(&mut input)?;
    let lambda = read_f64(&mut input)?;
    if levels == 0 {
        return Err(LabError::Parse("dump has no time levels".into()));
    }
    let horizon = if levels > 1 { dt * (levels - 1) as f64 } else { 1.0 };
    let step = if levels > 1 { dt } else { 1.0 };
    let grid = Grid::new(GridSpec::new(nx, length, step, horizon)?)?;
    let mut values = Vec::with_capacity(nx * levels);
    for _ in 0..nx * levels {
        let re = read_f64(&mut input)?;
        let im = read_f64(&mut input)?;
        values.push(Complex64::new(re, im));
    }
    let times = (0..levels).map(|n| n as f64 * dt).collect();
    let data = SpacetimeField::new(Arc::clone(&grid), times, values)?;
    Ok(Trajectory {
        data,
        lambda,
        k,
        scheme: SchemeInfo {
            dt,
            dealias_fraction: grid.spec().dealias_fraction,
            steps: levels.saturating_sub(1),
            store_every: 1,
        },
    })
}
