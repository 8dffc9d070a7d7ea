//! Binary kernel files and radial CSV profiles.
//!
//! Layout (little endian): `b"SIPK1"`, `dim: u32`, `N: u32`, `L: f64`, `t: f64`, `α: f64`,
//! `kind: u32`, `mass: f64`, `trunc: f64`, then `p`, `dp`, `d2p` as row-major `f64` arrays.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::DensityField;
use crate::error::{LabError, Result};
use crate::grid::GridSpec;
use crate::spectral_models::ModelKind;

const MAGIC: &[u8; 5] = b"SIPK1";

/// Contents of a kernel file.
#[derive(Clone, Debug, PartialEq)]
pub struct StoredKernel {
    pub grid: GridSpec,
    pub t: f64,
    pub alpha: f64,
    pub kind: ModelKind,
    pub mass: f64,
    pub trunc: f64,
    pub p: Vec<f64>,
    pub dp: Vec<f64>,
    pub d2p: Vec<f64>,
}

pub fn write_density(field: &DensityField, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&(field.grid.dim as u32).to_le_bytes())?;
    w.write_all(&(field.grid.points_per_axis as u32).to_le_bytes())?;
    for v in [field.grid.half_extent, field.t, field.model.alpha] {
        w.write_all(&v.to_le_bytes())?;
    }
    w.write_all(&field.model.kind.code().to_le_bytes())?;
    for v in [field.model.mass, field.model.trunc_radius] {
        w.write_all(&v.to_le_bytes())?;
    }
    for arr in [&field.p, &field.dp, &field.d2p] {
        for v in arr.iter() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn take<const K: usize>(r: &mut impl Read) -> Result<[u8; K]> {
    let mut b = [0u8; K];
    r.read_exact(&mut b).map_err(|e| LabError::Format(format!("truncated kernel file: {e}")))?;
    Ok(b)
}

fn take_f64s(r: &mut impl Read, n: usize) -> Result<Vec<f64>> {
    (0..n).map(|_| take::<8>(r).map(f64::from_le_bytes)).collect()
}

pub fn read_density(path: &Path) -> Result<StoredKernel> {
    let mut r = BufReader::new(File::open(path)?);
    if &take::<5>(&mut r)? != MAGIC {
        return Err(LabError::Format("not a SIPK1 kernel file".into()));
    }
    let dim = u32::from_le_bytes(take(&mut r)?) as usize;
    let n = u32::from_le_bytes(take(&mut r)?) as usize;
    let half = f64::from_le_bytes(take(&mut r)?);
    let t = f64::from_le_bytes(take(&mut r)?);
    let alpha = f64::from_le_bytes(take(&mut r)?);
    let code = u32::from_le_bytes(take(&mut r)?);
    let kind = ModelKind::from_code(code).ok_or_else(|| LabError::Format(format!("unknown kind code {code}")))?;
    let mass = f64::from_le_bytes(take(&mut r)?);
    let trunc = f64::from_le_bytes(take(&mut r)?);
    let grid = GridSpec::new(dim, half, n).map_err(|e| LabError::Format(e.to_string()))?;
    let len = grid.len();
    let p = take_f64s(&mut r, len)?;
    let dp = take_f64s(&mut r, len * dim)?;
    let d2p = take_f64s(&mut r, len * dim * dim)?;
    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(LabError::Format(format!("{} trailing bytes", rest.len())));
    }
    Ok(StoredKernel { grid, t, alpha, kind, mass, trunc, p, dp, d2p })
}

/// Profile along the positive first axis: `r, p, ∂_r p, ∂_rr p`.
pub fn write_radial_csv(field: &DensityField, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "r,p,dp_r,d2p_rr")?;
    let g = &field.grid;
    let n = g.points_per_axis;
    let o = g.origin_index();
    let d = g.dim;
    for i in o..n {
        let idx = if d == 1 { i } else { i * n + o };
        writeln!(w, "{},{:e},{:e},{:e}", g.coord(i), field.p[idx], field.dp[idx * d], field.d2p[idx * d * d])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral_models::StableModel;

    #[test]
    fn round_trip() {
        let m = StableModel::isotropic(0.7, 1).unwrap();
        let g = super::super::admissible_grid(&m, 1.0, 4096, super::super::ALIAS_LIMIT).unwrap();
        let f = super::super::density_fft(&m, 1.0, &g).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("k.sipk");
        write_density(&f, &path).unwrap();
        let s = read_density(&path).unwrap();
        assert_eq!(s.p, f.p);
        assert_eq!(s.d2p, f.d2p);
        assert_eq!(s.kind, ModelKind::IsotropicFractional);
        assert_eq!(s.grid, g);
        std::fs::write(&path, b"SIPK2").unwrap();
        assert!(read_density(&path).is_err());
    }
}
