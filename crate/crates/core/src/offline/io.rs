use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use super::{Decomposition, Frame};
use crate::fom::{read_header, read_values, write_header, write_values};
use crate::numerics::{TransformFamily, TransformKind};
use crate::{Error, Real, Result};

const FRAME_MAGIC: &[u8; 4] = b"FRM1";

fn kind_code(kind: TransformKind) -> u8 {
    match kind {
        TransformKind::Identity => 0,
        TransformKind::PeriodicShift => 1,
        TransformKind::VirtualDomainShift => 2,
    }
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(|e| Error::Format(format!("truncated decomposition file: {e}")))?;
    Ok(u32::from_le_bytes(b))
}

fn read_u8<R: Read>(r: &mut R) -> Result<u8> {
    let mut b = [0u8; 1];
    r.read_exact(&mut b).map_err(|e| Error::Format(format!("truncated decomposition file: {e}")))?;
    Ok(b[0])
}

impl<T: Real> Decomposition<T> {
    /// Writes the snapshot-style header of the physical grid, then per frame
    /// the transform kind, rank, sample count, paths, modes, coefficients and
    /// singular values as little-endian doubles.
    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        let times = self.times();
        let tau = if times.len() > 1 { times[1] - times[0] } else { T::zero() };
        write_header(&mut w, self.components(), self.grid(), times.len(), tau, "decomposition", times.first().copied().unwrap_or(T::zero()))?;
        write_values(&mut w, times)?;
        write_values(&mut w, &[self.offline_error()])?;
        w.write_all(&(self.sweep_errors().len() as u32).to_le_bytes())?;
        write_values(&mut w, self.sweep_errors())?;
        w.write_all(&(self.frames().len() as u32).to_le_bytes())?;
        for f in self.frames() {
            let fam = f.transform();
            let ns = fam.storage_grid().n();
            let n = fam.grid().n();
            w.write_all(FRAME_MAGIC)?;
            w.write_all(&[kind_code(fam.kind())])?;
            w.write_all(&(f.rank() as u32).to_le_bytes())?;
            w.write_all(&(f.path().len() as u64).to_le_bytes())?;
            w.write_all(&(fam.offset() as u32).to_le_bytes())?;
            w.write_all(&((ns - n - fam.offset()) as u32).to_le_bytes())?;
            write_values(&mut w, f.path())?;
            write_values(&mut w, f.modes().as_slice())?;
            write_values(&mut w, f.coefficients().as_slice())?;
            w.write_all(&(f.singular_values().len() as u32).to_le_bytes())?;
            write_values(&mut w, f.singular_values())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_binary(path: &Path) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        let header = read_header::<T, _>(&mut r)?;
        if header.tag != "decomposition" {
            return Err(Error::Format(format!("expected a decomposition file, found tag {:?}", header.tag)));
        }
        let m = header.m;
        let times = read_values(&mut r, m)?;
        let offline_error = read_values(&mut r, 1)?[0];
        let sweeps = read_u32(&mut r)? as usize;
        let sweep_errors = read_values(&mut r, sweeps)?;
        let count = read_u32(&mut r)? as usize;
        let grid = header.grid;
        let c = header.components;
        let mut frames = Vec::with_capacity(count);
        for _ in 0..count {
            let mut magic = [0u8; 4];
            r.read_exact(&mut magic).map_err(|e| Error::Format(format!("truncated frame: {e}")))?;
            if &magic != FRAME_MAGIC {
                return Err(Error::Format("corrupt frame record".into()));
            }
            let kind = read_u8(&mut r)?;
            let rank = read_u32(&mut r)? as usize;
            let mut mb = [0u8; 8];
            r.read_exact(&mut mb)?;
            let frame_m = u64::from_le_bytes(mb) as usize;
            if frame_m != m {
                return Err(Error::Format(format!("frame has {frame_m} samples, file header {m}")));
            }
            let left = read_u32(&mut r)? as usize;
            let right = read_u32(&mut r)? as usize;
            let fam = match kind {
                0 => TransformFamily::identity(grid),
                1 => TransformFamily::periodic_shift(grid)?,
                2 => TransformFamily::virtual_with_padding(grid, left, right)?,
                k => return Err(Error::Format(format!("unknown transform code {k}"))),
            };
            let ns = fam.storage_grid().n();
            let p = read_values(&mut r, m)?;
            let modes = DMatrix::from_vec(c * ns, rank, read_values(&mut r, c * ns * rank)?);
            let coefficients = DMatrix::from_vec(rank, m, read_values(&mut r, rank * m)?);
            let sv_len = read_u32(&mut r)? as usize;
            let sv = read_values(&mut r, sv_len)?;
            frames.push(Frame::new(fam, p, modes, coefficients, sv)?);
        }
        Decomposition::from_parts(grid, c, times, frames, offline_error, sweep_errors)
    }

    /// Singular-value decay per frame: `frame,index,singular_value,relative`.
    pub fn write_singular_values_csv(&self, path: &Path, separator: &str) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "{}", ["frame", "index", "singular_value", "relative"].join(separator))?;
        for (f, frame) in self.frames().iter().enumerate() {
            let sv = frame.singular_values();
            let top = sv.first().copied().unwrap_or(T::one());
            for (i, s) in sv.iter().enumerate() {
                let rel = if top > T::zero() { *s / top } else { T::zero() };
                writeln!(w, "{}", [f.to_string(), (i + 1).to_string(), format!("{:e}", s.as_f64()), format!("{:e}", rel.as_f64())].join(separator))?;
            }
        }
        w.flush()?;
        Ok(())
    }
}
