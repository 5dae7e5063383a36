//! Binary `|ψ|²` dumps.
//!
//! Little-endian: `u64 N_c`, `u64 N_s`, `f64 X_c`, `f64 X_s`, `f64 t`, then
//! `N_c·N_s` `f64` densities in row-major `[c][s]` order.

use std::io::{self, Read, Write};

use super::{MotionalGrid, Snapshot};

pub fn write_snapshot<W: Write>(mut w: W, grid: &MotionalGrid, snap: &Snapshot) -> io::Result<()> {
    w.write_all(&(grid.points[0] as u64).to_le_bytes())?;
    w.write_all(&(grid.points[1] as u64).to_le_bytes())?;
    w.write_all(&grid.extent[0].to_le_bytes())?;
    w.write_all(&grid.extent[1].to_le_bytes())?;
    w.write_all(&snap.time.to_le_bytes())?;
    for v in &snap.density {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_snapshot<R: Read>(mut r: R) -> io::Result<(MotionalGrid, Snapshot)> {
    let mut b8 = [0u8; 8];
    let mut u = || -> io::Result<[u8; 8]> {
        r.read_exact(&mut b8)?;
        Ok(b8)
    };
    let nc = u64::from_le_bytes(u()?) as usize;
    let ns = u64::from_le_bytes(u()?) as usize;
    let xc = f64::from_le_bytes(u()?);
    let xs = f64::from_le_bytes(u()?);
    let time = f64::from_le_bytes(u()?);
    let n = nc
        .checked_mul(ns)
        .filter(|&n| n <= 1 << 28)
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidData, "snapshot grid too large"))?;
    let mut density = Vec::with_capacity(n);
    for _ in 0..n {
        density.push(f64::from_le_bytes(u()?));
    }
    Ok((
        MotionalGrid {
            points: [nc, ns],
            extent: [xc, xs],
        },
        Snapshot { time, density },
    ))
}
