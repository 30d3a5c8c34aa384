//! Binary field snapshots: magic, length-prefixed JSON header, raw samples.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::field::{GridSamples, VectorField};
use super::grid::TorusGrid;
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"PNSSNAP1";
const LAYOUT: &str = "component-major";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotHeader {
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub p: f64,
    pub mu: f64,
    pub t: f64,
    pub layout: String,
}

impl SnapshotHeader {
    pub fn new(grid: &TorusGrid, p: f64, mu: f64, t: f64) -> Self {
        SnapshotHeader {
            d: grid.dim(),
            n: grid.n(),
            p,
            mu,
            t,
            layout: LAYOUT.to_string(),
        }
    }
}

/// Writes the real-space samples of `v`. Fields read from a snapshot keep
/// their original samples, so rewriting them reproduces the file exactly.
pub fn write_snapshot(path: &Path, v: &VectorField, p: f64, mu: f64, t: f64) -> Result<()> {
    let header = SnapshotHeader::new(v.grid(), p, mu, t);
    let json = serde_json::to_vec(&header)?;
    let owned;
    let samples = match v.cached_samples() {
        Some(s) => s,
        None => {
            owned = v.to_grid();
            &owned
        }
    };
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&(json.len() as u32).to_le_bytes())?;
    w.write_all(&json)?;
    for c in samples.comps() {
        for x in c {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<(SnapshotHeader, VectorField)> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)
        .map_err(|_| Error::Format("file too short for magic".into()))?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let mut len = [0u8; 4];
    r.read_exact(&mut len)
        .map_err(|_| Error::Format("truncated header length".into()))?;
    let len = u32::from_le_bytes(len) as usize;
    if len > 1 << 20 {
        return Err(Error::Format(format!("header length {len} is implausible")));
    }
    let mut json = vec![0u8; len];
    r.read_exact(&mut json)
        .map_err(|_| Error::Format("truncated header".into()))?;
    let header: SnapshotHeader = serde_json::from_slice(&json)
        .map_err(|e| Error::Format(format!("header: {e}")))?;
    if header.layout != LAYOUT {
        return Err(Error::Format(format!("unsupported layout {:?}", header.layout)));
    }
    let grid = TorusGrid::new(header.d, header.n)
        .map_err(|e| Error::Format(format!("header grid: {e}")))?;
    let mut comps = Vec::with_capacity(grid.dim());
    let mut buf = [0u8; 8];
    for _ in 0..grid.dim() {
        let mut c = Vec::with_capacity(grid.len());
        for _ in 0..grid.len() {
            r.read_exact(&mut buf)
                .map_err(|_| Error::Format("truncated payload".into()))?;
            c.push(f64::from_le_bytes(buf));
        }
        comps.push(c);
    }
    if r.read(&mut buf)? != 0 {
        return Err(Error::Format("trailing bytes after payload".into()));
    }
    let samples = GridSamples::new(grid, comps)?;
    let v = VectorField::from_samples(&samples)?.with_cached_samples(samples);
    Ok((header, v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::random_solenoidal;

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let grid = TorusGrid::new(2, 16).unwrap();
        let v = random_solenoidal(&grid, 9, 1.0, 0.2, None).unwrap();
        let a = dir.path().join("a.pns");
        let b = dir.path().join("b.pns");
        write_snapshot(&a, &v, 5.0 / 3.0, 1e-3, 0.25).unwrap();
        let (h, w) = read_snapshot(&a).unwrap();
        assert_eq!(h, SnapshotHeader::new(&grid, 5.0 / 3.0, 1e-3, 0.25));
        assert!(w.distance(&v).unwrap() <= 1e-14 * v.l2_norm());
        write_snapshot(&b, &w, h.p, h.mu, h.t).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
        let (_, w2) = read_snapshot(&b).unwrap();
        assert_eq!(w, w2);
    }

    #[test]
    fn rejects_corrupt_files() {
        let dir = tempfile::tempdir().unwrap();
        let grid = TorusGrid::new(2, 8).unwrap();
        let path = dir.path().join("x.pns");
        write_snapshot(&path, &VectorField::zeros(grid), 2.0, 0.0, 0.0).unwrap();
        let bytes = std::fs::read(&path).unwrap();

        let mut bad = bytes.clone();
        bad[0] = b'X';
        std::fs::write(&path, &bad).unwrap();
        assert!(matches!(read_snapshot(&path), Err(Error::Format(_))));

        std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
        assert!(matches!(read_snapshot(&path), Err(Error::Format(_))));

        let mut long = bytes.clone();
        long.push(0);
        std::fs::write(&path, &long).unwrap();
        assert!(matches!(read_snapshot(&path), Err(Error::Format(_))));
    }
}
