//! Flat binary snapshot files.
//!
//! Layout, little endian: the 8-byte magic, `u32` dimension, three `u64`
//! extents, three `f64` lower corners, three `f64` spacings, `f64` time, then
//! the values in storage order.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::field::Field;

use super::domain::TruncatedDomain;

pub const MAGIC: &[u8; 8] = b"IGNSNAP1";
const HEADER_LEN: usize = 8 + 4 + 3 * 8 + 3 * 8 + 3 * 8 + 8;

#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotFile {
    pub dim: u32,
    pub lo: [f64; 3],
    pub h: [f64; 3],
    pub t: f64,
    pub field: Field,
}

impl SnapshotFile {
    pub fn new(domain: &TruncatedDomain, t: f64, field: Field) -> Self {
        SnapshotFile { dim: domain.dim as u32, lo: domain.lo, h: domain.h, t, field }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut b = Vec::with_capacity(HEADER_LEN + 8 * self.field.len());
        b.extend_from_slice(MAGIC);
        b.extend_from_slice(&self.dim.to_le_bytes());
        for s in self.field.shape {
            b.extend_from_slice(&(s as u64).to_le_bytes());
        }
        for x in self.lo.iter().chain(&self.h).chain(std::iter::once(&self.t)) {
            b.extend_from_slice(&x.to_le_bytes());
        }
        for x in &self.field.data {
            b.extend_from_slice(&x.to_le_bytes());
        }
        b
    }

    pub fn from_bytes(b: &[u8]) -> Result<Self> {
        if b.len() < HEADER_LEN || &b[..8] != MAGIC {
            return Err(Error::Snapshot("not a snapshot file".into()));
        }
        let f64_at = |o: usize| f64::from_le_bytes(b[o..o + 8].try_into().unwrap());
        let u64_at = |o: usize| u64::from_le_bytes(b[o..o + 8].try_into().unwrap());
        let dim = u32::from_le_bytes(b[8..12].try_into().unwrap());
        let mut shape = [0usize; 3];
        let (mut lo, mut h) = ([0.0; 3], [0.0; 3]);
        for a in 0..3 {
            shape[a] = u64_at(12 + 8 * a) as usize;
            lo[a] = f64_at(36 + 8 * a);
            h[a] = f64_at(60 + 8 * a);
        }
        let t = f64_at(84);
        let n: usize = shape.iter().product();
        if b.len() != HEADER_LEN + 8 * n {
            return Err(Error::Snapshot(format!("expected {} values, found {} bytes", n, b.len() - HEADER_LEN)));
        }
        let data = (0..n).map(|i| f64_at(HEADER_LEN + 8 * i)).collect();
        Ok(SnapshotFile { dim, lo, h, t, field: Field { shape, data } })
    }

    pub fn hash(&self) -> String {
        hex(&Sha256::digest(self.to_bytes()))
    }

    pub fn write(&self, path: &Path) -> Result<String> {
        let bytes = self.to_bytes();
        let mut f = fs::File::create(path)?;
        f.write_all(&bytes)?;
        Ok(hex(&Sha256::digest(&bytes)))
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Manifest entry of one written snapshot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotEntry {
    pub t: f64,
    pub file: String,
    pub sha256: String,
    pub kind: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SnapshotManifest {
    pub entries: Vec<SnapshotEntry>,
}

impl SnapshotManifest {
    /// Writes `u` and the companion `v` of each snapshot into `dir`.
    pub fn write_all(dir: &Path, domain: &TruncatedDomain, snaps: &[super::evolve::Snapshot]) -> Result<Self> {
        fs::create_dir_all(dir)?;
        let mut entries = Vec::new();
        for (k, s) in snaps.iter().enumerate() {
            let u = SnapshotFile::new(domain, s.t, s.u.clone());
            let name = format!("u_{k:04}.bin");
            entries.push(SnapshotEntry { t: s.t, sha256: u.write(&dir.join(&name))?, file: name, kind: "u".into() });
            let mut vd = domain.clone();
            vd.lo = [0.0; 3];
            let v = SnapshotFile::new(&vd, s.t, s.v.clone());
            let name = format!("v_{k:04}.bin");
            entries.push(SnapshotEntry { t: s.t, sha256: v.write(&dir.join(&name))?, file: name, kind: "v".into() });
        }
        let m = SnapshotManifest { entries };
        let json = serde_json::to_string_pretty(&m).map_err(|e| Error::Snapshot(e.to_string()))?;
        fs::write(dir.join("snapshots.json"), json)?;
        Ok(m)
    }
}
