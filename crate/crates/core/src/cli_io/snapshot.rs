//! Binary field snapshots.
//!
//! Layout, all little-endian: `b"MUSK"`, `u32` schema version, `u32 n`,
//! `f64 L`, `f64 t`, then the `n * n` values row by row (`x1` fastest).
//! A `<file>.txt` sidecar carries a readable summary.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::grid::InterfaceField;
use crate::norms::NormReport;

use super::write_atomic;

pub const MAGIC: &[u8; 4] = b"MUSK";
pub const SCHEMA_VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 4 + 8 + 8;

#[derive(Clone, Debug)]
pub struct Snapshot {
    pub field: InterfaceField,
    pub t: f64,
}

pub fn encode(field: &InterfaceField, t: f64) -> Vec<u8> {
    let n = field.n();
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * n * n);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&SCHEMA_VERSION.to_le_bytes());
    out.extend_from_slice(&(n as u32).to_le_bytes());
    out.extend_from_slice(&field.period().to_le_bytes());
    out.extend_from_slice(&t.to_le_bytes());
    for v in field.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<Snapshot> {
    let bad = |m: String| Error::Snapshot(m);
    if bytes.len() < HEADER_LEN {
        return Err(bad(format!("{} bytes is shorter than the header", bytes.len())));
    }
    if &bytes[..4] != MAGIC {
        return Err(bad("missing MUSK magic".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let version = u32_at(4);
    if version != SCHEMA_VERSION {
        return Err(bad(format!("schema version {version}, expected {SCHEMA_VERSION}")));
    }
    let n = u32_at(8) as usize;
    let period = f64_at(12);
    let t = f64_at(20);
    let expected = HEADER_LEN + 8 * n * n;
    if bytes.len() != expected {
        return Err(bad(format!("{} bytes for n = {n}, expected {expected}", bytes.len())));
    }
    let values = (0..n * n).map(|i| f64_at(HEADER_LEN + 8 * i)).collect();
    Ok(Snapshot {
        field: InterfaceField::new(n, period, values)?,
        t,
    })
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".txt");
    PathBuf::from(s)
}

fn sidecar(field: &InterfaceField, t: f64, config_hash: &str) -> String {
    let r = NormReport::compute(field, t);
    format!(
        "format = MUSK\nschema_version = {SCHEMA_VERSION}\nconfig_hash = {config_hash}\nn = {}\nperiod = {:.16e}\nt = {:.16e}\n\
         mean = {:.16e}\nmax_abs = {:.16e}\nh2 = {:.16e}\nh52 = {:.16e}\nlipschitz = {:.16e}\n",
        field.n(),
        field.period(),
        t,
        field.mean(),
        field.max_abs(),
        r.h2,
        r.h52,
        r.lipschitz
    )
}

/// Writes the snapshot and its sidecar, each atomically.
pub fn write_snapshot(path: &Path, field: &InterfaceField, t: f64, config_hash: &str) -> Result<()> {
    write_atomic(path, &encode(field, t))?;
    write_atomic(&sidecar_path(path), sidecar(field, t, config_hash).as_bytes())
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}
