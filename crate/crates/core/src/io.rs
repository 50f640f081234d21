//! File formats: raw space-time fields with a JSON sidecar, `|δ|` heatmaps,
//! coefficient tables and verdicts.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::alber::StabilityVerdict;
use crate::error::param;
use crate::spectrum::DiscreteSpectrum;
use crate::{Complex64, Error, Result};

pub const RAW_FORMAT: &str = "complex-f64-le, time-major";

/// Metadata written next to a raw field file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSidecar {
    pub format: String,
    pub nx: usize,
    pub dt: f64,
    pub dx: f64,
    pub domain_length: f64,
    pub times: Vec<f64>,
}

impl FieldSidecar {
    pub fn new(nx: usize, dt: f64, dx: f64, domain_length: f64, times: Vec<f64>) -> Self {
        Self {
            format: RAW_FORMAT.to_string(),
            nx,
            dt,
            dx,
            domain_length,
            times,
        }
    }

    pub fn expected_bytes(&self) -> Option<usize> {
        self.nx.checked_mul(self.times.len())?.checked_mul(16)
    }
}

/// Encodes snapshots as `(re, im)` little-endian f64 pairs, one snapshot after
/// another.
pub fn encode_field(snapshots: &[Vec<Complex64>]) -> Vec<u8> {
    let mut out = Vec::with_capacity(snapshots.iter().map(|s| 16 * s.len()).sum());
    for z in snapshots.iter().flatten() {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
    out
}

/// Inverse of [`encode_field`], checked against the sidecar.
pub fn decode_field(raw: &[u8], sidecar: &FieldSidecar) -> Result<Vec<Vec<Complex64>>> {
    if sidecar.format != RAW_FORMAT {
        return Err(Error::Parse(format!("unsupported field format {:?}", sidecar.format)));
    }
    if sidecar.nx == 0 {
        return Err(Error::Parse("sidecar declares zero grid points".into()));
    }
    let want = sidecar
        .expected_bytes()
        .ok_or_else(|| Error::Parse("sidecar dimensions overflow".into()))?;
    if raw.len() != want {
        return Err(Error::Parse(format!("raw field has {} bytes, sidecar implies {want}", raw.len())));
    }
    if sidecar.times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Parse("sidecar times are not strictly increasing".into()));
    }
    let f = |b: &[u8]| f64::from_le_bytes(b.try_into().expect("8-byte chunk"));
    Ok(raw
        .chunks_exact(16 * sidecar.nx)
        .map(|row| row.chunks_exact(16).map(|c| Complex64::new(f(&c[..8]), f(&c[8..]))).collect())
        .collect())
}

/// Parses a sidecar document and decodes the matching raw bytes.
pub fn decode_field_with_sidecar(raw: &[u8], sidecar_json: &str) -> Result<(FieldSidecar, Vec<Vec<Complex64>>)> {
    let sidecar: FieldSidecar = serde_json::from_str(sidecar_json)?;
    let snaps = decode_field(raw, &sidecar)?;
    Ok((sidecar, snaps))
}

/// Writes `<stem>.bin` and `<stem>.json` into `dir`; returns both paths.
pub fn export_field(dir: &Path, stem: &str, snapshots: &[Vec<Complex64>], sidecar: &FieldSidecar) -> Result<(PathBuf, PathBuf)> {
    if snapshots.len() != sidecar.times.len() || snapshots.iter().any(|s| s.len() != sidecar.nx) {
        return param("snapshots do not match the sidecar");
    }
    fs::create_dir_all(dir)?;
    let bin = dir.join(format!("{stem}.bin"));
    let json = dir.join(format!("{stem}.json"));
    fs::write(&bin, encode_field(snapshots))?;
    fs::write(&json, serde_json::to_string_pretty(sidecar)?)?;
    Ok((bin, json))
}

pub fn import_field(bin: &Path, json: &Path) -> Result<(FieldSidecar, Vec<Vec<Complex64>>)> {
    let raw = fs::read(bin)?;
    let text = fs::read_to_string(json)?;
    decode_field_with_sidecar(&raw, &text)
}

/// `|δ|` as a matrix: the header row holds the grid positions, each following
/// row a time followed by the moduli at every `stride`-th grid point.
pub fn write_heatmap_csv<W: Write>(delta: &[Vec<Complex64>], times: &[f64], xs: &[f64], stride: usize, w: W) -> Result<()> {
    if delta.len() != times.len() || delta.iter().any(|row| row.len() != xs.len()) {
        return param("heatmap dimensions do not match");
    }
    let stride = stride.max(1);
    let mut wr = csv::Writer::from_writer(w);
    let mut header = vec!["t".to_string()];
    header.extend(xs.iter().step_by(stride).map(|x| format!("{x:e}")));
    wr.write_record(&header)?;
    for (t, row) in times.iter().zip(delta) {
        let mut rec = vec![format!("{t:e}")];
        rec.extend(row.iter().step_by(stride).map(|z| format!("{:e}", z.norm())));
        wr.write_record(&rec)?;
    }
    wr.flush()?;
    Ok(())
}

/// `n,k,P_n` for every nonzero coefficient.
pub fn write_coefficients_csv<W: Write>(d: &DiscreteSpectrum, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["n", "k", "P_n"])?;
    let l = d.domain_length();
    for n in d.support() {
        wr.write_record([n.to_string(), format!("{:e}", n as f64 / l), format!("{:e}", d.coefficient(n))])?;
    }
    wr.flush()?;
    Ok(())
}

pub fn write_verdict_json(v: &StabilityVerdict, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, v.to_json()?)?;
    Ok(())
}
