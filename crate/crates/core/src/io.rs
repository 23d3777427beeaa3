//! On-disk formats: monitor time series and reports as CSV, states as binary
//! snapshots.
//!
//! Snapshot layout, all little-endian:
//!
//! ```text
//! magic        8 bytes  "MHDBLSNP"
//! version      u32      1
//! nx, ny       u32, u32
//! y_max        f64
//! t            f64
//! field_count  u32
//! per field:   u16 name length, UTF-8 name
//! per field:   nx * ny f64 values, x outer, y inner
//! ```

use crate::diagnostics::MonitorSample;
use crate::error::{Error, Result};
use crate::fields::{to_physical, State};
use crate::grid::{Cutoff, Grid2D};
use crate::ops::Field;
use crate::outer::OuterFlow;
use ndarray::Array2;
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

pub const SNAPSHOT_MAGIC: &[u8; 8] = b"MHDBLSNP";
pub const SNAPSHOT_VERSION: u32 = 1;

/// Named fields of one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub nx: usize,
    pub ny: usize,
    pub y_max: f64,
    pub t: f64,
    pub fields: Vec<(String, Field)>,
}

impl Snapshot {
    pub fn field(&self, name: &str) -> Option<&Field> {
        self.fields.iter().find(|(n, _)| n == name).map(|(_, f)| f)
    }

    /// `u`, `h` and the physical tangential components `u1`, `h1`.
    pub fn from_state(s: &State, of: &OuterFlow, c: &Cutoff, grid: &Grid2D) -> Self {
        let ps = to_physical(s, of, c, grid);
        Self {
            nx: grid.nx,
            ny: grid.ny,
            y_max: grid.y_max,
            t: s.t,
            fields: vec![
                ("u".into(), s.u.clone()),
                ("h".into(), s.h.clone()),
                ("u1".into(), ps.u1),
                ("h1".into(), ps.h1),
            ],
        }
    }

    /// The evolved perturbation `(u, h)`, if present.
    pub fn state(&self) -> Result<State> {
        let get = |n: &str| {
            self.field(n)
                .cloned()
                .ok_or_else(|| Error::Format(format!("snapshot has no field '{n}'")))
        };
        Ok(State {
            u: get("u")?,
            h: get("h")?,
            t: self.t,
        })
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::with_capacity(40 + self.fields.len() * (16 + 8 * self.nx * self.ny));
        out.extend_from_slice(SNAPSHOT_MAGIC);
        out.extend_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
        out.extend_from_slice(&u32_of(self.nx)?.to_le_bytes());
        out.extend_from_slice(&u32_of(self.ny)?.to_le_bytes());
        out.extend_from_slice(&self.y_max.to_le_bytes());
        out.extend_from_slice(&self.t.to_le_bytes());
        out.extend_from_slice(&u32_of(self.fields.len())?.to_le_bytes());
        for (name, _) in &self.fields {
            let len = u16::try_from(name.len())
                .map_err(|_| Error::Format(format!("field name too long: {name}")))?;
            out.extend_from_slice(&len.to_le_bytes());
            out.extend_from_slice(name.as_bytes());
        }
        for (name, f) in &self.fields {
            if f.dim() != (self.nx, self.ny) {
                return Err(Error::Format(format!(
                    "field '{name}' has shape {:?}, header says ({}, {})",
                    f.dim(),
                    self.nx,
                    self.ny
                )));
            }
            for v in f.iter() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != SNAPSHOT_MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let version = r.u32()?;
        if version != SNAPSHOT_VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let nx = r.u32()? as usize;
        let ny = r.u32()? as usize;
        let y_max = r.f64()?;
        let t = r.f64()?;
        let count = r.u32()? as usize;
        let mut names = Vec::with_capacity(count);
        for _ in 0..count {
            let len = u16::from_le_bytes(r.take(2)?.try_into().expect("2 bytes")) as usize;
            let name = std::str::from_utf8(r.take(len)?)
                .map_err(|e| Error::Format(format!("field name: {e}")))?;
            names.push(name.to_string());
        }
        let mut fields = Vec::with_capacity(count);
        for name in names {
            let raw = r.take(8 * nx * ny)?;
            let data: Vec<f64> = raw
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect();
            let f = Array2::from_shape_vec((nx, ny), data).map_err(|e| Error::Format(e.to_string()))?;
            fields.push((name, f));
        }
        if r.pos != bytes.len() {
            return Err(Error::Format(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        Ok(Self { nx, ny, y_max, t, fields })
    }
}

fn u32_of(n: usize) -> Result<u32> {
    u32::try_from(n).map_err(|_| Error::Format(format!("{n} does not fit in u32")))
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            Error::Format(format!("truncated: wanted {n} bytes at offset {}", self.pos))
        })?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

pub fn write_snapshot(snap: &Snapshot, path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(&snap.to_bytes()?)?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    Snapshot::from_bytes(&bytes)
}

/// One row of the run time series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeseriesRow {
    pub t: f64,
    pub energy: f64,
    pub w1: f64,
    pub w2: f64,
    pub hmin: f64,
    pub m_value: f64,
    pub functional: Option<f64>,
    pub dissipation: Option<f64>,
    pub f_hat: Option<f64>,
}

impl From<&MonitorSample> for TimeseriesRow {
    fn from(s: &MonitorSample) -> Self {
        Self {
            t: s.t,
            energy: s.energy,
            w1: s.w1,
            w2: s.w2,
            hmin: s.hmin,
            m_value: s.m_value,
            functional: s.functional,
            dissipation: s.dissipation,
            f_hat: s.f_hat,
        }
    }
}

impl From<TimeseriesRow> for MonitorSample {
    fn from(r: TimeseriesRow) -> Self {
        Self {
            t: r.t,
            energy: r.energy,
            w1: r.w1,
            w2: r.w2,
            hmin: r.hmin,
            m_value: r.m_value,
            functional: r.functional,
            dissipation: r.dissipation,
            f_hat: r.f_hat,
        }
    }
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        other => Error::Format(format!("csv: {other:?}")),
    }
}

/// Writes rows with a header taken from the field names.
pub fn write_csv<T: Serialize>(rows: &[T], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    for r in rows {
        w.serialize(r).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_error)?;
    r.deserialize().map(|row| row.map_err(csv_error)).collect()
}

pub fn write_timeseries(samples: &[MonitorSample], path: &Path) -> Result<()> {
    let rows: Vec<TimeseriesRow> = samples.iter().map(TimeseriesRow::from).collect();
    write_csv(&rows, path)
}

pub fn read_timeseries(path: &Path) -> Result<Vec<MonitorSample>> {
    Ok(read_csv::<TimeseriesRow>(path)?.into_iter().map(MonitorSample::from).collect())
}
