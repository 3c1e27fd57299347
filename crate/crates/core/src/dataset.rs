//! Feature tables: extraction over a set of recordings, CSV export and a
//! binary cache keyed by dataset content.
//!
//! Cache file layout (little-endian):
//!
//! ```text
//! magic     8 bytes  "IMPSUBF1"
//! key      64 bytes  ASCII hex cache key
//! rows, cols         u64, u64
//! per row:  id (u32 length + UTF-8), source (u32 length + UTF-8),
//!           csdm f64 (NaN when absent), cols × f64
//! ```

use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::features::{FeatureError, FeatureExtractor, FeatureSchema};
use crate::matrix::Matrix;
use crate::par::{self, Execution};
use crate::signal::{derive_kinematics_with, resample, ImpactRecording, KinematicsOptions, SignalError, Source};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("impact `{id}`: {source}")]
    Signal { id: String, source: SignalError },
    #[error("impact `{id}`: {source}")]
    Feature { id: String, source: FeatureError },
    #[error("impact `{0}` has no csdm label")]
    Unlabeled(String),
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("cache file is corrupt: {0}")]
    CorruptCache(String),
    #[error("{0}")]
    Io(#[from] io::Error),
    #[error("{0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractionOptions {
    pub sample_rate: f64,
    pub kinematics: KinematicsOptions,
}

impl Default for ExtractionOptions {
    fn default() -> Self {
        ExtractionOptions { sample_rate: crate::signal::DEFAULT_SAMPLE_RATE, kinematics: KinematicsOptions::default() }
    }
}

/// Rows of feature vectors with their labels.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub ids: Vec<String>,
    pub sources: Vec<Source>,
    pub csdm: Vec<Option<f64>>,
    pub x: Matrix,
}

impl FeatureTable {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn subset(&self, idx: &[usize]) -> FeatureTable {
        FeatureTable {
            ids: idx.iter().map(|&i| self.ids[i].clone()).collect(),
            sources: idx.iter().map(|&i| self.sources[i].clone()).collect(),
            csdm: idx.iter().map(|&i| self.csdm[i]).collect(),
            x: self.x.select_rows(idx),
        }
    }

    /// All targets, or the first unlabeled impact.
    pub fn targets(&self) -> Result<Vec<f64>, DatasetError> {
        self.csdm
            .iter()
            .zip(&self.ids)
            .map(|(c, id)| c.ok_or_else(|| DatasetError::Unlabeled(id.clone())))
            .collect()
    }

    /// Distinct sources in order of first appearance.
    pub fn distinct_sources(&self) -> Vec<Source> {
        let mut out: Vec<Source> = Vec::new();
        for s in &self.sources {
            if !out.contains(s) {
                out.push(s.clone());
            }
        }
        out
    }

    pub fn write_csv(&self, path: &Path, schema: &FeatureSchema) -> Result<(), DatasetError> {
        if self.x.cols() != schema.len() {
            return Err(DatasetError::SchemaMismatch(format!("table has {} columns, schema {}", self.x.cols(), schema.len())));
        }
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["impact_id".to_string(), "source".to_string(), "csdm".to_string()];
        header.extend(schema.names().map(str::to_string));
        w.write_record(&header)?;
        for i in 0..self.len() {
            let mut rec = vec![self.ids[i].clone(), self.sources[i].to_string(), self.csdm[i].map(|c| c.to_string()).unwrap_or_default()];
            rec.extend(self.x.row(i).iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<FeatureTable, DatasetError> {
        let mut r = csv::Reader::from_path(path)?;
        let cols = r.headers()?.len().saturating_sub(3);
        let (mut ids, mut sources, mut csdm, mut data) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for rec in r.records() {
            let rec = rec?;
            let bad = |what: &str| DatasetError::CorruptCache(format!("feature CSV: bad {what}"));
            ids.push(rec[0].to_string());
            sources.push(rec[1].parse().map_err(|_| bad("source"))?);
            csdm.push(if rec[2].is_empty() { None } else { Some(rec[2].parse().map_err(|_| bad("csdm"))?) });
            for v in rec.iter().skip(3) {
                data.push(v.parse::<f64>().map_err(|_| bad("value"))?);
            }
        }
        let rows = ids.len();
        Ok(FeatureTable { ids, sources, csdm, x: Matrix::from_vec(rows, cols, data) })
    }

    pub fn write_cache(&self, path: &Path, key: &str) -> Result<(), DatasetError> {
        let mut buf = Vec::with_capacity(80 + self.x.as_slice().len() * 8);
        buf.extend_from_slice(b"IMPSUBF1");
        buf.extend_from_slice(format!("{key:0>64}").as_bytes());
        buf.extend_from_slice(&(self.x.rows() as u64).to_le_bytes());
        buf.extend_from_slice(&(self.x.cols() as u64).to_le_bytes());
        let put_str = |buf: &mut Vec<u8>, s: &str| {
            buf.extend_from_slice(&(s.len() as u32).to_le_bytes());
            buf.extend_from_slice(s.as_bytes());
        };
        for i in 0..self.len() {
            put_str(&mut buf, &self.ids[i]);
            put_str(&mut buf, self.sources[i].as_str());
            buf.extend_from_slice(&self.csdm[i].unwrap_or(f64::NAN).to_le_bytes());
            for v in self.x.row(i) {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        let tmp = path.with_extension("tmp");
        fs::File::create(&tmp)?.write_all(&buf)?;
        fs::rename(tmp, path)?;
        Ok(())
    }

    /// Reads a cache file; `Ok(None)` when it is absent or its key differs
    /// from `key`.
    pub fn read_cache(path: &Path, key: &str) -> Result<Option<FeatureTable>, DatasetError> {
        let mut bytes = Vec::new();
        match fs::File::open(path) {
            Ok(mut f) => f.read_to_end(&mut bytes)?,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        let mut cur = Cursor { bytes: &bytes, pos: 0 };
        if cur.take(8)? != b"IMPSUBF1" {
            return Err(DatasetError::CorruptCache("bad magic".into()));
        }
        if cur.take(64)? != format!("{key:0>64}").as_bytes() {
            return Ok(None);
        }
        let rows = cur.u64()? as usize;
        let cols = cur.u64()? as usize;
        let (mut ids, mut sources, mut csdm) = (Vec::with_capacity(rows), Vec::with_capacity(rows), Vec::with_capacity(rows));
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            ids.push(cur.string()?);
            sources.push(cur.string()?.parse().map_err(|_| DatasetError::CorruptCache("bad source".into()))?);
            let c = cur.f64()?;
            csdm.push(if c.is_nan() { None } else { Some(c) });
            for _ in 0..cols {
                data.push(cur.f64()?);
            }
        }
        if cur.pos != bytes.len() {
            return Err(DatasetError::CorruptCache("trailing bytes".into()));
        }
        Ok(Some(FeatureTable { ids, sources, csdm, x: Matrix::from_vec(rows, cols, data) }))
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], DatasetError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| DatasetError::CorruptCache("truncated".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64, DatasetError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, DatasetError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String, DatasetError> {
        let n = u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| DatasetError::CorruptCache("invalid UTF-8".into()))
    }
}

/// Hex SHA-256 over ids, sources, labels and every sample bit pattern.
pub fn dataset_hash(recs: &[ImpactRecording]) -> String {
    let mut h = Sha256::new();
    for r in recs {
        h.update(r.impact_id.as_bytes());
        h.update([0]);
        h.update(r.source.as_str().as_bytes());
        h.update([0]);
        h.update(r.csdm.unwrap_or(f64::NAN).to_bits().to_le_bytes());
        h.update((r.t.len() as u64).to_le_bytes());
        for s in [&r.t, &r.lin_acc.x, &r.lin_acc.y, &r.lin_acc.z, &r.ang_vel.x, &r.ang_vel.y, &r.ang_vel.z] {
            for v in s.iter() {
                h.update(v.to_bits().to_le_bytes());
            }
        }
    }
    hex::encode(h.finalize())
}

/// Cache key: dataset content plus everything that changes extracted values.
pub fn cache_key(dataset_hash: &str, opts: &ExtractionOptions, schema: &FeatureSchema) -> String {
    let mut h = Sha256::new();
    h.update(dataset_hash.as_bytes());
    h.update(opts.sample_rate.to_bits().to_le_bytes());
    h.update(opts.kinematics.lowpass_hz.unwrap_or(f64::NAN).to_bits().to_le_bytes());
    h.update(schema.fingerprint().as_bytes());
    hex::encode(h.finalize())
}

/// Resample, derive kinematics and extract features for every recording,
/// preserving order.
pub fn extract_table(
    recs: &[ImpactRecording],
    extractor: &FeatureExtractor,
    opts: &ExtractionOptions,
    exec: Execution,
) -> Result<FeatureTable, DatasetError> {
    let rows = par::try_map(exec, recs, |r| {
        let sig = |source| DatasetError::Signal { id: r.impact_id.clone(), source };
        let uniform = resample(r, opts.sample_rate).map_err(sig)?;
        let kin = derive_kinematics_with(&uniform, &opts.kinematics).map_err(sig)?;
        extractor
            .extract(&r.impact_id, &kin)
            .map(|v| v.values)
            .map_err(|source| DatasetError::Feature { id: r.impact_id.clone(), source })
    })?;
    let cols = extractor.schema().len();
    let data: Vec<f64> = rows.into_iter().flatten().collect();
    Ok(FeatureTable {
        ids: recs.iter().map(|r| r.impact_id.clone()).collect(),
        sources: recs.iter().map(|r| r.source.clone()).collect(),
        csdm: recs.iter().map(|r| r.csdm).collect(),
        x: Matrix::from_vec(recs.len(), cols, data),
    })
}
