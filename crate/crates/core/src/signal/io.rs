//! Manifest and signal-file CSV formats.
//!
//! Manifest header: `impact_id,source,csdm,signal_path` (extra trailing
//! columns are ignored). `signal_path` is relative to the manifest directory.
//! Signal header: `t,ax,ay,az,wx,wy,wz`.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::{Axes3, ImpactRecording, SignalError, Source, MIN_INGEST_SAMPLES};

pub const MANIFEST_COLUMNS: [&str; 4] = ["impact_id", "source", "csdm", "signal_path"];
pub const SIGNAL_COLUMNS: [&str; 7] = ["t", "ax", "ay", "az", "wx", "wy", "wz"];

fn open(path: &Path) -> Result<File, SignalError> {
    File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => SignalError::MissingFile(path.to_path_buf()),
        _ => SignalError::Io { path: path.to_path_buf(), source: e },
    })
}

fn column_indices(headers: &csv::StringRecord, wanted: &[&str]) -> Result<Vec<usize>, SignalError> {
    wanted
        .iter()
        .map(|w| {
            headers.iter().position(|h| h.trim() == *w).ok_or_else(|| SignalError::MalformedRow {
                row: 0,
                reason: format!("header lacks column `{w}`"),
            })
        })
        .collect()
}

fn csv_error(e: csv::Error, row: usize) -> SignalError {
    SignalError::MalformedRow { row, reason: e.to_string() }
}

/// Loads every recording named by a manifest, in manifest order.
/// Rows are 1-based in error messages (the header is row 0).
pub fn load_dataset(manifest_path: impl AsRef<Path>) -> Result<Vec<ImpactRecording>, SignalError> {
    let manifest_path = manifest_path.as_ref();
    let base = manifest_path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(open(manifest_path)?);
    let headers = rdr.headers().map_err(|e| csv_error(e, 0))?.clone();
    let idx = column_indices(&headers, &MANIFEST_COLUMNS)?;

    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| csv_error(e, row))?;
        let field = |j: usize| -> Result<&str, SignalError> {
            rec.get(idx[j]).map(str::trim).ok_or_else(|| SignalError::MalformedRow {
                row,
                reason: format!("missing column `{}`", MANIFEST_COLUMNS[j]),
            })
        };
        let impact_id = field(0)?;
        if impact_id.is_empty() {
            return Err(SignalError::MalformedRow { row, reason: "empty impact_id".into() });
        }
        let source: Source =
            field(1)?.parse().map_err(|reason| SignalError::MalformedRow { row, reason })?;
        let csdm_raw = field(2)?;
        let csdm = if csdm_raw.is_empty() {
            None
        } else {
            let v: f64 = csdm_raw.parse().map_err(|_| SignalError::MalformedRow {
                row,
                reason: format!("csdm `{csdm_raw}` is not a number"),
            })?;
            if !(0.0..=1.0).contains(&v) {
                return Err(SignalError::MalformedRow { row, reason: format!("csdm {v} outside [0, 1]") });
            }
            Some(v)
        };
        let rel = field(3)?;
        if rel.is_empty() {
            return Err(SignalError::MalformedRow { row, reason: "empty signal_path".into() });
        }
        let path = base.join(rel);
        let (t, lin_acc, ang_vel) = read_signal_file(&path)?;
        let rec = ImpactRecording { impact_id: impact_id.to_string(), source, t, lin_acc, ang_vel, csdm };
        rec.validate(MIN_INGEST_SAMPLES).map_err(|e| e.in_file(&path))?;
        out.push(rec);
    }
    Ok(out)
}

/// Reads one signal CSV into `(t, linear acceleration, angular velocity)`.
pub fn read_signal_file(path: &Path) -> Result<(Vec<f64>, Axes3, Axes3), SignalError> {
    let inner = || -> Result<(Vec<f64>, Axes3, Axes3), SignalError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(open(path)?);
        let headers = rdr.headers().map_err(|e| csv_error(e, 0))?.clone();
        let idx = column_indices(&headers, &SIGNAL_COLUMNS)?;
        let mut cols: [Vec<f64>; 7] = Default::default();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| csv_error(e, i + 1))?;
            for (c, &j) in idx.iter().enumerate() {
                let s = rec.get(j).ok_or_else(|| SignalError::MalformedRow {
                    row: i + 1,
                    reason: format!("missing column `{}`", SIGNAL_COLUMNS[c]),
                })?;
                let v: f64 = s.parse().map_err(|_| SignalError::MalformedRow {
                    row: i + 1,
                    reason: format!("`{s}` in column `{}` is not a number", SIGNAL_COLUMNS[c]),
                })?;
                if !v.is_finite() {
                    return Err(SignalError::NonFiniteSample { row: i, column: SIGNAL_COLUMNS[c].into() });
                }
                cols[c].push(v);
            }
        }
        let [t, ax, ay, az, wx, wy, wz] = cols;
        Ok((t, Axes3::new(ax, ay, az), Axes3::new(wx, wy, wz)))
    };
    inner().map_err(|e| match e {
        e @ SignalError::MissingFile(_) => e,
        other => other.in_file(path),
    })
}

/// Writes a recording in the signal-file format. Values use the shortest
/// round-trip decimal representation, so reading back is lossless.
pub fn write_signal_file(path: &Path, rec: &ImpactRecording) -> Result<(), SignalError> {
    let io_err = |e: std::io::Error| SignalError::Io { path: PathBuf::from(path), source: e };
    let mut buf = String::with_capacity(rec.len() * 64);
    buf.push_str(&SIGNAL_COLUMNS.join(","));
    buf.push('\n');
    for i in 0..rec.len() {
        let vals = [
            rec.t[i],
            rec.lin_acc.x[i],
            rec.lin_acc.y[i],
            rec.lin_acc.z[i],
            rec.ang_vel.x[i],
            rec.ang_vel.y[i],
            rec.ang_vel.z[i],
        ];
        let line: Vec<String> = vals.iter().map(|v| v.to_string()).collect();
        buf.push_str(&line.join(","));
        buf.push('\n');
    }
    let mut f = File::create(path).map_err(io_err)?;
    f.write_all(buf.as_bytes()).map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn write_signal(dir: &Path, name: &str, n: usize, decrease_at: Option<usize>) {
        let mut s = String::from("t,ax,ay,az,wx,wy,wz\r\n");
        for i in 0..n {
            let mut t = i as f64 / 1000.0;
            if Some(i) == decrease_at {
                t = (i as f64 - 2.0) / 1000.0;
            }
            s.push_str(&format!("{t},{},0,0,0,0,{}\r\n", i as f64, 0.5 * i as f64));
        }
        fs::write(dir.join(name), s).unwrap();
    }

    #[test]
    fn loads_rows_in_order() {
        let dir = tempfile::tempdir().unwrap();
        for k in 0..3 {
            write_signal(dir.path(), &format!("s{k}.csv"), 12, None);
        }
        fs::write(
            dir.path().join("manifest.csv"),
            "impact_id,source,csdm,signal_path\nc,CF,0.25,s2.csv\na,HM,,s0.csv\nb,MMA,1,s1.csv\n",
        )
        .unwrap();
        let recs = load_dataset(dir.path().join("manifest.csv")).unwrap();
        let ids: Vec<_> = recs.iter().map(|r| r.impact_id.as_str()).collect();
        assert_eq!(ids, ["c", "a", "b"]);
        assert_eq!(recs[0].csdm, Some(0.25));
        assert_eq!(recs[1].csdm, None);
        assert_eq!(recs[2].source, Source::Mma);
        assert_eq!(recs[0].ang_vel.z[4], 2.0);
    }

    #[test]
    fn rejects_out_of_range_csdm() {
        let dir = tempfile::tempdir().unwrap();
        write_signal(dir.path(), "s.csv", 12, None);
        fs::write(dir.path().join("m.csv"), "impact_id,source,csdm,signal_path\nx,HM,1.2,s.csv\n").unwrap();
        let err = load_dataset(dir.path().join("m.csv")).unwrap_err();
        assert!(matches!(err, SignalError::MalformedRow { row: 1, .. }), "{err}");
    }

    #[test]
    fn reports_decreasing_time_index() {
        let dir = tempfile::tempdir().unwrap();
        write_signal(dir.path(), "s.csv", 12, Some(5));
        fs::write(dir.path().join("m.csv"), "impact_id,source,csdm,signal_path\nx,HM,0.1,s.csv\n").unwrap();
        let err = load_dataset(dir.path().join("m.csv")).unwrap_err();
        assert!(matches!(err.root(), SignalError::NonMonotonicTime(5)), "{err}");
        assert!(err.to_string().contains("s.csv"));
    }

    #[test]
    fn missing_file_and_columns() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("m.csv"), "impact_id,source,csdm,signal_path\nx,HM,0.1,nope.csv\n").unwrap();
        assert!(matches!(load_dataset(dir.path().join("m.csv")), Err(SignalError::MissingFile(_))));
        fs::write(dir.path().join("m2.csv"), "impact_id,source,signal_path\nx,HM,nope.csv\n").unwrap();
        assert!(matches!(load_dataset(dir.path().join("m2.csv")), Err(SignalError::MalformedRow { row: 0, .. })));
        fs::write(dir.path().join("m3.csv"), "impact_id,source,csdm,signal_path\nx,HM\n").unwrap();
        assert!(matches!(load_dataset(dir.path().join("m3.csv")), Err(SignalError::MalformedRow { row: 1, .. })));
        assert!(matches!(load_dataset(dir.path().join("absent.csv")), Err(SignalError::MissingFile(_))));
    }

    #[test]
    fn non_finite_and_short_signals() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("nan.csv"), "t,ax,ay,az,wx,wy,wz\n0,1,1,1,1,1,1\n0.001,NaN,1,1,1,1,1\n").unwrap();
        let err = read_signal_file(&dir.path().join("nan.csv")).unwrap_err();
        assert!(matches!(err.root(), SignalError::NonFiniteSample { row: 1, .. }));
        write_signal(dir.path(), "short.csv", 5, None);
        fs::write(dir.path().join("m.csv"), "impact_id,source,csdm,signal_path\nx,HM,,short.csv\n").unwrap();
        let err = load_dataset(dir.path().join("m.csv")).unwrap_err();
        assert!(matches!(err.root(), SignalError::TooFewSamples { needed: 8, got: 5 }));
    }

    #[test]
    fn signal_write_read_is_lossless() {
        let dir = tempfile::tempdir().unwrap();
        let n = 16;
        let t: Vec<f64> = (0..n).map(|i| i as f64 / 1000.0).collect();
        let s: Vec<f64> = t.iter().map(|v| (v * 123.456).sin() * 1e3 / 7.0).collect();
        let rec = ImpactRecording::new(
            "q",
            Source::Nascar,
            t,
            Axes3::new(s.clone(), s.clone(), s.clone()),
            Axes3::new(s.clone(), s.clone(), s),
            None,
        )
        .unwrap();
        let p = dir.path().join("q.csv");
        write_signal_file(&p, &rec).unwrap();
        let (t, a, w) = read_signal_file(&p).unwrap();
        assert_eq!(t, rec.t);
        assert_eq!(a, rec.lin_acc);
        assert_eq!(w, rec.ang_vel);
    }
}
