//! CSV and JSON sidecar serialization.
//!
//! Floats are written with 17 significant digits so every value round-trips.
//! Sites and times in CSV files are 1-based.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::record::MeasurementRecord;

/// Lossless decimal representation of a float.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Sidecar path for a data file: `out.csv` becomes `out.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let mut s = String::new();
    File::open(path)?.read_to_string(&mut s)?;
    Ok(serde_json::from_str(&s)?)
}

/// Metadata written next to a measurement-record CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordMetadata {
    #[serde(rename = "L")]
    pub sites: usize,
    #[serde(rename = "T")]
    pub steps: usize,
    pub omega: f64,
    pub gamma: f64,
    pub seed: u64,
}

/// Writes `site,time,outcome` rows for one record.
pub fn write_record_csv<W: Write>(writer: W, record: &MeasurementRecord) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["site", "time", "outcome"])?;
    for t in 0..record.steps() {
        for i in 0..record.sites() {
            w.write_record(&[
                (i + 1).to_string(),
                (t + 1).to_string(),
                record.get(i, t).to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a `site,time,outcome` CSV back into a record of the given shape.
pub fn read_record_csv<R: Read>(reader: R, meta: &RecordMetadata) -> Result<MeasurementRecord> {
    let mut record = MeasurementRecord::zeros(meta.sites, meta.steps, meta.seed);
    let mut seen = 0usize;
    let mut r = csv::Reader::from_reader(reader);
    for row in r.records() {
        let row = row?;
        let field = |k: usize| -> Result<usize> {
            row.get(k)
                .and_then(|v| v.trim().parse().ok())
                .ok_or_else(|| invalid("csv", format!("bad field {k} in row {row:?}")))
        };
        let (site, time, outcome) = (field(0)?, field(1)?, field(2)?);
        if site == 0 || site > meta.sites || time == 0 || time > meta.steps || outcome > 1 {
            return Err(invalid("csv", format!("row out of range: {row:?}")));
        }
        record.set(site - 1, time - 1, outcome as u8);
        seen += 1;
    }
    if seen != meta.sites * meta.steps {
        return Err(invalid(
            "csv",
            format!("expected {} rows, found {seen}", meta.sites * meta.steps),
        ));
    }
    Ok(record)
}

/// Writes a record CSV and its JSON sidecar.
pub fn save_record(path: &Path, record: &MeasurementRecord, omega: f64, gamma: f64) -> Result<()> {
    write_record_csv(BufWriter::new(File::create(path)?), record)?;
    let meta = RecordMetadata {
        sites: record.sites(),
        steps: record.steps(),
        omega,
        gamma,
        seed: record.seed(),
    };
    write_json(&sidecar_path(path), &meta)
}

pub fn load_record(path: &Path) -> Result<(MeasurementRecord, RecordMetadata)> {
    let meta: RecordMetadata = read_json(&sidecar_path(path))?;
    let record = read_record_csv(File::open(path)?, &meta)?;
    Ok((record, meta))
}

/// Writes `site,time,outcome,trajectory_id` rows for a batch.
pub fn write_batch_csv<'a, W, I>(writer: W, records: I) -> Result<()>
where
    W: Write,
    I: IntoIterator<Item = (u64, &'a MeasurementRecord)>,
{
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["site", "time", "outcome", "trajectory_id"])?;
    for (id, record) in records {
        let id = id.to_string();
        for t in 0..record.steps() {
            for i in 0..record.sites() {
                w.write_record(&[
                    (i + 1).to_string(),
                    (t + 1).to_string(),
                    record.get(i, t).to_string(),
                    id.clone(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes `site,time,expectation` rows. `values[t][i]` is `⟨n_{i+1}(t+1)⟩`.
pub fn write_occupation_csv<W: Write>(writer: W, values: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["site", "time", "expectation"])?;
    for (t, row) in values.iter().enumerate() {
        for (i, &v) in row.iter().enumerate() {
            w.write_record(&[(i + 1).to_string(), (t + 1).to_string(), fmt_f64(v)])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, std::f64::consts::PI, 1e-300, -2.5e17] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn record_round_trip() {
        let rec = MeasurementRecord::from_outcomes(3, 2, vec![1, 0, 0, 1, 1, 0], 42).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rec.csv");
        save_record(&path, &rec, 0.1, 0.3).unwrap();
        let (back, meta) = load_record(&path).unwrap();
        assert_eq!(back, rec);
        assert_eq!(meta.seed, 42);
        assert_eq!(meta.gamma, 0.3);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("site,time,outcome\n1,1,1\n"));
    }
}
