//! CSV and JSON formats shared by the library and the command-line tool.
//!
//! Floats are written in Rust's shortest round-trip form, so every value reads
//! back bit-for-bit.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{DolError, Result};
use crate::inference::{FailureRecord, PosteriorSamples};
use crate::shape::DegradationParams;

pub const DATASET_HEADER: [&str; 3] = ["profile_id", "time_hours", "censored"];
pub const POSTERIOR_HEADER: [&str; 7] = ["a", "b", "c", "u", "v", "xi", "log_post"];
pub const CURVE_HEADER: [&str; 2] = ["time_hours", "value"];

fn check_header(found: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    if found.iter().map(str::trim).eq(expected.iter().copied()) {
        Ok(())
    } else {
        Err(DolError::Parse {
            row: 1,
            msg: format!(
                "expected header '{}', found '{}'",
                expected.join(","),
                found.iter().collect::<Vec<_>>().join(",")
            ),
        })
    }
}

fn parse_f64(field: &str, row: usize, name: &str) -> Result<f64> {
    field.trim().parse::<f64>().map_err(|_| DolError::Parse {
        row,
        msg: format!("column '{name}': '{field}' is not a number"),
    })
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(r)
}

/// Rows are numbered by file line, the header being row 1.
pub fn read_dataset_csv<R: Read>(r: R) -> Result<Vec<FailureRecord>> {
    let mut rdr = reader(r);
    check_header(rdr.headers()?, &DATASET_HEADER)?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| DolError::Parse {
            row,
            msg: e.to_string(),
        })?;
        if rec.len() != 3 {
            return Err(DolError::Parse {
                row,
                msg: format!("expected 3 fields, found {}", rec.len()),
            });
        }
        let profile_id = rec[0].trim().to_string();
        if profile_id.is_empty() {
            return Err(DolError::Parse {
                row,
                msg: "empty profile_id".into(),
            });
        }
        let time = parse_f64(&rec[1], row, "time_hours")?;
        if !(time > 0.0) || !time.is_finite() {
            return Err(DolError::Parse {
                row,
                msg: format!("time_hours must be > 0, got {time}"),
            });
        }
        let censored = match rec[2].trim() {
            "0" => false,
            "1" => true,
            other => {
                return Err(DolError::Parse {
                    row,
                    msg: format!("censored must be 0 or 1, got '{other}'"),
                })
            }
        };
        out.push(FailureRecord {
            profile_id,
            time,
            censored,
        });
    }
    Ok(out)
}

pub fn write_dataset_csv<W: Write>(w: W, records: &[FailureRecord]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(DATASET_HEADER)?;
    for r in records {
        wtr.write_record([
            r.profile_id.clone(),
            r.time.to_string(),
            (r.censored as u8).to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_posterior_csv<W: Write>(w: W, samples: &PosteriorSamples) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(POSTERIOR_HEADER)?;
    for (d, lp) in samples.draws.iter().zip(&samples.log_post) {
        let mut row: Vec<String> = d.to_array().iter().map(f64::to_string).collect();
        row.push(lp.to_string());
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Draws and their log posterior values.
pub fn read_posterior_csv<R: Read>(r: R) -> Result<Vec<(DegradationParams, f64)>> {
    let mut rdr = reader(r);
    check_header(rdr.headers()?, &POSTERIOR_HEADER)?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| DolError::Parse {
            row,
            msg: e.to_string(),
        })?;
        if rec.len() != 7 {
            return Err(DolError::Parse {
                row,
                msg: format!("expected 7 fields, found {}", rec.len()),
            });
        }
        let mut v = [0.0; 7];
        for (j, name) in POSTERIOR_HEADER.iter().enumerate() {
            v[j] = parse_f64(&rec[j], row, name)?;
        }
        let theta = DegradationParams::from_array([v[0], v[1], v[2], v[3], v[4], v[5]]);
        if !theta.in_support() {
            return Err(DolError::Parse {
                row,
                msg: "parameters must be finite and > 0".into(),
            });
        }
        out.push((theta, v[6]));
    }
    Ok(out)
}

/// Two-column `time_hours,value` curve.
pub fn write_curve_csv<W: Write>(w: W, times: &[f64], values: &[f64]) -> Result<()> {
    write_table_csv(w, &CURVE_HEADER, &[times, values])
}

/// Column-major numeric table.
pub fn write_table_csv<W: Write>(w: W, header: &[&str], columns: &[&[f64]]) -> Result<()> {
    if header.len() != columns.len() {
        return Err(DolError::config("header and column counts differ"));
    }
    let n = columns.first().map_or(0, |c| c.len());
    if columns.iter().any(|c| c.len() != n) {
        return Err(DolError::config("columns have different lengths"));
    }
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(header)?;
    for i in 0..n {
        wtr.write_record(columns.iter().map(|c| c[i].to_string()))?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_curve_csv<R: Read>(r: R) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rdr = reader(r);
    check_header(rdr.headers()?, &CURVE_HEADER)?;
    let (mut t, mut v) = (Vec::new(), Vec::new());
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| DolError::Parse {
            row,
            msg: e.to_string(),
        })?;
        if rec.len() != 2 {
            return Err(DolError::Parse {
                row,
                msg: format!("expected 2 fields, found {}", rec.len()),
            });
        }
        t.push(parse_f64(&rec[0], row, "time_hours")?);
        v.push(parse_f64(&rec[1], row, "value")?);
    }
    Ok((t, v))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let f = File::open(path)?;
    Ok(serde_json::from_reader(BufReader::new(f))?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}
