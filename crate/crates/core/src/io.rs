//! File formats: measurement tables (CSV and JSON), trajectories, and the
//! small JSON documents used on the command line.
//!
//! Floats are written with 17 significant digits in `.`-decimal scientific
//! notation, so every value survives a write/read cycle bit for bit.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fiber::{FiberModel, Trajectory};
use crate::mueller::MuellerMatrix;
use crate::retrieval::{MeasurementRecord, MeasurementSet};
use crate::stokes::StokesVector;

pub const MEASUREMENT_HEADER: [&str; 10] = [
    "label",
    "s0_in",
    "s1_in",
    "s2_in",
    "s3_in",
    "s0_out",
    "s1_out",
    "s2_out",
    "s3_out",
    "sample_idx",
];

pub const TRAJECTORY_HEADER: [&str; 5] = ["z", "s0", "s1", "s2", "s3"];

/// Round-trip float formatting.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// One repeat sample of one input state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRow {
    pub label: String,
    pub s0_in: f64,
    pub s1_in: f64,
    pub s2_in: f64,
    pub s3_in: f64,
    pub s0_out: f64,
    pub s1_out: f64,
    pub s2_out: f64,
    pub s3_out: f64,
    pub sample_idx: usize,
}

impl MeasurementRow {
    fn s_in(&self) -> StokesVector {
        StokesVector::new(self.s0_in, self.s1_in, self.s2_in, self.s3_in)
    }

    fn s_out(&self) -> StokesVector {
        StokesVector::new(self.s0_out, self.s1_out, self.s2_out, self.s3_out)
    }
}

/// Flatten a set into rows, records in order, samples numbered from 0.
pub fn to_rows(set: &MeasurementSet) -> Vec<MeasurementRow> {
    let mut rows = Vec::new();
    for r in &set.records {
        for (i, s) in r.samples_out.iter().enumerate() {
            rows.push(MeasurementRow {
                label: r.label.clone(),
                s0_in: r.s_in.s0,
                s1_in: r.s_in.s1,
                s2_in: r.s_in.s2,
                s3_in: r.s_in.s3,
                s0_out: s.s0,
                s1_out: s.s1,
                s2_out: s.s2,
                s3_out: s.s3,
                sample_idx: i,
            });
        }
    }
    rows
}

/// Label, input state, and `(sample_idx, output)` pairs.
type Group = (String, StokesVector, Vec<(usize, StokesVector)>);

/// Group rows by label (first appearance order) and sort samples by index.
pub fn from_rows(
    rows: Vec<MeasurementRow>,
    wavelength: f64,
    fiber_length: f64,
) -> Result<MeasurementSet> {
    let mut groups: Vec<Group> = Vec::new();
    for row in rows {
        if !row.label.chars().any(|c| !c.is_whitespace()) {
            return Err(Error::Schema("empty label".into()));
        }
        let s_in = row.s_in();
        match groups.iter_mut().find(|g| g.0 == row.label) {
            Some(g) => {
                if g.1 != s_in {
                    return Err(Error::Schema(format!(
                        "label {:?} has inconsistent input states",
                        row.label
                    )));
                }
                g.2.push((row.sample_idx, row.s_out()));
            }
            None => groups.push((row.label.clone(), s_in, vec![(row.sample_idx, row.s_out())])),
        }
    }
    if groups.is_empty() {
        return Err(Error::Schema("no measurement rows".into()));
    }
    let mut records = Vec::with_capacity(groups.len());
    for (label, s_in, mut samples) in groups {
        samples.sort_by_key(|(i, _)| *i);
        if samples.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Schema(format!(
                "label {label:?} repeats a sample_idx"
            )));
        }
        records.push(MeasurementRecord {
            label,
            s_in,
            samples_out: samples.into_iter().map(|(_, s)| s).collect(),
        });
    }
    MeasurementSet::new(records, wavelength, fiber_length)
}

pub fn read_measurements_csv(
    reader: impl Read,
    wavelength: f64,
    fiber_length: f64,
) -> Result<MeasurementSet> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.iter().ne(MEASUREMENT_HEADER) {
        return Err(Error::Schema(format!(
            "expected header {}, got {}",
            MEASUREMENT_HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let rows = rdr
        .deserialize()
        .collect::<std::result::Result<Vec<MeasurementRow>, _>>()
        .map_err(|e| Error::Schema(e.to_string()))?;
    from_rows(rows, wavelength, fiber_length)
}

pub fn write_measurements_csv(writer: impl Write, set: &MeasurementSet) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(MEASUREMENT_HEADER)?;
    for r in to_rows(set) {
        let mut fields = vec![r.label.clone()];
        fields.extend(
            [
                r.s0_in, r.s1_in, r.s2_in, r.s3_in, r.s0_out, r.s1_out, r.s2_out, r.s3_out,
            ]
            .map(fmt_f64),
        );
        fields.push(r.sample_idx.to_string());
        w.write_record(&fields)?;
    }
    w.flush()?;
    Ok(())
}

/// The JSON form is an array of row objects with the CSV column names.
pub fn read_measurements_json(
    reader: impl Read,
    wavelength: f64,
    fiber_length: f64,
) -> Result<MeasurementSet> {
    let rows: Vec<MeasurementRow> =
        serde_json::from_reader(reader).map_err(|e| Error::Schema(e.to_string()))?;
    from_rows(rows, wavelength, fiber_length)
}

pub fn write_measurements_json(writer: impl Write, set: &MeasurementSet) -> Result<()> {
    serde_json::to_writer_pretty(writer, &to_rows(set))?;
    Ok(())
}

/// Load by extension: `.json` is the row-array form, anything else CSV.
pub fn load_measurements(
    path: &Path,
    wavelength: f64,
    fiber_length: f64,
) -> Result<MeasurementSet> {
    let file = fs::File::open(path)?;
    if path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"))
    {
        read_measurements_json(file, wavelength, fiber_length)
    } else {
        read_measurements_csv(file, wavelength, fiber_length)
    }
}

pub fn write_trajectory_csv(writer: impl Write, traj: &Trajectory) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(TRAJECTORY_HEADER)?;
    for p in &traj.points {
        let s = p.state;
        w.write_record([p.z, s.s0, s.s1, s.s2, s.s3].map(fmt_f64))?;
    }
    w.flush()?;
    Ok(())
}

/// Inline JSON (first non-blank character `{` or `[`) or a path to a file.
fn json_text(arg: &str) -> Result<String> {
    let t = arg.trim_start();
    if t.starts_with('{') || t.starts_with('[') {
        Ok(arg.to_string())
    } else {
        Ok(fs::read_to_string(arg)?)
    }
}

fn parse_json<T: for<'de> Deserialize<'de>>(arg: &str, what: &str) -> Result<T> {
    serde_json::from_str(&json_text(arg)?).map_err(|e| Error::Schema(format!("{what}: {e}")))
}

pub fn parse_model(arg: &str) -> Result<FiberModel> {
    let model: FiberModel = parse_json(arg, "fiber model")?;
    model.validate()?;
    Ok(model)
}

pub fn parse_mueller(arg: &str) -> Result<MuellerMatrix> {
    parse_json(arg, "Mueller matrix")
}

/// A basis label (`H V D A + -`), a JSON `[s0,s1,s2,s3]` array, or a file
/// holding one.
pub fn parse_stokes(arg: &str) -> Result<StokesVector> {
    if let Some(s) = StokesVector::from_label(arg.trim()) {
        return Ok(s);
    }
    parse_json(arg, "Stokes vector")
}
