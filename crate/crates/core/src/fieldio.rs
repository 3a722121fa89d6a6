//! Field files `{version, space_id, values}` and time-series files
//! `{version, space_id, dt, t0, frames}`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gamma::TimeSeriesField;
use crate::space::{DiscreteSpace, ScalarField, SCHEMA_VERSION};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FieldFile {
    version: u32,
    space_id: u64,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SeriesFile {
    version: u32,
    space_id: u64,
    dt: f64,
    t0: f64,
    frames: Vec<Vec<f64>>,
}

fn parse<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    let probe: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Corrupt(e.to_string()))?;
    let version = probe
        .get("version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| Error::Corrupt("missing version".into()))?;
    if version != u64::from(SCHEMA_VERSION) {
        return Err(Error::SchemaMismatch {
            expected: SCHEMA_VERSION,
            found: version as u32,
        });
    }
    serde_json::from_value(probe).map_err(|e| Error::Corrupt(e.to_string()))
}

fn check_id(space: &DiscreteSpace, id: u64, len: usize) -> Result<()> {
    if id != space.id() || len != space.vertex_count() {
        return Err(Error::MisalignedField {
            expected: space.vertex_count(),
            found: len,
            space_id: space.id(),
            field_space: id,
        });
    }
    Ok(())
}

pub fn field_to_json(f: &ScalarField) -> String {
    serde_json::to_string(&FieldFile {
        version: SCHEMA_VERSION,
        space_id: f.space_id(),
        values: f.values().to_vec(),
    })
    .expect("field serializes")
}

/// Parses a field file and checks it belongs to `space`.
pub fn field_from_json(space: &DiscreteSpace, text: &str) -> Result<ScalarField> {
    let file: FieldFile = parse(text)?;
    check_id(space, file.space_id, file.values.len())?;
    space.field(file.values)
}

pub fn series_to_json(tsf: &TimeSeriesField) -> String {
    serde_json::to_string(&SeriesFile {
        version: SCHEMA_VERSION,
        space_id: tsf.space_id(),
        dt: tsf.dt(),
        t0: tsf.t0(),
        frames: tsf.frames().iter().map(|f| f.values().to_vec()).collect(),
    })
    .expect("series serializes")
}

pub fn series_from_json(space: &DiscreteSpace, text: &str) -> Result<TimeSeriesField> {
    let file: SeriesFile = parse(text)?;
    let frames = file
        .frames
        .into_iter()
        .map(|values| {
            check_id(space, file.space_id, values.len())?;
            space.field(values)
        })
        .collect::<Result<Vec<_>>>()?;
    TimeSeriesField::new(frames, file.dt, file.t0)
}

pub fn save_field(f: &ScalarField, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, field_to_json(f))?;
    Ok(())
}

pub fn load_field(space: &DiscreteSpace, path: impl AsRef<Path>) -> Result<ScalarField> {
    field_from_json(space, &fs::read_to_string(path)?)
}

pub fn save_series(tsf: &TimeSeriesField, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, series_to_json(tsf))?;
    Ok(())
}

pub fn load_series(space: &DiscreteSpace, path: impl AsRef<Path>) -> Result<TimeSeriesField> {
    series_from_json(space, &fs::read_to_string(path)?)
}
