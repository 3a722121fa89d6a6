//! JSON space files.
//!
//! ```text
//! {version: 1, meta: {model, n_geo, K_ref, N_ref, h},
//!  vertices: [{id, mu, coords?, boundary}], edges: [{i, j, c, len}]}
//! ```
//!
//! Floats are written in shortest round-trip form, so save → load is bit-exact.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DiscreteSpace, Edge, SpaceMeta};
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpaceFile {
    version: u32,
    meta: SpaceMeta,
    vertices: Vec<VertexRecord>,
    edges: Vec<EdgeRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VertexRecord {
    id: usize,
    mu: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    coords: Option<Vec<f64>>,
    boundary: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeRecord {
    i: usize,
    j: usize,
    c: f64,
    len: f64,
}

pub fn space_to_json(space: &DiscreteSpace) -> String {
    let file = SpaceFile {
        version: SCHEMA_VERSION,
        meta: space.meta().clone(),
        vertices: (0..space.vertex_count())
            .map(|v| VertexRecord {
                id: v,
                mu: space.mu()[v],
                coords: space.coord(v).map(<[f64]>::to_vec),
                boundary: space.is_boundary(v),
            })
            .collect(),
        edges: space
            .edges()
            .iter()
            .map(|e| EdgeRecord {
                i: e.i,
                j: e.j,
                c: e.conductance,
                len: e.length,
            })
            .collect(),
    };
    serde_json::to_string(&file).expect("space serializes")
}

pub fn space_from_json(text: &str) -> Result<DiscreteSpace> {
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
    let file: SpaceFile = serde_json::from_value(probe).map_err(|e| Error::Corrupt(e.to_string()))?;
    for (k, v) in file.vertices.iter().enumerate() {
        if v.id != k {
            return Err(Error::Corrupt(format!("vertex record {k} has id {}", v.id)));
        }
    }
    let has_coords = file.vertices.first().is_some_and(|v| v.coords.is_some());
    if file.vertices.iter().any(|v| v.coords.is_some() != has_coords) {
        return Err(Error::Corrupt("coords present on some vertices only".into()));
    }
    let mu = file.vertices.iter().map(|v| v.mu).collect();
    let boundary = file.vertices.iter().map(|v| v.boundary).collect();
    let coords = has_coords.then(|| file.vertices.iter().map(|v| v.coords.clone().unwrap_or_default()).collect());
    let edges = file
        .edges
        .iter()
        .map(|e| Edge {
            i: e.i,
            j: e.j,
            conductance: e.c,
            length: e.len,
        })
        .collect();
    DiscreteSpace::new(mu, edges, coords, boundary, file.meta)
}

pub fn save_space(space: &DiscreteSpace, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, space_to_json(space))?;
    Ok(())
}

pub fn load_space(path: impl AsRef<Path>) -> Result<DiscreteSpace> {
    space_from_json(&fs::read_to_string(path)?)
}
