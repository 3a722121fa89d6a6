//! Discrete metric measure spaces: weighted graphs carrying a vertex measure,
//! edge conductances and edge lengths.
//!
//! A [`DiscreteSpace`] is immutable once built. Every constructor validates the
//! invariants (positive measure, conductances and lengths; a symmetric edge
//! list without loops or duplicates; connectivity), so downstream operators
//! never re-check them.

mod builders;
mod io;
pub(crate) mod metric;

pub use builders::{
    build_grid, build_hyperbolic_halfplane, build_sphere_patch, build_weighted_line,
    vertex_budget, DEFAULT_VERTEX_BUDGET, GRID_REFINEMENT_H0, HYPERBOLIC_REFINEMENT_H0,
    SPHERE_REFINEMENT_H0, WEIGHTED_LINE_REFINEMENT_H0,
};
pub use io::{load_space, save_space, space_from_json, space_to_json, SCHEMA_VERSION};
pub use metric::{ball, graph_distance};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Model metadata recorded alongside a space.
///
/// `k_ref` follows the "RCD*(−K, N)" convention: the Ricci lower bound of the
/// model is `−k_ref`. Unknown references are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceMeta {
    pub model: String,
    pub n_geo: u32,
    #[serde(rename = "K_ref")]
    pub k_ref: Option<f64>,
    #[serde(rename = "N_ref")]
    pub n_ref: Option<f64>,
    pub h: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub conductance: f64,
    pub length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub vertex: usize,
    pub conductance: f64,
    pub length: f64,
}

#[derive(Debug, Clone)]
pub struct DiscreteSpace {
    id: u64,
    mu: Vec<f64>,
    edges: Vec<Edge>,
    coords: Option<Vec<Vec<f64>>>,
    boundary: Vec<bool>,
    meta: SpaceMeta,
    offsets: Vec<usize>,
    adjacency: Vec<Neighbor>,
}

impl PartialEq for DiscreteSpace {
    fn eq(&self, other: &Self) -> bool {
        self.mu == other.mu
            && self.edges == other.edges
            && self.coords == other.coords
            && self.boundary == other.boundary
            && self.meta == other.meta
    }
}

impl DiscreteSpace {
    /// Validates and assembles a space. Edges are stored once per unordered
    /// pair; the orientation given is kept.
    pub fn new(
        mu: Vec<f64>,
        edges: Vec<Edge>,
        coords: Option<Vec<Vec<f64>>>,
        boundary: Vec<bool>,
        meta: SpaceMeta,
    ) -> Result<Self> {
        let n = mu.len();
        if n == 0 {
            return Err(crate::error::invalid("mu", "a space needs at least one vertex"));
        }
        for (i, &m) in mu.iter().enumerate() {
            if !(m > 0.0 && m.is_finite()) {
                return Err(Error::InvalidMeasure(i));
            }
        }
        if boundary.len() != n {
            return Err(crate::error::invalid("boundary", "one flag per vertex"));
        }
        if let Some(c) = &coords {
            if c.len() != n {
                return Err(crate::error::invalid("coords", "one coordinate tuple per vertex"));
            }
        }
        let mut seen = std::collections::HashSet::with_capacity(edges.len());
        let mut degree = vec![0usize; n];
        for e in &edges {
            if e.i >= n || e.j >= n || e.i == e.j || !seen.insert((e.i.min(e.j), e.i.max(e.j))) {
                return Err(Error::InvalidEdge(e.i, e.j));
            }
            if !(e.conductance > 0.0 && e.conductance.is_finite()) {
                return Err(Error::InvalidConductance(e.i, e.j));
            }
            if !(e.length > 0.0 && e.length.is_finite()) {
                return Err(Error::InvalidLength(e.i, e.j));
            }
            degree[e.i] += 1;
            degree[e.j] += 1;
        }
        let mut offsets = vec![0usize; n + 1];
        for i in 0..n {
            offsets[i + 1] = offsets[i] + degree[i];
        }
        let mut fill = offsets.clone();
        let mut adjacency = vec![
            Neighbor {
                vertex: 0,
                conductance: 0.0,
                length: 0.0,
            };
            offsets[n]
        ];
        for e in &edges {
            adjacency[fill[e.i]] = Neighbor {
                vertex: e.j,
                conductance: e.conductance,
                length: e.length,
            };
            fill[e.i] += 1;
            adjacency[fill[e.j]] = Neighbor {
                vertex: e.i,
                conductance: e.conductance,
                length: e.length,
            };
            fill[e.j] += 1;
        }
        for i in 0..n {
            adjacency[offsets[i]..offsets[i + 1]].sort_by_key(|nb| nb.vertex);
        }
        let mut space = Self {
            id: 0,
            mu,
            edges,
            coords,
            boundary,
            meta,
            offsets,
            adjacency,
        };
        let components = space.component_count();
        if components != 1 {
            return Err(Error::Disconnected { components });
        }
        space.id = space.content_hash();
        Ok(space)
    }

    fn component_count(&self) -> usize {
        let n = self.vertex_count();
        let mut seen = vec![false; n];
        let mut components = 0;
        let mut stack = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            components += 1;
            seen[start] = true;
            stack.push(start);
            while let Some(v) = stack.pop() {
                for nb in self.neighbors(v) {
                    if !seen[nb.vertex] {
                        seen[nb.vertex] = true;
                        stack.push(nb.vertex);
                    }
                }
            }
        }
        components
    }

    // FNV-1a over every numeric field.
    fn content_hash(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |x: u64| {
            for b in x.to_le_bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        for m in &self.mu {
            eat(m.to_bits());
        }
        for e in &self.edges {
            eat(e.i as u64);
            eat(e.j as u64);
            eat(e.conductance.to_bits());
            eat(e.length.to_bits());
        }
        for &b in &self.boundary {
            eat(u64::from(b));
        }
        for c in self.coords.iter().flatten().flatten() {
            eat(c.to_bits());
        }
        for b in self.meta.model.bytes() {
            eat(u64::from(b));
        }
        eat(self.meta.h.to_bits());
        h
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn vertex_count(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn coords(&self) -> Option<&[Vec<f64>]> {
        self.coords.as_deref()
    }

    pub fn coord(&self, v: usize) -> Option<&[f64]> {
        self.coords.as_ref().map(|c| c[v].as_slice())
    }

    pub fn boundary(&self) -> &[bool] {
        &self.boundary
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary[v]
    }

    pub fn has_boundary(&self) -> bool {
        self.boundary.iter().any(|&b| b)
    }

    pub fn meta(&self) -> &SpaceMeta {
        &self.meta
    }

    /// Neighbors of `v`, sorted by vertex index.
    pub fn neighbors(&self, v: usize) -> &[Neighbor] {
        &self.adjacency[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn total_measure(&self) -> f64 {
        crate::linalg::compensated_sum(self.mu.iter().copied())
    }

    pub fn interior(&self) -> IndexSet {
        IndexSet::from_sorted_unchecked((0..self.vertex_count()).filter(|&v| !self.boundary[v]).collect())
    }

    /// Vertices at least `depth` hops away from every boundary vertex.
    /// `depth = 1` is [`interior`](Self::interior).
    pub fn interior_band(&self, depth: usize) -> IndexSet {
        let n = self.vertex_count();
        let mut hops = vec![usize::MAX; n];
        let mut queue: std::collections::VecDeque<usize> = (0..n).filter(|&v| self.boundary[v]).collect();
        queue.iter().for_each(|&v| hops[v] = 0);
        while let Some(v) = queue.pop_front() {
            for nb in self.neighbors(v) {
                if hops[nb.vertex] == usize::MAX {
                    hops[nb.vertex] = hops[v] + 1;
                    queue.push_back(nb.vertex);
                }
            }
        }
        IndexSet::from_sorted_unchecked((0..n).filter(|&v| hops[v] >= depth).collect())
    }

    pub fn all_vertices(&self) -> IndexSet {
        IndexSet::from_sorted_unchecked((0..self.vertex_count()).collect())
    }

    /// Dirichlet energy Σ_edges c (f(i) − f(j))².
    pub fn energy(&self, f: &ScalarField) -> Result<f64> {
        self.check_aligned(f)?;
        Ok(crate::linalg::compensated_sum(self.edges.iter().map(|e| {
            let d = f.values[e.i] - f.values[e.j];
            e.conductance * d * d
        })))
    }

    /// Total mass Σ_x f(x) μ_x.
    pub fn mass(&self, f: &ScalarField) -> Result<f64> {
        self.check_aligned(f)?;
        Ok(crate::linalg::compensated_sum(f.values.iter().zip(&self.mu).map(|(v, m)| v * m)))
    }

    pub fn check_vertex(&self, v: usize) -> Result<()> {
        if v < self.vertex_count() {
            Ok(())
        } else {
            Err(Error::VertexOutOfRange {
                vertex: v,
                count: self.vertex_count(),
            })
        }
    }

    pub fn check_aligned(&self, f: &ScalarField) -> Result<()> {
        if f.space_id != self.id || f.values.len() != self.vertex_count() {
            return Err(Error::MisalignedField {
                expected: self.vertex_count(),
                found: f.values.len(),
                space_id: self.id,
                field_space: f.space_id,
            });
        }
        Ok(())
    }

    /// Field with the given values, bound to this space.
    pub fn field(&self, values: Vec<f64>) -> Result<ScalarField> {
        if values.len() != self.vertex_count() {
            return Err(Error::MisalignedField {
                expected: self.vertex_count(),
                found: values.len(),
                space_id: self.id,
                field_space: self.id,
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue(i));
        }
        Ok(ScalarField {
            values,
            space_id: self.id,
        })
    }

    pub fn constant_field(&self, c: f64) -> ScalarField {
        ScalarField {
            values: vec![c; self.vertex_count()],
            space_id: self.id,
        }
    }

    /// Samples `f` at the vertex coordinates.
    pub fn sample<F: Fn(&[f64]) -> f64>(&self, f: F) -> Result<ScalarField> {
        let coords = self
            .coords
            .as_ref()
            .ok_or_else(|| crate::error::invalid("coords", "space has no embedding to sample on"))?;
        self.field(coords.iter().map(|c| f(c)).collect())
    }

    pub fn field_from_fn<F: Fn(usize) -> f64>(&self, f: F) -> Result<ScalarField> {
        self.field((0..self.vertex_count()).map(f).collect())
    }

    /// Largest Σ_y c_xy / μ_x, the natural scale of L.
    pub fn operator_scale(&self) -> f64 {
        (0..self.vertex_count())
            .map(|x| self.neighbors(x).iter().map(|nb| nb.conductance).sum::<f64>() / self.mu[x])
            .fold(0.0, f64::max)
    }
}

/// Per-vertex real values bound to one space.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    values: Vec<f64>,
    space_id: u64,
}

impl ScalarField {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn space_id(&self) -> u64 {
        self.space_id
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField {
            values: self.values.iter().map(|&v| f(v)).collect(),
            space_id: self.space_id,
        }
    }

    /// Pointwise combination with a field on the same space.
    pub fn zip_with(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<ScalarField> {
        if other.space_id != self.space_id || other.values.len() != self.values.len() {
            return Err(Error::MisalignedField {
                expected: self.values.len(),
                found: other.values.len(),
                space_id: self.space_id,
                field_space: other.space_id,
            });
        }
        Ok(ScalarField {
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
            space_id: self.space_id,
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn sup_over(&self, set: &IndexSet) -> f64 {
        set.iter().map(|v| self.values[v]).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn inf_over(&self, set: &IndexSet) -> f64 {
        set.iter().map(|v| self.values[v]).fold(f64::INFINITY, f64::min)
    }

    pub(crate) fn from_parts(values: Vec<f64>, space_id: u64) -> Self {
        Self { values, space_id }
    }
}

impl std::ops::Index<usize> for ScalarField {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

/// Sorted set of vertex indices.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IndexSet(Vec<usize>);

impl IndexSet {
    pub fn new(mut indices: Vec<usize>, vertex_count: usize) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        if indices.last().is_some_and(|&v| v >= vertex_count) {
            return Err(Error::InvalidIndexSet);
        }
        Ok(Self(indices))
    }

    /// Accepts an already strictly increasing list, rejecting anything else.
    pub fn from_strictly_increasing(indices: Vec<usize>, vertex_count: usize) -> Result<Self> {
        if indices.windows(2).any(|w| w[0] >= w[1]) || indices.last().is_some_and(|&v| v >= vertex_count) {
            return Err(Error::InvalidIndexSet);
        }
        Ok(Self(indices))
    }

    pub(crate) fn from_sorted_unchecked(indices: Vec<usize>) -> Self {
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        Self(indices)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    pub fn is_subset(&self, other: &IndexSet) -> bool {
        self.iter().all(|v| other.contains(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> SpaceMeta {
        SpaceMeta {
            model: "test".into(),
            n_geo: 1,
            k_ref: None,
            n_ref: None,
            h: 1.0,
        }
    }

    fn edge(i: usize, j: usize) -> Edge {
        Edge {
            i,
            j,
            conductance: 1.0,
            length: 1.0,
        }
    }

    #[test]
    fn rejects_invalid_inputs() {
        let m = meta();
        assert!(matches!(
            DiscreteSpace::new(vec![1.0, 0.0], vec![edge(0, 1)], None, vec![false; 2], m.clone()),
            Err(Error::InvalidMeasure(1))
        ));
        let bad_c = Edge {
            conductance: -1.0,
            ..edge(0, 1)
        };
        assert!(matches!(
            DiscreteSpace::new(vec![1.0; 2], vec![bad_c], None, vec![false; 2], m.clone()),
            Err(Error::InvalidConductance(0, 1))
        ));
        assert!(matches!(
            DiscreteSpace::new(vec![1.0; 2], vec![edge(0, 1), edge(1, 0)], None, vec![false; 2], m.clone()),
            Err(Error::InvalidEdge(1, 0))
        ));
        assert!(matches!(
            DiscreteSpace::new(vec![1.0; 2], vec![edge(1, 1)], None, vec![false; 2], m.clone()),
            Err(Error::InvalidEdge(1, 1))
        ));
        assert!(matches!(
            DiscreteSpace::new(vec![1.0; 4], vec![edge(0, 1), edge(2, 3)], None, vec![false; 4], m),
            Err(Error::Disconnected { components: 2 })
        ));
    }

    #[test]
    fn energy_vanishes_exactly_on_constants() {
        let s = DiscreteSpace::new(
            vec![1.0; 3],
            vec![edge(0, 1), edge(1, 2)],
            None,
            vec![false; 3],
            meta(),
        )
        .unwrap();
        assert_eq!(s.energy(&s.constant_field(3.7)).unwrap(), 0.0);
        let f = s.field(vec![0.0, 1.0, 4.0]).unwrap();
        assert_eq!(s.energy(&f).unwrap(), 1.0 + 9.0);
    }

    #[test]
    fn fields_from_other_spaces_are_rejected() {
        let a = DiscreteSpace::new(vec![1.0; 2], vec![edge(0, 1)], None, vec![false; 2], meta()).unwrap();
        let b = DiscreteSpace::new(vec![2.0; 2], vec![edge(0, 1)], None, vec![false; 2], meta()).unwrap();
        let f = b.constant_field(1.0);
        assert!(matches!(a.check_aligned(&f), Err(Error::MisalignedField { .. })));
    }

    #[test]
    fn index_set_validation() {
        assert!(IndexSet::from_strictly_increasing(vec![0, 2, 2], 5).is_err());
        assert!(IndexSet::from_strictly_increasing(vec![0, 5], 5).is_err());
        let s = IndexSet::new(vec![3, 1, 1], 5).unwrap();
        assert_eq!(s.as_slice(), &[1, 3]);
    }
}
