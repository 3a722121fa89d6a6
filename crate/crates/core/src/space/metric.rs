use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{DiscreteSpace, IndexSet, ScalarField};
use crate::error::{invalid, Result};

#[derive(PartialEq)]
struct Entry {
    dist: f64,
    vertex: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortest-path distance from `x0` with edge lengths as weights (Dijkstra).
pub fn graph_distance(space: &DiscreteSpace, x0: usize) -> Result<ScalarField> {
    space.check_vertex(x0)?;
    let n = space.vertex_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut heap = BinaryHeap::new();
    dist[x0] = 0.0;
    heap.push(Entry { dist: 0.0, vertex: x0 });
    while let Some(Entry { dist: d, vertex: v }) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        for nb in space.neighbors(v) {
            let cand = d + nb.length;
            if cand < dist[nb.vertex] {
                dist[nb.vertex] = cand;
                heap.push(Entry {
                    dist: cand,
                    vertex: nb.vertex,
                });
            }
        }
    }
    space.field(dist)
}

/// Closed ball `{x : d(x0, x) ≤ R}`.
///
/// Sums of edge lengths carry rounding error, so the radius is compared with a
/// relative slack of 1e-12.
pub fn ball(space: &DiscreteSpace, x0: usize, radius: f64) -> Result<IndexSet> {
    if !(radius >= 0.0) {
        return Err(invalid("R", format!("radius must be nonnegative, got {radius}")));
    }
    let dist = graph_distance(space, x0)?;
    Ok(ball_from_distance(&dist, radius))
}

pub(crate) fn ball_from_distance(dist: &ScalarField, radius: f64) -> IndexSet {
    let cut = radius * (1.0 + 1e-12);
    IndexSet::from_sorted_unchecked(
        dist.values()
            .iter()
            .enumerate()
            .filter(|(_, &d)| d <= cut)
            .map(|(v, _)| v)
            .collect(),
    )
}
