//! Seeded generators for test instances: random connected graphs, noise and
//! smooth fields, and fields meeting the maximum-principle preconditions.
//!
//! Every generator draws from a [`ChaCha8Rng`], so a seed reproduces the same
//! instance on every platform.

use std::f64::consts::TAU;

use rand::seq::IndexedRandom;
pub use rand::Rng;
pub use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};
use crate::gamma::{self, TimeSeriesField};
use crate::space::{DiscreteSpace, Edge, IndexSet, ScalarField, SpaceMeta};

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A connected graph on `n` vertices: a random recursive tree plus about
/// `n/2` extra edges, measures in `[0.5, 2]`, conductances in `[0.1, 10]`,
/// unit lengths, no boundary.
pub fn random_connected_graph(n: usize, rng: &mut ChaCha8Rng) -> Result<DiscreteSpace> {
    if n == 0 {
        return Err(invalid("n", "a graph needs at least one vertex"));
    }
    let mut pairs = std::collections::BTreeSet::new();
    for v in 1..n {
        pairs.insert((rng.random_range(0..v), v));
    }
    let extra = if n > 2 { rng.random_range(0..=n / 2) } else { 0 };
    for _ in 0..extra {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a != b {
            pairs.insert((a.min(b), a.max(b)));
        }
    }
    let edges = pairs
        .into_iter()
        .map(|(i, j)| Edge {
            i,
            j,
            conductance: rng.random_range(0.1..10.0),
            length: 1.0,
        })
        .collect();
    let mu = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
    DiscreteSpace::new(
        mu,
        edges,
        None,
        vec![false; n],
        SpaceMeta {
            model: "random_graph".into(),
            n_geo: 0,
            k_ref: None,
            n_ref: None,
            h: 1.0,
        },
    )
}

/// Uniform noise on `[-1, 1]`, smoothed by 0 to 3 explicit diffusion steps
/// and scaled to unit sup norm.
pub fn noise_field(space: &DiscreteSpace, rng: &mut ChaCha8Rng) -> ScalarField {
    let n = space.vertex_count();
    let mut f: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let sweeps = rng.random_range(0..4);
    let step = 0.5 / space.operator_scale().max(f64::MIN_POSITIVE);
    for _ in 0..sweeps {
        let lf = gamma::laplacian_values(space, &f);
        for (v, l) in f.iter_mut().zip(&lf) {
            *v += step * l;
        }
    }
    let m = f.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if m > 0.0 {
        f.iter_mut().for_each(|v| *v /= m);
    }
    ScalarField::from_parts(f, space.id())
}

/// `a·Π sin/cos(k_i x_i + φ_i)` over the coordinates, with `a ∈ [0.5, 1.5]`
/// and frequencies in `[0.5, 2]`. Requires coordinates.
pub fn smooth_field(space: &DiscreteSpace, rng: &mut ChaCha8Rng) -> Result<ScalarField> {
    let dim = space
        .coord(0)
        .map(<[f64]>::len)
        .ok_or_else(|| invalid("space", "smooth fields need vertex coordinates"))?;
    let a = rng.random_range(0.5..1.5);
    let waves: Vec<(f64, f64)> = (0..dim)
        .map(|_| (rng.random_range(0.5..2.0), rng.random_range(0.0..TAU)))
        .collect();
    space.sample(|p| {
        a * p
            .iter()
            .zip(&waves)
            .enumerate()
            .map(|(i, (x, (k, ph)))| if i == 0 { (k * x + ph).sin() } else { (k * x + ph).cos() })
            .product::<f64>()
    })
}

/// `f` scaled so that `sup_region Γ(f) = 1`; unchanged if `Γ(f)` vanishes
/// on `region`.
pub fn unit_gradient(space: &DiscreteSpace, f: &ScalarField, region: &IndexSet) -> Result<ScalarField> {
    space.check_aligned(f)?;
    let g = gamma::gamma_values(space, f.values(), f.values());
    let sup = region.iter().map(|x| g[x]).fold(0.0, f64::max);
    if sup > 0.0 {
        let s = sup.sqrt();
        Ok(f.map(|v| v / s))
    } else {
        Ok(f.clone())
    }
}

/// A random hop-ball around a non-boundary vertex, with boundary vertices
/// removed. At most half the vertices (at least one).
pub fn random_region(space: &DiscreteSpace, rng: &mut ChaCha8Rng) -> Result<IndexSet> {
    let candidates: Vec<usize> = (0..space.vertex_count()).filter(|&v| !space.is_boundary(v)).collect();
    let &start = candidates
        .choose(rng)
        .ok_or_else(|| invalid("space", "every vertex is a boundary vertex"))?;
    let target = rng.random_range(1..=(space.vertex_count() / 2).max(1));
    let mut taken = vec![false; space.vertex_count()];
    let mut queue = std::collections::VecDeque::from([start]);
    taken[start] = true;
    let mut region = Vec::new();
    while let Some(v) = queue.pop_front() {
        region.push(v);
        if region.len() == target {
            break;
        }
        for nb in space.neighbors(v) {
            if !taken[nb.vertex] && !space.is_boundary(nb.vertex) {
                taken[nb.vertex] = true;
                queue.push_back(nb.vertex);
            }
        }
    }
    IndexSet::new(region, space.vertex_count())
}

fn shell(space: &DiscreteSpace, region: &IndexSet) -> Vec<usize> {
    let mut out: Vec<usize> = region
        .iter()
        .flat_map(|x| space.neighbors(x).iter().map(|nb| nb.vertex))
        .filter(|&y| !region.contains(y))
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Noise, quantized to multiples of 1/8 half the time so that maxima tie.
fn raw_values(space: &DiscreteSpace, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut f = noise_field(space, rng).into_values();
    if rng.random_bool(0.5) {
        f.iter_mut().for_each(|v| *v = (*v * 8.0).round() / 8.0);
    }
    f
}

/// A field whose maximum over `region` dominates its values on the
/// neighbouring shell.
pub fn admissible_field(space: &DiscreteSpace, region: &IndexSet, rng: &mut ChaCha8Rng) -> ScalarField {
    let mut f = raw_values(space, rng);
    let top = region.iter().map(|x| f[x]).fold(f64::NEG_INFINITY, f64::max);
    for y in shell(space, region) {
        f[y] = f[y].min(top);
    }
    ScalarField::from_parts(f, space.id())
}

/// A series over `frames` frames at spacing `dt` whose maximum over
/// `region × (δ, T]` dominates the shell inside the window and the region at
/// the frame before it. Frames with `t ∈ (δ, T]` form the window.
pub fn admissible_series(
    space: &DiscreteSpace,
    region: &IndexSet,
    frames: usize,
    dt: f64,
    window: (f64, f64),
    rng: &mut ChaCha8Rng,
) -> Result<TimeSeriesField> {
    if frames < 2 {
        return Err(invalid("frames", "need at least two frames"));
    }
    let mut values: Vec<Vec<f64>> = (0..frames).map(|_| raw_values(space, rng)).collect();
    let slack = 1e-9 * dt;
    let in_window: Vec<usize> = (1..frames)
        .filter(|&k| {
            let t = k as f64 * dt;
            t > window.0 + slack && t <= window.1 + slack
        })
        .collect();
    let Some(&first) = in_window.first() else {
        return Err(crate::error::Error::EmptyWindow);
    };
    let top = in_window
        .iter()
        .flat_map(|&k| region.iter().map(move |x| (k, x)))
        .map(|(k, x)| values[k][x])
        .fold(f64::NEG_INFINITY, f64::max);
    let ring = shell(space, region);
    for &k in &in_window {
        for &y in &ring {
            values[k][y] = values[k][y].min(top);
        }
    }
    for x in region.iter() {
        values[first - 1][x] = values[first - 1][x].min(top);
    }
    let frames = values
        .into_iter()
        .map(|v| ScalarField::from_parts(v, space.id()))
        .collect();
    TimeSeriesField::new(frames, dt, 0.0)
}
