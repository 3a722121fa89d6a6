//! Curvature estimator against a sampled oracle, its witness, and scaling
//! covariance.

use approx::assert_relative_eq;
use gammalab::curvature::{curvature_at, curvature_profile, verify_cd};
use gammalab::gamma::{gamma2, gamma_sq, laplacian};
use gammalab::sampling::{random_connected_graph, seeded, Rng};
use gammalab::space::{build_grid, build_sphere_patch, Edge};
use gammalab::{DiscreteSpace, ScalarField};

fn ratio(s: &DiscreteSpace, f: &ScalarField, x: usize, n: f64) -> Option<f64> {
    let g = gamma_sq(s, f).unwrap()[x];
    if g <= 1e-14 {
        return None;
    }
    let l = laplacian(s, f).unwrap()[x];
    let inv_n = if n.is_infinite() { 0.0 } else { 1.0 / n };
    Some((gamma2(s, f).unwrap()[x] - l * l * inv_n) / g)
}

/// Minimum of the Bochner ratio at `x` over `samples` random test functions
/// supported on all vertices.
fn sampled_min(s: &DiscreteSpace, x: usize, n: f64, samples: usize, seed: u64) -> f64 {
    let mut rng = seeded(seed);
    (0..samples)
        .filter_map(|_| {
            let values = (0..s.vertex_count()).map(|_| rng.random_range(-1.0..1.0)).collect();
            ratio(s, &s.field(values).unwrap(), x, n)
        })
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn oracle_never_beats_the_eigensolver() {
    let mut rng = seeded(17);
    for _ in 0..12 {
        let n_vertices = rng.random_range(2..9);
        let s = random_connected_graph(n_vertices, &mut rng).unwrap();
        for n in [2.0, 3.5, f64::INFINITY] {
            let x = rng.random_range(0..n_vertices);
            let c = curvature_at(&s, x, n).unwrap();
            if c.unbounded_below {
                continue;
            }
            let oracle = sampled_min(&s, x, n, 10_000, 5);
            let scale = s.operator_scale();
            assert!(oracle >= c.k_star - 1e-9 * scale, "oracle {oracle} below k* {}", c.k_star);
        }
    }
}

#[test]
fn witness_attains_the_minimum() {
    let mut rng = seeded(23);
    for _ in 0..20 {
        let n_vertices = rng.random_range(2..40);
        let s = random_connected_graph(n_vertices, &mut rng).unwrap();
        let x = rng.random_range(0..n_vertices);
        let c = curvature_at(&s, x, 2.5).unwrap();
        if c.unbounded_below {
            continue;
        }
        let w = c.witness.as_ref().unwrap().to_field(&s).unwrap();
        let r = ratio(&s, &w, x, 2.5).unwrap();
        assert_relative_eq!(r, c.k_star, epsilon = 1e-8 * s.operator_scale(), max_relative = 1e-8);
    }
}

fn rescaled(s: &DiscreteSpace, mu_factor: f64, c_factor: f64) -> DiscreteSpace {
    let edges: Vec<Edge> = s
        .edges()
        .iter()
        .map(|e| Edge {
            conductance: e.conductance * c_factor,
            ..*e
        })
        .collect();
    DiscreteSpace::new(
        s.mu().iter().map(|m| m * mu_factor).collect(),
        edges,
        None,
        s.boundary().to_vec(),
        s.meta().clone(),
    )
    .unwrap()
}

#[test]
fn curvature_scales_with_the_operator() {
    let mut rng = seeded(31);
    for _ in 0..10 {
        let n_vertices = rng.random_range(2..30);
        let s = random_connected_graph(n_vertices, &mut rng).unwrap();
        let x = rng.random_range(0..n_vertices);
        let base = curvature_at(&s, x, 3.0).unwrap();
        if base.unbounded_below {
            continue;
        }
        for (mu_f, c_f) in [(1.0, 4.0), (0.5, 1.0), (2.0, 3.0)] {
            let scaled = curvature_at(&rescaled(&s, mu_f, c_f), x, 3.0).unwrap();
            let lambda = c_f / mu_f;
            assert_relative_eq!(scaled.k_star, lambda * base.k_star, epsilon = 1e-9 * lambda * s.operator_scale(), max_relative = 1e-9);
        }
    }
}

#[test]
fn k_star_is_monotone_in_dimension() {
    let s = build_grid(2, 1.0, 0.25, true).unwrap();
    let mut last = f64::NEG_INFINITY;
    for n in [1.5, 2.0, 4.0, 10.0, f64::INFINITY] {
        let k = curvature_at(&s, 0, n).unwrap().k_star;
        assert!(k >= last - 1e-12);
        last = k;
    }
}

#[test]
fn verify_cd_agrees_with_the_profile() {
    let s = build_sphere_patch(1.0, (0.9, 2.2), 8, 12).unwrap();
    let p = curvature_profile(&s, 3.0).unwrap();
    let kmin = p.min();
    assert!(kmin.is_finite());
    assert!(verify_cd(&s, kmin, 3.0, 50, 1).unwrap().passed());
    let above = kmin.abs().max(1.0) * 10.0 + kmin;
    assert!(!verify_cd(&s, above, 3.0, 200, 1).unwrap().passed());
}
