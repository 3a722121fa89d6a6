//! Heat flow and Poisson solver invariants.

use approx::assert_relative_eq;
use gammalab::elliptic::BoundaryValues;
use gammalab::heat::Dirichlet;
use gammalab::sampling::{noise_field, random_connected_graph, seeded};
use gammalab::space::{build_grid, build_hyperbolic_halfplane};
use gammalab::{heat_kernel, laplacian, solve_heat, solve_poisson};

#[test]
fn closed_heat_flow_conserves_mass_and_positivity() {
    let mut rng = seeded(3);
    for _ in 0..10 {
        let s = random_connected_graph(60, &mut rng).unwrap();
        let u0 = noise_field(&s, &mut rng).map(|v| v.abs() + 0.01);
        let tsf = solve_heat(&s, &u0, 1.0, 0.05, None).unwrap();
        let m0 = s.mass(&u0).unwrap();
        for frame in tsf.frames() {
            assert_relative_eq!(s.mass(frame).unwrap(), m0, max_relative = 1e-8);
            assert!(frame.values().iter().all(|&v| v > 0.0));
        }
    }
}

#[test]
fn heat_kernel_has_unit_mass_and_decays() {
    let s = build_grid(1, 4.0, 0.1, true).unwrap();
    let tsf = heat_kernel(&s, 0, 1.0, 0.01).unwrap();
    let peaks: Vec<f64> = tsf.frames().iter().map(|f| f[0]).collect();
    assert!(peaks.windows(2).all(|w| w[1] <= w[0]));
    assert_relative_eq!(s.mass(tsf.frame(tsf.len() - 1)).unwrap(), 1.0, max_relative = 1e-8);
}

#[test]
fn fixed_boundary_is_held() {
    let s = build_grid(2, 1.0, 0.1, false).unwrap();
    let u0 = s.sample(|p| 1.0 + p[0] * p[0] + p[1]).unwrap();
    let d = Dirichlet::fixed_boundary(&s, &u0).unwrap();
    let tsf = solve_heat(&s, &u0, 0.2, 0.01, Some(&d)).unwrap();
    let last = tsf.frame(tsf.len() - 1);
    for v in (0..s.vertex_count()).filter(|&v| s.is_boundary(v)) {
        assert_eq!(last[v], u0[v]);
    }
}

#[test]
fn poisson_recovers_a_known_solution() {
    let s = build_hyperbolic_halfplane((-1.0, 1.0), (0.5, 2.0), 0.1).unwrap();
    let exact = s.sample(|p| p[0] * p[0] - p[1] + 0.3 * p[0] * p[1]).unwrap();
    let g = laplacian(&s, &exact).unwrap();
    let bv = BoundaryValues::trace_of(&s, &exact).unwrap();
    let f = solve_poisson(&s, &g, Some(&bv)).unwrap();
    let err = f.zip_with(&exact, |a, b| a - b).unwrap().max_abs();
    assert!(err < 1e-7 * exact.max_abs(), "error {err}");
}

#[test]
fn closed_poisson_returns_zero_mean() {
    let mut rng = seeded(9);
    let s = random_connected_graph(40, &mut rng).unwrap();
    let exact = noise_field(&s, &mut rng);
    let g = laplacian(&s, &exact).unwrap();
    let f = solve_poisson(&s, &g, None).unwrap();
    assert!(s.mass(&f).unwrap().abs() < 1e-8 * s.total_measure());
    let lf = laplacian(&s, &f).unwrap();
    let res = lf.zip_with(&g, |a, b| a - b).unwrap().max_abs();
    assert!(res < 1e-7 * g.max_abs().max(1.0), "residual {res}");
}
