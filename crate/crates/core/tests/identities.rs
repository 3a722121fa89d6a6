//! Property tests of the exact discrete identities on random connected
//! graphs with at most 200 vertices.

use approx::assert_relative_eq;
use gammalab::elliptic::{max_principle_probe, parabolic_max_probe};
use gammalab::gamma::{
    gamma, gamma2, gamma2_expanded, gamma_sq, kato_abs_check, kato_check, laplacian, leibniz_defect, leibniz_scale,
    steklov_average, weighted_laplacian, EXACT_TOL,
};
use gammalab::linalg::compensated_sum;
use gammalab::sampling::{
    admissible_field, admissible_series, noise_field, random_connected_graph, random_region, seeded, ChaCha8Rng, Rng,
};
use gammalab::{DiscreteSpace, ScalarField, TimeSeriesField};
use proptest::prelude::*;

fn instance(seed: u64, n: usize) -> (DiscreteSpace, ChaCha8Rng) {
    let mut rng = seeded(seed);
    let space = random_connected_graph(n, &mut rng).unwrap();
    (space, rng)
}

fn weighted_sum(space: &DiscreteSpace, a: &ScalarField, b: &ScalarField) -> f64 {
    compensated_sum((0..space.vertex_count()).map(|x| space.mu()[x] * a[x] * b[x]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn leibniz_defect_vanishes(seed in any::<u64>(), n in 1usize..=200) {
        let (s, mut rng) = instance(seed, n);
        let f = noise_field(&s, &mut rng);
        let g = noise_field(&s, &mut rng);
        let d = leibniz_defect(&s, &f, &g).unwrap();
        prop_assert!(d.max_abs() <= EXACT_TOL * leibniz_scale(&s, &f, &g));
    }

    #[test]
    fn kato_margins_are_nonnegative(seed in any::<u64>(), n in 1usize..=200) {
        let (s, mut rng) = instance(seed, n);
        let f = noise_field(&s, &mut rng);
        let w = noise_field(&s, &mut rng).map(|v| 3.0 * v);
        let plus = kato_check(&s, &f, &w).unwrap();
        let abs = kato_abs_check(&s, &f, &w).unwrap();
        prop_assert!(plus.min_margin >= 0.0, "min margin {}", plus.min_margin);
        prop_assert!(abs.min_margin >= 0.0, "min margin {}", abs.min_margin);
    }

    #[test]
    fn elliptic_probe_passes(seed in any::<u64>(), n in 1usize..=200) {
        let (s, mut rng) = instance(seed, n);
        let region = random_region(&s, &mut rng).unwrap();
        let w = noise_field(&s, &mut rng);
        let f = admissible_field(&s, &region, &mut rng);
        let probe = max_principle_probe(&s, &f, &w, &region).unwrap();
        prop_assert!(!probe.points.is_empty());
        prop_assert!(probe.pass);
    }

    #[test]
    fn parabolic_probe_passes(seed in any::<u64>(), n in 1usize..=200, frames in 3usize..10) {
        let (s, mut rng) = instance(seed, n);
        let region = random_region(&s, &mut rng).unwrap();
        let w = noise_field(&s, &mut rng);
        let dt = 0.1;
        let window = (0.05, (frames - 1) as f64 * dt);
        let tsf = admissible_series(&s, &region, frames, dt, window, &mut rng).unwrap();
        let probe = parabolic_max_probe(&s, &tsf, &w, &region, window).unwrap();
        prop_assert!(!probe.points.is_empty());
        prop_assert!(probe.pass);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn integration_by_parts(seed in any::<u64>(), n in 1usize..=200) {
        let (s, mut rng) = instance(seed, n);
        let f = noise_field(&s, &mut rng);
        let g = noise_field(&s, &mut rng);
        let lhs = weighted_sum(&s, &f, &laplacian(&s, &g).unwrap());
        let rhs = weighted_sum(&s, &g, &laplacian(&s, &f).unwrap());
        let energy = -compensated_sum((0..n).map(|x| s.mu()[x] * gamma(&s, &f, &g).unwrap()[x]));
        let scale = s.operator_scale() * s.total_measure();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale);
        prop_assert!((lhs - energy).abs() <= 1e-12 * scale);
    }

    #[test]
    fn cauchy_schwarz(seed in any::<u64>(), n in 1usize..=200) {
        let (s, mut rng) = instance(seed, n);
        let f = noise_field(&s, &mut rng);
        let g = noise_field(&s, &mut rng);
        let (gf, gg, gfg) = (gamma_sq(&s, &f).unwrap(), gamma_sq(&s, &g).unwrap(), gamma(&s, &f, &g).unwrap());
        for x in 0..n {
            prop_assert!(gfg[x] * gfg[x] <= gf[x] * gg[x] * (1.0 + 1e-12) + 1e-300);
            prop_assert!(gf[x] >= 0.0);
        }
    }

    #[test]
    fn gamma2_forms_agree(seed in any::<u64>(), n in 1usize..=120) {
        let (s, mut rng) = instance(seed, n);
        let f = noise_field(&s, &mut rng);
        let a = gamma2(&s, &f).unwrap();
        let b = gamma2_expanded(&s, &f).unwrap();
        let scale = s.operator_scale().powi(2);
        for x in 0..n {
            prop_assert!((a[x] - b[x]).abs() <= 1e-11 * scale, "{} vs {}", a[x], b[x]);
        }
    }

    #[test]
    fn weighted_laplacian_with_zero_weight_is_laplacian(seed in any::<u64>(), n in 1usize..=200) {
        let (s, mut rng) = instance(seed, n);
        let f = noise_field(&s, &mut rng);
        let zero = s.constant_field(0.0);
        prop_assert_eq!(weighted_laplacian(&s, &f, &zero).unwrap(), laplacian(&s, &f).unwrap());
    }

    #[test]
    fn steklov_commutes_with_laplacian(seed in any::<u64>(), n in 1usize..=80, frames in 2usize..12, m in 1usize..4) {
        let (s, mut rng) = instance(seed, n);
        let dt = 0.05;
        let frames: Vec<_> = (0..frames.max(m + 1)).map(|_| noise_field(&s, &mut rng)).collect();
        let tsf = TimeSeriesField::new(frames, dt, rng.random_range(0.0..1.0)).unwrap();
        let window = m as f64 * dt;
        let l_avg = steklov_average(&tsf, window).unwrap().map_frames(|f| laplacian(&s, f)).unwrap();
        let avg_l = steklov_average(&tsf.map_frames(|f| laplacian(&s, f)).unwrap(), window).unwrap();
        prop_assert_eq!(l_avg.len(), avg_l.len());
        let scale = s.operator_scale();
        for k in 0..l_avg.len() {
            for x in 0..n {
                prop_assert!((l_avg.frame(k)[x] - avg_l.frame(k)[x]).abs() <= 1e-12 * scale);
            }
        }
    }
}

#[test]
fn steklov_of_linear_series_is_midpoint() {
    let mut rng = seeded(4);
    let s = random_connected_graph(30, &mut rng).unwrap();
    let base = noise_field(&s, &mut rng);
    let frames: Vec<_> = (0..10).map(|k| base.map(|v| v + k as f64)).collect();
    let tsf = TimeSeriesField::new(frames, 0.1, 0.0).unwrap();
    let avg = steklov_average(&tsf, 0.3).unwrap();
    for k in 0..avg.len() {
        for x in 0..s.vertex_count() {
            assert_relative_eq!(avg.frame(k)[x], base[x] + k as f64 + 2.0, epsilon = 1e-12);
        }
    }
}
