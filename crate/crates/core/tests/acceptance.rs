//! Acceptance criteria, one PASS/FAIL line each. Runs as a plain binary so
//! the lines print in order; exits non-zero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use gammalab::curvature::curvature_at;
use gammalab::elliptic::{busemann_harmonic, max_principle_probe, parabolic_max_probe, yau_report, YauParams};
use gammalab::estimates::{convergence_sweep, evaluate_bound, yau_leading, BoundSpec, SweepAxis, SweepSample};
use gammalab::gamma::{
    bochner_margin, chain_defect, gamma2, gamma_sq, kato_check, laplacian, leibniz_defect, leibniz_scale,
    steklov_average, Exp, Square, EXACT_TOL,
};
use gammalab::heat::{
    heat_kernel, li_yau_report, log_gradient_quantity, sample_gaussian_series, solve_heat, steklov_time_defect,
    Dirichlet, EstimateParams,
};
use gammalab::sampling::{
    admissible_field, admissible_series, noise_field, random_connected_graph, random_region, seeded, smooth_field, unit_gradient,
    Rng,
};
use gammalab::space::{build_grid, build_hyperbolic_halfplane, Edge, SpaceMeta};
use gammalab::{DiscreteSpace, TimeSeriesField};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: gammalab::Error) -> String {
    e.to_string()
}

fn nearest(space: &DiscreteSpace, target: &[f64]) -> usize {
    let coords = space.coords().expect("coordinates");
    let d2 = |c: &[f64]| c.iter().zip(target).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    (0..space.vertex_count())
        .min_by(|&a, &b| d2(&coords[a]).total_cmp(&d2(&coords[b])))
        .unwrap()
}

/// Leibniz, Kato and both maximum-principle probes over 1000 seeded random
/// connected graphs with at most 200 vertices.
fn exact_identities() -> Check {
    const TRIALS: usize = 1000;
    let mut rng = seeded(20_240_601);
    let (mut leibniz_worst, mut kato_min, mut ell_max, mut par_max) = (0.0f64, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for trial in 0..TRIALS {
        let n = rng.random_range(1..=200);
        let s = random_connected_graph(n, &mut rng).map_err(err)?;
        let f = noise_field(&s, &mut rng);
        let g = noise_field(&s, &mut rng);
        let w = noise_field(&s, &mut rng);
        let d = leibniz_defect(&s, &f, &g).map_err(err)?;
        let rel = d.max_abs() / leibniz_scale(&s, &f, &g);
        leibniz_worst = leibniz_worst.max(rel);
        ensure(rel <= EXACT_TOL, || format!("trial {trial}: Leibniz defect {rel:e} relative"))?;

        let kato = kato_check(&s, &f, &w).map_err(err)?;
        kato_min = kato_min.min(kato.min_margin);
        ensure(kato.passed(), || format!("trial {trial}: Kato margin {:e}", kato.min_margin))?;

        let region = random_region(&s, &mut rng).map_err(err)?;
        let fe = admissible_field(&s, &region, &mut rng);
        let probe = max_principle_probe(&s, &fe, &w, &region).map_err(err)?;
        ell_max = probe.points.iter().map(|p| p.quantity).fold(ell_max, f64::max);
        ensure(probe.pass, || format!("trial {trial}: elliptic probe failed"))?;

        let tsf = admissible_series(&s, &region, 6, 0.1, (0.15, 0.5), &mut rng).map_err(err)?;
        let probe = parabolic_max_probe(&s, &tsf, &w, &region, (0.15, 0.5)).map_err(err)?;
        par_max = probe.points.iter().map(|p| p.quantity).fold(par_max, f64::max);
        ensure(probe.pass, || format!("trial {trial}: parabolic probe failed"))?;
    }
    Ok(format!(
        "{TRIALS} graphs: Leibniz ≤ {leibniz_worst:.1e} rel, Kato min margin {kato_min:.1e}, max L_w f at maxima {ell_max:.2e}, parabolic {par_max:.2e}"
    ))
}

fn two_point() -> DiscreteSpace {
    DiscreteSpace::new(
        vec![1.0, 1.0],
        vec![Edge {
            i: 0,
            j: 1,
            conductance: 1.0,
            length: 1.0,
        }],
        None,
        vec![false, false],
        SpaceMeta {
            model: "two_point".into(),
            n_geo: 0,
            k_ref: None,
            n_ref: None,
            h: 1.0,
        },
    )
    .unwrap()
}

/// `min (Γ₂ − (Lf)²/N)/Γ` at `x` over random test functions on the 2-ball.
fn sampled_curvature(s: &DiscreteSpace, x: usize, n: f64, samples: usize, seed: u64) -> f64 {
    let mut rng = seeded(seed);
    let inv_n = if n.is_infinite() { 0.0 } else { 1.0 / n };
    let mut best = f64::INFINITY;
    for _ in 0..samples {
        let values = (0..s.vertex_count()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let f = s.field(values).unwrap();
        let g = gamma_sq(s, &f).unwrap()[x];
        if g < 1e-12 {
            continue;
        }
        let l = laplacian(s, &f).unwrap()[x];
        best = best.min((gamma2(s, &f).unwrap()[x] - l * l * inv_n) / g);
    }
    best
}

fn two_point_curvature() -> Check {
    let s = two_point();
    let k2 = curvature_at(&s, 0, 2.0).map_err(err)?.k_star;
    let kinf = curvature_at(&s, 0, f64::INFINITY).map_err(err)?.k_star;
    ensure((k2 - 1.0).abs() <= 1e-9, || format!("k*(N=2) = {k2}"))?;
    ensure((kinf - 2.0).abs() <= 1e-9, || format!("k*(N=∞) = {kinf}"))?;
    let o2 = sampled_curvature(&s, 0, 2.0, 10_000, 1);
    let oinf = sampled_curvature(&s, 0, f64::INFINITY, 10_000, 2);
    ensure((o2 - k2).abs() <= 1e-6 && (oinf - kinf).abs() <= 1e-6, || {
        format!("oracle {o2}, {oinf} vs eigensolver {k2}, {kinf}")
    })?;
    Ok(format!("k*(2) = {k2:.12}, k*(∞) = {kinf:.12}; oracle {o2:.9}, {oinf:.9}"))
}

/// Sampled Gaussian: `Γ(ln u) − ∂_t ln u` against `n/(2t)`, with the time
/// derivative from a short backward step.
fn gaussian_sup(space: &DiscreteSpace, dim: f64, t: f64) -> Result<f64, String> {
    let delta = 1e-5;
    let tsf = sample_gaussian_series(space, t - delta, delta, 2).map_err(err)?;
    let lg = log_gradient_quantity(space, &tsf, 1.0).map_err(err)?;
    let sup = lg.q.frame(0).sup_over(&space.all_vertices());
    let exact = dim / (2.0 * t);
    ensure((sup - exact).abs() <= 0.05 * exact, || format!("dim {dim}, t = {t}: sup {sup} vs {exact}"))?;
    Ok(sup / exact)
}

fn torus_li_yau(dim: usize) -> Result<String, String> {
    let h = 0.05;
    let side = 4.0;
    let (alpha, t_final) = (1.1, 1.0);
    let s = build_grid(dim, side, h, true).map_err(err)?;
    let center = nearest(&s, &vec![0.0; dim]);
    let tsf = heat_kernel(&s, center, t_final, h * h / 2.0).map_err(err)?;
    let n = dim as f64;
    let params = EstimateParams {
        k: 0.0,
        n,
        alpha,
        beta: 0.5,
        gamma_frac: 0.5,
        t: t_final,
        r: side * n,
        center,
    };
    let out = li_yau_report(&s, &tsf, &params, None).map_err(err)?;
    let slack: Vec<_> = out.report.points.iter().filter(|p| p.lhs > 1.10 * p.rhs).collect();
    ensure(slack.is_empty(), || format!("dim {dim}: {} points exceed 1.1·Nα²/(2t)", slack.len()))?;
    let last = tsf.len() - 1;
    let sup_t: f64 = out
        .report
        .points
        .iter()
        .filter(|p| p.frame == Some(last))
        .map(|p| p.lhs)
        .fold(f64::NEG_INFINITY, f64::max);
    let bound = n * alpha * alpha / (2.0 * t_final);
    ensure(sup_t <= 1.10 * bound, || format!("dim {dim}: sup Q(T) = {sup_t} > 1.1·{bound}"))?;
    Ok(format!("torus {dim}D sup Q(T) = {sup_t:.4} ≤ 1.1·{bound:.4}"))
}

fn li_yau_sharpness() -> Check {
    let mut ratios = Vec::new();
    for dim in [1usize, 2] {
        let s = build_grid(dim, 4.0, 0.05, false).map_err(err)?;
        for t in [0.25, 0.375, 0.5, 0.75, 1.0] {
            ratios.push(gaussian_sup(&s, dim as f64, t)?);
        }
    }
    let spread = ratios.iter().map(|r| (r - 1.0).abs()).fold(0.0, f64::max);
    let t1 = torus_li_yau(1)?;
    let t2 = torus_li_yau(2)?;
    Ok(format!("Gaussian sup within {:.2}% of n/(2t); {t1}; {t2}", 100.0 * spread))
}

fn yau_sharpness() -> Check {
    let h = 0.02;
    let s = build_hyperbolic_halfplane((-3.7, 3.7), (0.12, 7.5), h).map_err(err)?;
    let center = nearest(&s, &[0.0, 1.0]);
    let u = busemann_harmonic(&s).map_err(err)?;
    let betas: Vec<f64> = (1..=9).map(|i| f64::from(i) / 10.0).collect();
    let base = YauParams {
        k: 1.0,
        n: 2.0,
        r: 1.0,
        beta: 0.1,
        center,
    };
    let first = yau_report(&s, &u, &base, None, &betas, &[base.r]).map_err(err)?;
    let measured = first.summary.measured_sup;
    ensure((measured - 1.0).abs() <= 0.02, || format!("sup √Γ(ln u) over B_R = {measured}"))?;
    for &beta in &betas {
        let p = YauParams { beta, ..base };
        let out = yau_report(&s, &u, &p, None, &[], &[]).map_err(err)?;
        ensure(out.summary.calibrated_c_n >= 0.0 && out.report.passed(), || {
            format!("β = {beta}: C(N) = {}, violations {}", out.summary.calibrated_c_n, out.report.violation_count)
        })?;
    }
    let row = first
        .summary
        .sweep
        .iter()
        .find(|r| (r.beta - 0.1).abs() < 1e-12)
        .ok_or("missing β = 0.1 row")?;
    ensure((0.90..=1.05).contains(&row.ratio), || format!("ratio at β = 0.1: {}", row.ratio))?;
    Ok(format!(
        "{} vertices, sup √Γ(ln y) = {measured:.5}, ratio at β=0.1 = {:.4}, C(N) ≥ 0 for all β",
        s.vertex_count(),
        row.ratio
    ))
}

fn chain_rule() -> Check {
    let sample = |h: f64| -> gammalab::Result<SweepSample> {
        let s = build_grid(2, 2.0, h, false)?;
        let f = s.sample(|p| p[0].sin() * p[1].cos())?;
        let d = chain_defect(&s, &f, &Exp)?;
        let interior = s.interior_band(1);
        Ok(SweepSample {
            measured: d.sup_over(&interior).max(-d.inf_over(&interior)),
            bound: f64::NAN,
        })
    };
    let sweep = convergence_sweep(SweepAxis::H, &[0.2, 0.1, 0.05], Some(0.0), sample).map_err(err)?;
    ensure(sweep.fitted_order >= 0.9, || format!("fitted order {}", sweep.fitted_order))?;
    let s = build_grid(2, 2.0, 0.05, false).map_err(err)?;
    let f = s.sample(|p| p[0].sin() * p[1].cos()).map_err(err)?;
    let sq = chain_defect(&s, &f, &Square).map_err(err)?.max_abs();
    ensure(sq <= 1e-12, || format!("s² defect {sq:e}"))?;
    let defects: Vec<String> = sweep.points.iter().map(|p| format!("{:.2e}", p.measured)).collect();
    Ok(format!(
        "exp defects {} (h = 0.05, 0.1, 0.2), order {:.3}; s² defect {sq:.1e}",
        defects.join(", "),
        sweep.fitted_order
    ))
}

/// Worst Bochner margin with `K = −1`, `N = 2` over 20 smooth fields scaled
/// to `sup Γ(f) = 1` on the band two hops inside the boundary.
fn bochner_band(h: f64) -> Result<f64, String> {
    let s = build_hyperbolic_halfplane((-1.0, 1.0), (0.5, 2.0), h).map_err(err)?;
    let band = s.interior_band(2);
    let mut rng = seeded(6);
    let mut worst = f64::INFINITY;
    for _ in 0..20 {
        let f = unit_gradient(&s, &smooth_field(&s, &mut rng).map_err(err)?, &band).map_err(err)?;
        let r = bochner_margin(&s, &f, -1.0, 2.0).map_err(err)?.restricted(&band);
        worst = worst.min(r.min_margin);
    }
    Ok(worst)
}

fn bochner() -> Check {
    let coarse = bochner_band(0.05)?;
    let fine = bochner_band(0.025)?;
    ensure(coarse >= -0.1 && fine >= -0.05, || format!("min margins {coarse:e} (h=0.05), {fine:e} (h=0.025)"))?;
    let trend = if coarse < 0.0 && fine < 0.0 { format!(", ratio {:.2}", fine / coarse) } else { String::new() };
    Ok(format!("min margin {coarse:.3e} at h=0.05, {fine:.3e} at h=0.025{trend}"))
}

fn steklov() -> Check {
    let s = build_grid(2, 1.0, 0.05, false).map_err(err)?;
    let mut rng = seeded(5);
    let frames: Vec<_> = (0..12).map(|_| noise_field(&s, &mut rng)).collect();
    let tsf = TimeSeriesField::new(frames, 0.01, 0.0).map_err(err)?;
    let window = 0.04;
    let avg = steklov_average(&tsf, window).map_err(err)?;
    let l_avg = avg.map_frames(|f| laplacian(&s, f)).map_err(err)?;
    let avg_l = steklov_average(&tsf.map_frames(|f| laplacian(&s, f)).map_err(err)?, window).map_err(err)?;
    let mut comm = 0.0f64;
    let mut scale = 0.0f64;
    for k in 0..l_avg.len() {
        for x in 0..s.vertex_count() {
            comm = comm.max((l_avg.frame(k)[x] - avg_l.frame(k)[x]).abs());
            scale = scale.max(avg_l.frame(k)[x].abs());
        }
    }
    ensure(comm <= 1e-12 * scale, || format!("commutation defect {comm:e} at scale {scale:e}"))?;

    let shifted = steklov_average(&tsf, tsf.dt()).map_err(err)?;
    let shift_ok = (0..shifted.len()).all(|k| shifted.frame(k) == tsf.frame(k + 1));
    ensure(shift_ok, || "window = dt is not the forward shift".into())?;

    let u0 = s.sample(|p| 1.0 + (3.0 * p[0]).sin() * (2.0 * p[1]).cos() * 0.5).map_err(err)?;
    let bc = Dirichlet::fixed_boundary(&s, &u0).map_err(err)?;
    let heat = solve_heat(&s, &u0, 0.05, 0.001, Some(&bc)).map_err(err)?;
    let (defect, lscale) = steklov_time_defect(&s, &heat, 0.005, &s.interior()).map_err(err)?;
    ensure(defect <= 1e-9 * lscale, || format!("time-derivative identity defect {defect:e} at scale {lscale:e}"))?;
    Ok(format!(
        "commutation {:.1e} rel; shift exact; ∂_t u_h = L u_h to {:.1e} rel",
        comm / scale,
        defect / lscale
    ))
}

fn bound_arithmetic() -> Check {
    let cor = evaluate_bound(&BoundSpec::LiYauGlobal {
        k: 0.0,
        n: 2.0,
        alpha: 2.0,
        t: 1.0,
        weak: false,
    })
    .map_err(err)?;
    let classical = evaluate_bound(&BoundSpec::Classical12 {
        n: 3.0,
        k: 1.0,
        alpha: 2.0,
        t: 1.0,
    })
    .map_err(err)?;
    let leading = yau_leading(2.0, 1.0, 1.0 / 3.0);
    ensure(cor == 4.0, || format!("global Li-Yau = {cor}"))?;
    ensure(classical == 12.0, || format!("classical global = {classical}"))?;
    ensure((leading - std::f64::consts::SQRT_2).abs() <= 2.0 * f64::EPSILON, || format!("Yau leading = {leading}"))?;
    Ok(format!("{cor}, {classical}, {leading:.16}"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 8] = [
        ("exact discrete identities", exact_identities),
        ("two-point curvature", two_point_curvature),
        ("Gaussian / Li-Yau sharpness", li_yau_sharpness),
        ("Yau sharpness on the half-plane", yau_sharpness),
        ("chain-rule defect convergence", chain_rule),
        ("Bochner margin on the hyperbolic band", bochner),
        ("Steklov averages", steklov),
        ("bound arithmetic", bound_arithmetic),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {}: PASS  {name} ({secs:.1}s): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL  {name} ({secs:.1}s): {why}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
