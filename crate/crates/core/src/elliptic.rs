//! Poisson solves, the local Yau gradient estimate and discrete maximum
//! principles.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::estimates::{calibrate_constant, evaluate_bound, yau_leading, BoundSpec};
use crate::gamma::{self, TimeSeriesField};
use crate::linalg::{compensated_sum, conjugate_gradient, CgOptions, CsrMatrix};
use crate::report::{InequalityReport, ReportPoint};
use crate::space::metric::ball_from_distance;
use crate::space::{graph_distance, DiscreteSpace, IndexSet, ScalarField};

/// Prescribed values `values[i]` at `vertices[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryValues {
    pub vertices: IndexSet,
    pub values: Vec<f64>,
}

impl BoundaryValues {
    /// The boundary vertices of `space` with values taken from `f`.
    pub fn trace_of(space: &DiscreteSpace, f: &ScalarField) -> Result<Self> {
        space.check_aligned(f)?;
        let vertices: Vec<usize> = (0..space.vertex_count()).filter(|&v| space.is_boundary(v)).collect();
        let values = vertices.iter().map(|&v| f[v]).collect();
        Ok(Self {
            vertices: IndexSet::from_strictly_increasing(vertices, space.vertex_count())?,
            values,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PoissonStats {
    pub iterations: usize,
    pub relative_residual: f64,
    /// `sup |Lf − g|` over free vertices.
    pub max_residual: f64,
}

/// Solves `Lf = g` at free vertices with `f` prescribed on `boundary`.
///
/// Without boundary values `g` must have zero μ-mean, and the zero-mean
/// solution is returned.
pub fn solve_poisson(space: &DiscreteSpace, g: &ScalarField, boundary: Option<&BoundaryValues>) -> Result<ScalarField> {
    solve_poisson_with_stats(space, g, boundary).map(|(f, _)| f)
}

pub fn solve_poisson_with_stats(
    space: &DiscreteSpace,
    g: &ScalarField,
    boundary: Option<&BoundaryValues>,
) -> Result<(ScalarField, PoissonStats)> {
    space.check_aligned(g)?;
    let n = space.vertex_count();
    let mu = space.mu();
    let mut fixed = vec![false; n];
    let mut f = vec![0.0; n];
    let boundary = boundary.filter(|b| !b.vertices.is_empty());
    if let Some(b) = boundary {
        if b.values.len() != b.vertices.len() {
            return Err(invalid("boundary", "one value per boundary vertex is required"));
        }
        for (v, &val) in b.vertices.iter().zip(&b.values) {
            space.check_vertex(v)?;
            if !val.is_finite() {
                return Err(Error::NonFiniteValue(v));
            }
            fixed[v] = true;
            f[v] = val;
        }
    } else {
        let mean = compensated_sum(g.values().iter().zip(mu).map(|(a, m)| a * m));
        let scale = compensated_sum(g.values().iter().zip(mu).map(|(a, m)| a.abs() * m));
        if mean.abs() > 1e-10 * scale {
            return Err(Error::UnbalancedRhs(mean / space.total_measure()));
        }
    }
    let free: Vec<usize> = (0..n).filter(|&v| !fixed[v]).collect();
    let mut local = vec![usize::MAX; n];
    for (i, &v) in free.iter().enumerate() {
        local[v] = i;
    }
    let mut triplets = Vec::new();
    let mut rhs = vec![0.0; free.len()];
    for (i, &v) in free.iter().enumerate() {
        let mut diag = 0.0;
        rhs[i] = -mu[v] * g[v];
        for nb in space.neighbors(v) {
            diag += nb.conductance;
            if fixed[nb.vertex] {
                rhs[i] += nb.conductance * f[nb.vertex];
            } else {
                triplets.push((i, local[nb.vertex], -nb.conductance));
            }
        }
        triplets.push((i, i, diag));
    }
    let a = CsrMatrix::from_triplets(free.len(), triplets);
    let mut x = vec![0.0; free.len()];
    let cg = conjugate_gradient(&a, &rhs, &mut x, CgOptions::default())?;
    for (i, &v) in free.iter().enumerate() {
        f[v] = x[i];
    }
    match boundary {
        None => {
            let mean = compensated_sum(f.iter().zip(mu).map(|(a, m)| a * m)) / space.total_measure();
            f.iter_mut().for_each(|v| *v -= mean);
        }
        Some(b) if g.max_abs() == 0.0 => {
            // harmonic: remove rounding excursions past the boundary range
            let lo = b.values.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = b.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            f.iter_mut().for_each(|v| *v = v.clamp(lo, hi));
        }
        Some(_) => {}
    }
    let lf = gamma::laplacian_values(space, &f);
    let max_residual = free.iter().map(|&v| (lf[v] - g[v]).abs()).fold(0.0, f64::max);
    Ok((
        space.field(f)?,
        PoissonStats {
            iterations: cg.iterations,
            relative_residual: cg.relative_residual,
            max_residual,
        },
    ))
}

/// `u = y` on a half-plane build, the equality case of the Yau estimate.
pub fn busemann_harmonic(space: &DiscreteSpace) -> Result<ScalarField> {
    if space.meta().model != "hyperbolic_halfplane" {
        return Err(Error::WrongSpaceType {
            expected: "hyperbolic_halfplane",
            found: space.meta().model.clone(),
        });
    }
    space.sample(|p| p[1])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct YauParams {
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "N")]
    pub n: f64,
    #[serde(rename = "R")]
    pub r: f64,
    pub beta: f64,
    pub center: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YauSweepRow {
    pub beta: f64,
    #[serde(rename = "R")]
    pub r: f64,
    pub measured_sup: f64,
    pub leading_term: f64,
    pub ratio: f64,
    #[serde(rename = "calibrated_C_N")]
    pub calibrated_c_n: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YauSummary {
    pub measured_sup: f64,
    pub leading_term: f64,
    pub ratio: f64,
    pub rhs: f64,
    #[serde(rename = "calibrated_C_N")]
    pub calibrated_c_n: f64,
    /// `sup |L(ln u) + Γ(ln u)|` over `B_R`.
    pub chain_defect: f64,
    /// `sup |Lu|` over `B_R`.
    pub harmonicity_defect: f64,
    pub sweep: Vec<YauSweepRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct YauOutcome {
    pub report: InequalityReport,
    pub summary: YauSummary,
}

fn yau_spec(p: &YauParams, c_n: Option<f64>) -> BoundSpec {
    BoundSpec::Yau19 {
        k: p.k,
        n: p.n,
        beta: p.beta,
        r: p.r,
        c_n,
    }
}

/// `√Γ(ln u)` at every vertex, after checking `u > 0` and that `B_{2R}`
/// avoids the boundary.
fn log_gradient_norm(space: &DiscreteSpace, u: &ScalarField, center: usize, r: f64) -> Result<(ScalarField, IndexSet, Vec<f64>)> {
    space.check_aligned(u)?;
    let dist = graph_distance(space, center)?;
    let outer = ball_from_distance(&dist, 2.0 * r);
    if outer.iter().any(|v| space.is_boundary(v)) {
        return Err(Error::BallExceedsSpace { center, radius: 2.0 * r });
    }
    if let Some(v) = outer.iter().find(|&v| !(u[v] > 0.0)) {
        return Err(Error::NonPositive {
            vertex: v,
            frame: 0,
            value: u[v],
        });
    }
    // ln u is needed on B_R and its neighbours; u may vanish elsewhere
    let logs: Vec<f64> = (0..space.vertex_count())
        .map(|v| if u[v] > 0.0 { u[v].ln() } else { f64::NAN })
        .collect();
    let ball_r = ball_from_distance(&dist, r);
    for x in ball_r.iter() {
        if space.neighbors(x).iter().any(|nb| logs[nb.vertex].is_nan()) {
            return Err(Error::NonPositive {
                vertex: x,
                frame: 0,
                value: u[x],
            });
        }
    }
    let g = gamma::gamma_values(space, &logs, &logs);
    let norm: Vec<f64> = g.iter().map(|v| if v.is_nan() { 0.0 } else { v.sqrt() }).collect();
    Ok((ScalarField::from_parts(norm, space.id()), ball_r, logs))
}

/// Checks `sup_{B_R} √Γ(ln u)` against the local Yau bound, calibrating
/// `C(N)` when it is not supplied, and tabulates the β/R sweep.
pub fn yau_report(
    space: &DiscreteSpace,
    u: &ScalarField,
    params: &YauParams,
    c_n: Option<f64>,
    betas: &[f64],
    radii: &[f64],
) -> Result<YauOutcome> {
    if !(params.n > 1.0) {
        return Err(invalid("N", "must exceed 1"));
    }
    let (norm, region, logs) = log_gradient_norm(space, u, params.center, params.r)?;
    let measured_sup = norm.sup_over(&region);
    let spec = yau_spec(params, c_n);
    let calibrated = calibrate_constant(&spec, measured_sup)?.value().unwrap_or(0.0);
    let rhs = evaluate_bound(&spec.with_constant(c_n.unwrap_or(calibrated)))?;
    let points = region.iter().map(|x| ReportPoint::new(x, None, norm[x], rhs)).collect();
    let mut report = InequalityReport::new("yau", points, 1e-12 * rhs.abs())
        .with_param("K", params.k)
        .with_param("N", params.n)
        .with_param("R", params.r)
        .with_param("beta", params.beta)
        .with_h(space.meta().h);
    report.calibrated_constant = Some(calibrated);

    let lf = gamma::laplacian_values(space, &logs);
    let lu = gamma::laplacian_values(space, u.values());
    let chain_defect = region
        .iter()
        .map(|x| (lf[x] + norm[x] * norm[x]).abs())
        .fold(0.0, f64::max);
    let harmonicity_defect = region.iter().map(|x| lu[x].abs()).fold(0.0, f64::max);
    let leading = yau_leading(params.n, params.k, params.beta);
    let sweep = yau_sweep(space, u, params, betas, radii)?;
    Ok(YauOutcome {
        report,
        summary: YauSummary {
            measured_sup,
            leading_term: leading,
            ratio: measured_sup / leading,
            rhs,
            calibrated_c_n: calibrated,
            chain_defect,
            harmonicity_defect,
            sweep,
        },
    })
}

/// Measured sup against the leading term over a grid of `(β, R)`. Rows are
/// ordered by `R` then by decreasing `β`.
pub fn yau_sweep(
    space: &DiscreteSpace,
    u: &ScalarField,
    params: &YauParams,
    betas: &[f64],
    radii: &[f64],
) -> Result<Vec<YauSweepRow>> {
    let mut rows = Vec::new();
    let mut radii = radii.to_vec();
    radii.sort_by(f64::total_cmp);
    let mut betas = betas.to_vec();
    betas.sort_by(|a, b| b.total_cmp(a));
    for &r in &radii {
        let (norm, region, _) = log_gradient_norm(space, u, params.center, r)?;
        let measured = norm.sup_over(&region);
        for &beta in &betas {
            let p = YauParams { r, beta, ..*params };
            let leading = yau_leading(p.n, p.k, beta);
            let c = calibrate_constant(&yau_spec(&p, None), measured)?.value().unwrap_or(0.0);
            rows.push(YauSweepRow {
                beta,
                r,
                measured_sup: measured,
                leading_term: leading,
                ratio: measured / leading,
                calibrated_c_n: c,
            });
        }
    }
    Ok(rows)
}

/// CSV `beta,R,measured,leading,ratio,calibrated_C_N`.
pub fn yau_sweep_csv(rows: &[YauSweepRow]) -> String {
    let mut out = String::from("beta,R,measured,leading,ratio,calibrated_C_N\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.beta, r.r, r.measured_sup, r.leading_term, r.ratio, r.calibrated_c_n
        ));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbePoint {
    pub vertex: usize,
    pub frame: Option<usize>,
    pub value: f64,
    pub lw: f64,
    pub lf: f64,
    pub gamma_fw: f64,
    /// `L_w f − Lf − Γ(f, w)`.
    pub defect: f64,
    /// Backward difference quotient in time (parabolic probe only).
    pub dt_f: Option<f64>,
    /// `L_w f`, minus `∂_t f` in the parabolic case; must be ≤ 0.
    pub quantity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxPrincipleProbe {
    pub points: Vec<ProbePoint>,
    pub pass: bool,
}

/// Vertices adjacent to `region` but outside it.
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

fn check_region(space: &DiscreteSpace, region: &IndexSet) -> Result<()> {
    if region.is_empty() {
        return Err(invalid("region", "must not be empty"));
    }
    if let Some(v) = region.iter().find(|&v| v >= space.vertex_count()) {
        return Err(Error::VertexOutOfRange {
            vertex: v,
            count: space.vertex_count(),
        });
    }
    if let Some(v) = region.iter().find(|&v| space.is_boundary(v)) {
        return Err(Error::RegionTouchesBoundary(v));
    }
    Ok(())
}

fn probe_point(space: &DiscreteSpace, f: &[f64], w: &[f64], x: usize, frame: Option<usize>, dt_f: Option<f64>) -> ProbePoint {
    let lw = gamma::weighted_laplacian_at(space, f, w, x);
    let fx = f[x];
    let mut lf = 0.0;
    let mut gfw = 0.0;
    for nb in space.neighbors(x) {
        lf += nb.conductance * (f[nb.vertex] - fx);
        gfw += nb.conductance * (f[nb.vertex] - fx) * (w[nb.vertex] - w[x]);
    }
    lf /= space.mu()[x];
    gfw /= 2.0 * space.mu()[x];
    let quantity = match dt_f {
        Some(d) => lw - d,
        None => lw,
    };
    ProbePoint {
        vertex: x,
        frame,
        value: fx,
        lw,
        lf,
        gamma_fw: gfw,
        defect: lw - lf - gfw,
        dt_f,
        quantity,
    }
}

/// At every maximizer of `f` over `region`, `L_w f ≤ 0`.
///
/// The maximum over `region` must be at least the maximum over its
/// neighbours outside it, and `region` must avoid boundary vertices.
pub fn max_principle_probe(
    space: &DiscreteSpace,
    f: &ScalarField,
    w: &ScalarField,
    region: &IndexSet,
) -> Result<MaxPrincipleProbe> {
    space.check_aligned(f)?;
    space.check_aligned(w)?;
    check_region(space, region)?;
    let inside = f.sup_over(region);
    let outside = shell(space, region).iter().map(|&y| f[y]).fold(f64::NEG_INFINITY, f64::max);
    if outside > inside {
        return Err(Error::MaximumNotInRegion { inside, outside });
    }
    let points: Vec<ProbePoint> = region
        .iter()
        .filter(|&x| f[x] == inside)
        .map(|x| probe_point(space, f.values(), w.values(), x, None, None))
        .collect();
    let pass = points.iter().all(|p| p.quantity <= 0.0);
    Ok(MaxPrincipleProbe { points, pass })
}

/// At every space-time maximizer `(x, k)` of `f` over `region × (δ, T]`,
/// `L_w f − (f_k − f_{k−1})/dt ≤ 0`.
///
/// The maximum must dominate `f` on the neighbouring shell within the window
/// and on `region` at the frame preceding the window.
pub fn parabolic_max_probe(
    space: &DiscreteSpace,
    tsf: &TimeSeriesField,
    w: &ScalarField,
    region: &IndexSet,
    window: (f64, f64),
) -> Result<MaxPrincipleProbe> {
    tsf.check_space(space)?;
    space.check_aligned(w)?;
    check_region(space, region)?;
    let (delta, t_end) = window;
    if !(delta < t_end) {
        return Err(invalid("window", format!("need δ < T, got ({delta}, {t_end}]")));
    }
    let slack = 1e-9 * tsf.dt();
    if t_end > tsf.final_time() + slack || delta < tsf.t0() - slack {
        return Err(invalid("window", "window extends beyond the series"));
    }
    let frames: Vec<usize> = (1..tsf.len())
        .filter(|&k| {
            let t = tsf.time(k);
            t > delta + slack && t <= t_end + slack
        })
        .collect();
    let Some(&first) = frames.first() else {
        return Err(Error::EmptyWindow);
    };
    let ring = shell(space, region);
    let inside = frames
        .iter()
        .map(|&k| tsf.frame(k).sup_over(region))
        .fold(f64::NEG_INFINITY, f64::max);
    let outside = frames
        .iter()
        .flat_map(|&k| ring.iter().map(move |&y| tsf.frame(k)[y]))
        .chain(region.iter().map(|x| tsf.frame(first - 1)[x]))
        .fold(f64::NEG_INFINITY, f64::max);
    if outside > inside {
        return Err(Error::MaximumNotInRegion { inside, outside });
    }
    let mut points = Vec::new();
    for &k in &frames {
        let f = tsf.frame(k).values();
        let prev = tsf.frame(k - 1).values();
        for x in region.iter().filter(|&x| f[x] == inside) {
            let dt_f = (f[x] - prev[x]) / tsf.dt();
            points.push(probe_point(space, f, w.values(), x, Some(k), Some(dt_f)));
        }
    }
    let pass = points.iter().all(|p| p.quantity <= 0.0);
    Ok(MaxPrincipleProbe { points, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{build_grid, build_hyperbolic_halfplane};

    #[test]
    fn constant_boundary_gives_constant() {
        let s = build_grid(2, 1.0, 0.1, false).unwrap();
        let b = BoundaryValues::trace_of(&s, &s.constant_field(3.0)).unwrap();
        let f = solve_poisson(&s, &s.constant_field(0.0), Some(&b)).unwrap();
        assert!(f.values().iter().all(|&v| (v - 3.0).abs() < 1e-12));
    }

    #[test]
    fn path_interpolates_linearly() {
        let s = build_grid(1, 1.0, 0.1, false).unwrap();
        let b = BoundaryValues {
            vertices: IndexSet::new(vec![0, 10], 11).unwrap(),
            values: vec![0.0, 1.0],
        };
        let f = solve_poisson(&s, &s.constant_field(0.0), Some(&b)).unwrap();
        for v in 0..11 {
            assert!((f[v] - v as f64 / 10.0).abs() < 1e-12);
        }
    }

    #[test]
    fn neumann_needs_balance() {
        let s = build_grid(1, 1.0, 0.1, true).unwrap();
        assert!(matches!(
            solve_poisson(&s, &s.constant_field(1.0), None),
            Err(Error::UnbalancedRhs(_))
        ));
        let g = s.sample(|p| (2.0 * std::f64::consts::PI * p[0]).cos()).unwrap();
        let (f, st) = solve_poisson_with_stats(&s, &g, None).unwrap();
        assert!(st.max_residual < 1e-9);
        assert!(s.mass(&f).unwrap().abs() < 1e-12);
    }

    #[test]
    fn busemann_function() {
        let s = build_hyperbolic_halfplane((-0.5, 0.5), (0.5, 1.5), 0.05).unwrap();
        let u = busemann_harmonic(&s).unwrap();
        let lu = gamma::laplacian(&s, &u).unwrap();
        for v in s.interior().iter() {
            assert!(lu[v].abs() < 1e-9);
        }
        let b = BoundaryValues::trace_of(&s, &u).unwrap();
        let re = solve_poisson(&s, &s.constant_field(0.0), Some(&b)).unwrap();
        assert!(re.values().iter().zip(u.values()).all(|(a, b)| (a - b).abs() < 1e-6));
        assert!(busemann_harmonic(&build_grid(1, 1.0, 0.5, false).unwrap()).is_err());
    }

    #[test]
    fn yau_on_small_halfplane() {
        let s = build_hyperbolic_halfplane((-1.2, 1.2), (0.3, 3.5), 0.05).unwrap();
        let coords = s.coords().unwrap();
        let center = (0..s.vertex_count())
            .min_by(|&a, &b| {
                let d = |v: usize| coords[v][0].hypot(coords[v][1] - 1.0);
                d(a).total_cmp(&d(b))
            })
            .unwrap();
        let u = busemann_harmonic(&s).unwrap();
        let p = YauParams {
            k: 1.0,
            n: 2.0,
            r: 0.5,
            beta: 0.5,
            center,
        };
        let out = yau_report(&s, &u, &p, None, &[0.2, 0.5], &[0.25, 0.5]).unwrap();
        assert!((out.summary.measured_sup - 1.0).abs() < 0.02);
        assert_eq!(out.summary.calibrated_c_n, 0.0);
        assert!(out.report.passed());
        assert_eq!(out.summary.sweep.len(), 4);
        let too_big = YauParams { r: 2.0, ..p };
        assert!(matches!(
            yau_report(&s, &u, &too_big, None, &[], &[]),
            Err(Error::BallExceedsSpace { .. })
        ));
    }

    #[test]
    fn probes() {
        let s = build_grid(1, 1.0, 0.1, false).unwrap();
        let f = s.sample(|p| -(p[0] * p[0])).unwrap();
        let w = s.sample(|p| p[0].sin()).unwrap();
        let region = IndexSet::new((2..9).collect(), 11).unwrap();
        let probe = max_principle_probe(&s, &f, &w, &region).unwrap();
        assert!(probe.pass);
        assert_eq!(probe.points.len(), 1);
        assert_eq!(probe.points[0].vertex, 5);
        let c = max_principle_probe(&s, &s.constant_field(1.0), &w, &region).unwrap();
        assert_eq!(c.points.len(), 7);
        assert!(c.points.iter().all(|p| p.lw == 0.0));
        let edge = IndexSet::new(vec![0, 1], 11).unwrap();
        assert!(matches!(
            max_principle_probe(&s, &f, &w, &edge),
            Err(Error::RegionTouchesBoundary(0))
        ));
        let left = IndexSet::new(vec![1, 2], 11).unwrap();
        assert!(matches!(
            max_principle_probe(&s, &f, &w, &left),
            Err(Error::MaximumNotInRegion { .. })
        ));
    }

    #[test]
    fn parabolic_probe_growing_bump() {
        let s = build_grid(1, 1.0, 0.1, false).unwrap();
        let frames: Vec<ScalarField> = (0..5)
            .map(|k| s.sample(|p| (1.0 + k as f64) * (1.0 - p[0] * p[0])).unwrap())
            .collect();
        let tsf = TimeSeriesField::new(frames, 0.1, 0.0).unwrap();
        let region = IndexSet::new((2..9).collect(), 11).unwrap();
        let w = s.constant_field(0.0);
        let probe = parabolic_max_probe(&s, &tsf, &w, &region, (0.05, 0.4)).unwrap();
        assert!(probe.pass);
        let p = probe.points[0];
        assert_eq!(p.frame, Some(4));
        assert!(p.dt_f.unwrap() >= 0.0 && p.lw <= 0.0);
        assert!(matches!(
            parabolic_max_probe(&s, &tsf, &w, &region, (0.35, 0.38)),
            Err(Error::EmptyWindow)
        ));
    }
}
