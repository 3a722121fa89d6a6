//! Heat flow on a discrete space and the Li-Yau quantity.
//!
//! Time stepping is implicit Euler, `(M + dt·S) u^{k+1} = M u^k`, where
//! `M = diag(μ)` and `S` is the stiffness matrix (`S u = −μ·Lu`). The system
//! matrix is an M-matrix, so nonnegative data stay nonnegative.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::estimates::{calibrate_constant, evaluate_bound, li_yau_prefactor, BoundSpec};
use crate::gamma::{self, TimeSeriesField};
use crate::linalg::{conjugate_gradient, CgOptions, CsrMatrix};
use crate::report::{Excluded, InequalityReport, ReportPoint};
use crate::space::{graph_distance, DiscreteSpace, IndexSet, ScalarField};

/// Parameters of the local and global Li-Yau estimates on an RCD*(−K, N)
/// space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateParams {
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "N")]
    pub n: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma_frac: f64,
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(rename = "R")]
    pub r: f64,
    pub center: usize,
}

impl EstimateParams {
    pub fn validate(&self, space: &DiscreteSpace) -> Result<()> {
        if !(self.k >= 0.0 && self.k.is_finite()) {
            return Err(invalid("K", "must be nonnegative"));
        }
        if !(self.n >= 1.0 && self.n.is_finite()) {
            return Err(invalid("N", "must be finite and at least 1"));
        }
        if !(self.alpha > 1.0 && self.alpha.is_finite()) {
            return Err(invalid("alpha", "must exceed 1"));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(invalid("beta", "must lie in (0, 1)"));
        }
        if !(self.gamma_frac > 0.0 && self.gamma_frac < 1.0) {
            return Err(invalid("gamma_frac", "must lie in (0, 1)"));
        }
        if !(self.t > 0.0 && self.t.is_finite()) {
            return Err(invalid("T", "must be positive"));
        }
        if !(self.r > 0.0 && self.r.is_finite()) {
            return Err(invalid("R", "must be positive"));
        }
        space.check_vertex(self.center)
    }

    /// `max{1, ½ + KT/(2(α−1))}`.
    pub fn b0(&self) -> f64 {
        li_yau_prefactor(self.k, self.t, self.alpha)
    }
}

/// Prescribed values on a vertex set. `values` holds one row per frame, or a
/// single row used for every frame. Values apply from frame 1 on; frame 0 is
/// the initial datum.
#[derive(Debug, Clone, PartialEq)]
pub struct Dirichlet {
    pub vertices: IndexSet,
    pub values: Vec<Vec<f64>>,
}

impl Dirichlet {
    /// Holds the boundary vertices of `space` at the values of `u0`.
    pub fn fixed_boundary(space: &DiscreteSpace, u0: &ScalarField) -> Result<Self> {
        let vertices: Vec<usize> = (0..space.vertex_count()).filter(|&v| space.is_boundary(v)).collect();
        let values = vec![vertices.iter().map(|&v| u0[v]).collect()];
        Ok(Self {
            vertices: IndexSet::from_strictly_increasing(vertices, space.vertex_count())?,
            values,
        })
    }

    fn row(&self, frame: usize) -> &[f64] {
        if self.values.len() == 1 {
            &self.values[0]
        } else {
            &self.values[frame]
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HeatStats {
    pub steps: usize,
    pub cg_iterations: usize,
    pub max_relative_residual: f64,
    /// Steps where the Krylov solution had negative entries and was repaired
    /// by Gauss-Seidel from the clamped iterate.
    pub repaired_steps: usize,
}

const REPAIR_TOL: f64 = 1e-12;
const REPAIR_MAX_SWEEPS: usize = 100_000;

fn step_count(t_final: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(invalid("dt", "must be positive"));
    }
    if !(t_final >= dt * (1.0 - 1e-9)) || !t_final.is_finite() {
        return Err(invalid("T", format!("T = {t_final} must be at least dt = {dt}")));
    }
    let n = (t_final / dt).round();
    if (n * dt - t_final).abs() > 1e-6 * t_final {
        return Err(invalid("dt", format!("T = {t_final} is not a multiple of dt = {dt}")));
    }
    Ok(n as usize)
}

/// Implicit-Euler heat flow from `u0` over `[0, T]`, frames at `k·dt`.
pub fn solve_heat(
    space: &DiscreteSpace,
    u0: &ScalarField,
    t_final: f64,
    dt: f64,
    dirichlet: Option<&Dirichlet>,
) -> Result<TimeSeriesField> {
    solve_heat_with_stats(space, u0, t_final, dt, dirichlet).map(|(tsf, _)| tsf)
}

pub fn solve_heat_with_stats(
    space: &DiscreteSpace,
    u0: &ScalarField,
    t_final: f64,
    dt: f64,
    dirichlet: Option<&Dirichlet>,
) -> Result<(TimeSeriesField, HeatStats)> {
    space.check_aligned(u0)?;
    if let Some((v, &x)) = u0.values().iter().enumerate().find(|(_, &x)| x < 0.0) {
        return Err(Error::NegativeInitialData { vertex: v, value: x });
    }
    let steps = step_count(t_final, dt)?;
    let n = space.vertex_count();

    let mut fixed = vec![false; n];
    if let Some(d) = dirichlet {
        if d.values.len() != 1 && d.values.len() != steps + 1 {
            return Err(invalid(
                "dirichlet",
                format!("expected 1 or {} rows of values, got {}", steps + 1, d.values.len()),
            ));
        }
        for row in &d.values {
            if row.len() != d.vertices.len() {
                return Err(invalid("dirichlet", "row length differs from the vertex set"));
            }
            if row.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
                return Err(invalid("dirichlet", "values must be nonnegative and finite"));
            }
        }
        for v in d.vertices.iter() {
            if v >= n {
                return Err(Error::VertexOutOfRange { vertex: v, count: n });
            }
            fixed[v] = true;
        }
    }
    let free: Vec<usize> = (0..n).filter(|&v| !fixed[v]).collect();
    let mut local = vec![usize::MAX; n];
    for (i, &v) in free.iter().enumerate() {
        local[v] = i;
    }
    let mu = space.mu();
    let mut triplets = Vec::new();
    for (i, &v) in free.iter().enumerate() {
        let mut diag = mu[v];
        for nb in space.neighbors(v) {
            diag += dt * nb.conductance;
            if !fixed[nb.vertex] {
                triplets.push((i, local[nb.vertex], -dt * nb.conductance));
            }
        }
        triplets.push((i, i, diag));
    }
    let a = CsrMatrix::from_triplets(free.len(), triplets);

    let mut stats = HeatStats {
        steps,
        ..HeatStats::default()
    };
    let mut frames = Vec::with_capacity(steps + 1);
    frames.push(u0.clone());
    let mut current = u0.values().to_vec();
    let mut x: Vec<f64> = free.iter().map(|&v| current[v]).collect();
    let mut b = vec![0.0; free.len()];
    for k in 1..=steps {
        let mut next = current.clone();
        if let Some(d) = dirichlet {
            for (v, &val) in d.vertices.iter().zip(d.row(k)) {
                next[v] = val;
            }
        }
        for (i, &v) in free.iter().enumerate() {
            let mut rhs = mu[v] * current[v];
            for nb in space.neighbors(v) {
                if fixed[nb.vertex] {
                    rhs += dt * nb.conductance * next[nb.vertex];
                }
            }
            b[i] = rhs;
        }
        let cg = conjugate_gradient(&a, &b, &mut x, CgOptions::default())?;
        stats.cg_iterations += cg.iterations;
        let mut residual = cg.relative_residual;
        if x.iter().any(|&v| v < 0.0) {
            stats.repaired_steps += 1;
            x.iter_mut().for_each(|v| *v = v.max(0.0));
            let mut sweeps = 0;
            loop {
                a.symmetric_gauss_seidel(&b, &mut x);
                sweeps += 1;
                residual = a.relative_residual(&x, &b);
                if residual <= REPAIR_TOL {
                    break;
                }
                if sweeps >= REPAIR_MAX_SWEEPS {
                    return Err(Error::SolverNonConvergence {
                        residual,
                        iterations: sweeps,
                    });
                }
            }
        }
        stats.max_relative_residual = stats.max_relative_residual.max(residual);
        for (i, &v) in free.iter().enumerate() {
            next[v] = x[i];
        }
        frames.push(space.field(next.clone())?);
        current = next;
    }
    Ok((TimeSeriesField::new(frames, dt, 0.0)?, stats))
}

/// Discrete fundamental solution from `δ_{x0}/μ_{x0}`.
pub fn heat_kernel(space: &DiscreteSpace, x0: usize, t_final: f64, dt: f64) -> Result<TimeSeriesField> {
    space.check_vertex(x0)?;
    let mut u0 = vec![0.0; space.vertex_count()];
    u0[x0] = 1.0 / space.mu()[x0];
    solve_heat(space, &space.field(u0)?, t_final, dt, None)
}

/// Euclidean heat kernel `(4πt)^{−n/2} exp(−|x|²/(4t))` sampled at the
/// vertex coordinates for frames `t0 + k·dt`, `k < frames`.
pub fn sample_gaussian_series(space: &DiscreteSpace, t0: f64, dt: f64, frames: usize) -> Result<TimeSeriesField> {
    if !(t0 > 0.0) {
        return Err(invalid("t0", "the Gaussian needs t0 > 0"));
    }
    let fields = (0..frames)
        .map(|k| {
            let t = t0 + k as f64 * dt;
            space.sample(|p| {
                let r2: f64 = p.iter().map(|c| c * c).sum();
                (4.0 * std::f64::consts::PI * t).powf(-(p.len() as f64) / 2.0) * (-r2 / (4.0 * t)).exp()
            })
        })
        .collect::<Result<Vec<_>>>()?;
    TimeSeriesField::new(fields, dt, t0)
}

/// `Q_α = Γ(ln u) − α ∂_t ln u` with its ingredients.
///
/// Frame `j` of the outputs corresponds to input frame `j + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogGradient {
    pub q: TimeSeriesField,
    pub gamma_ln: TimeSeriesField,
    pub gamma_ratio: TimeSeriesField,
    /// Per output frame and vertex: the value touches a floored sample.
    pub excluded: Vec<Vec<bool>>,
    /// Number of (vertex, frame) samples floored before the logarithm.
    pub floored_count: usize,
    /// Largest `|Γ(ln u) − Γ(u)/u²|` over non-excluded samples.
    pub max_discrepancy: f64,
}

/// Relative floor below which `u` is treated as zero before `ln u`.
pub const LOG_FLOOR: f64 = f64::EPSILON;

/// Logs of every frame with floored samples marked.
fn floored_logs(tsf: &TimeSeriesField) -> Result<(Vec<Vec<f64>>, Vec<Vec<bool>>)> {
    let mut logs = Vec::with_capacity(tsf.len());
    let mut floored = Vec::with_capacity(tsf.len());
    for (k, frame) in tsf.frames().iter().enumerate() {
        if let Some((v, &x)) = frame.values().iter().enumerate().find(|(_, &x)| x < 0.0) {
            return Err(Error::NonPositive {
                vertex: v,
                frame: k,
                value: x,
            });
        }
        let floor = LOG_FLOOR * frame.max_abs();
        if !(floor > 0.0) {
            return Err(Error::NonPositive {
                vertex: 0,
                frame: k,
                value: 0.0,
            });
        }
        let mask: Vec<bool> = frame.values().iter().map(|&x| x < floor).collect();
        logs.push(frame.values().iter().map(|&x| x.max(floor).ln()).collect());
        floored.push(mask);
    }
    Ok((logs, floored))
}

pub fn log_gradient_quantity(space: &DiscreteSpace, tsf: &TimeSeriesField, alpha: f64) -> Result<LogGradient> {
    tsf.check_space(space)?;
    if tsf.len() < 2 {
        return Err(Error::TimeSeries("the time derivative needs at least two frames".into()));
    }
    if !(alpha >= 1.0 && alpha.is_finite()) {
        return Err(invalid("alpha", "must be at least 1"));
    }
    let (logs, floored) = floored_logs(tsf)?;
    let floored_count = floored.iter().flatten().filter(|&&f| f).count();
    let dt = tsf.dt();
    let id = space.id();
    let mut q = Vec::new();
    let mut gl = Vec::new();
    let mut gr = Vec::new();
    let mut excluded = Vec::new();
    let mut max_discrepancy = 0.0f64;
    for k in 1..tsf.len() {
        let u = tsf.frame(k).values();
        let g_ln = gamma::gamma_values(space, &logs[k], &logs[k]);
        let g_u = gamma::gamma_values(space, u, u);
        let mask: Vec<bool> = (0..space.vertex_count())
            .map(|x| {
                floored[k][x] || floored[k - 1][x] || space.neighbors(x).iter().any(|nb| floored[k][nb.vertex])
            })
            .collect();
        let ratio: Vec<f64> = (0..space.vertex_count())
            .map(|x| if mask[x] { 0.0 } else { g_u[x] / (u[x] * u[x]) })
            .collect();
        let qk: Vec<f64> = (0..space.vertex_count())
            .map(|x| g_ln[x] - alpha * (logs[k][x] - logs[k - 1][x]) / dt)
            .collect();
        for x in (0..space.vertex_count()).filter(|&x| !mask[x]) {
            max_discrepancy = max_discrepancy.max((g_ln[x] - ratio[x]).abs());
        }
        q.push(ScalarField::from_parts(qk, id));
        gl.push(ScalarField::from_parts(g_ln, id));
        gr.push(ScalarField::from_parts(ratio, id));
        excluded.push(mask);
    }
    let t1 = tsf.time(1);
    Ok(LogGradient {
        q: TimeSeriesField::new(q, dt, t1)?,
        gamma_ln: TimeSeriesField::new(gl, dt, t1)?,
        gamma_ratio: TimeSeriesField::new(gr, dt, t1)?,
        excluded,
        floored_count,
        max_discrepancy,
    })
}

/// Input frames `k ≥ 1` whose time lies in `(lo, hi]`.
fn window_frames(tsf: &TimeSeriesField, lo: f64, hi: f64) -> Result<Vec<usize>> {
    let slack = 1e-9 * tsf.dt();
    if hi > tsf.final_time() + slack {
        return Err(Error::TimeSeries(format!(
            "series ends at t = {} before T = {hi}",
            tsf.final_time()
        )));
    }
    let frames: Vec<usize> = (1..tsf.len())
        .filter(|&k| {
            let t = tsf.time(k);
            t > lo + slack && t <= hi + slack
        })
        .collect();
    if frames.is_empty() {
        return Err(Error::EmptyWindow);
    }
    Ok(frames)
}

fn ball_clear_of_boundary(space: &DiscreteSpace, dist: &ScalarField, center: usize, radius: f64) -> Result<()> {
    let region = crate::space::metric::ball_from_distance(dist, radius);
    if region.iter().any(|v| space.is_boundary(v)) {
        return Err(Error::BallExceedsSpace { center, radius });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiYauSummary {
    pub sup_lhs: f64,
    /// Global bound at the final time `T` (tighter `max` form).
    pub rhs_global: f64,
    /// The `(1 + KT/(2(α−1)))` form of the same bound.
    pub rhs_global_weak: f64,
    pub rhs_local: Option<f64>,
    #[serde(rename = "calibrated_C_N")]
    pub calibrated_c_n: Option<f64>,
    pub violation_count: usize,
    pub local_violation: Option<bool>,
    pub excluded_count: usize,
    pub floored_count: usize,
    pub chain_discrepancy: f64,
    pub frames_in_window: usize,
    pub trace: Option<ProofTrace>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiYauOutcome {
    /// Per point `Q_α(x, t)` against the global bound at time `t`.
    pub report: InequalityReport,
    /// Per point against the local bound, when `C_N` was supplied.
    pub local_report: Option<InequalityReport>,
    pub summary: LiYauSummary,
}

/// Checks `Q_α` over `B_R(center) × (βT, T]` against the global bound (per
/// frame time) and the local bound.
///
/// Without `c_n` the smallest `C_N` making the local bound hold is reported.
/// The ball `B_{2R}` must avoid boundary vertices.
pub fn li_yau_report(
    space: &DiscreteSpace,
    tsf: &TimeSeriesField,
    params: &EstimateParams,
    c_n: Option<f64>,
) -> Result<LiYauOutcome> {
    params.validate(space)?;
    tsf.check_space(space)?;
    let dist = graph_distance(space, params.center)?;
    ball_clear_of_boundary(space, &dist, params.center, 2.0 * params.r)?;
    let region = crate::space::metric::ball_from_distance(&dist, params.r);
    let frames = window_frames(tsf, params.beta * params.t, params.t)?;
    let lg = log_gradient_quantity(space, tsf, params.alpha)?;

    let global_at = |t: f64| {
        evaluate_bound(&BoundSpec::LiYauGlobal {
            k: params.k,
            n: params.n,
            alpha: params.alpha,
            t,
            weak: false,
        })
    };
    let mut points = Vec::new();
    let mut excluded = Vec::new();
    for &k in &frames {
        let rhs = global_at(tsf.time(k))?;
        let q = lg.q.frame(k - 1);
        for x in region.iter() {
            if lg.excluded[k - 1][x] {
                excluded.push(Excluded {
                    vertex: x,
                    frame: Some(k),
                    reason: "floored before logarithm".into(),
                });
            } else {
                points.push(ReportPoint::new(x, Some(k), q[x], rhs));
            }
        }
    }
    let tol = 1e-12 * global_at(params.t)?;
    let mut report = InequalityReport::new("li_yau", points, tol)
        .with_param("K", params.k)
        .with_param("N", params.n)
        .with_param("alpha", params.alpha)
        .with_param("beta", params.beta)
        .with_param("T", params.t)
        .with_param("R", params.r)
        .with_h(space.meta().h)
        .with_excluded(excluded);

    let local_spec = BoundSpec::LiYauLocal {
        k: params.k,
        n: params.n,
        alpha: params.alpha,
        beta: params.beta,
        t: params.t,
        r: params.r,
        c_n,
    };
    let sup = report.sup_lhs;
    let calibrated = if sup.is_finite() {
        calibrate_constant(&local_spec, sup)?.value()
    } else {
        None
    };
    report.calibrated_constant = calibrated;
    let (rhs_local, local_report) = match c_n {
        Some(_) => {
            let rhs = evaluate_bound(&local_spec)?;
            let pts = report.points.iter().map(|p| ReportPoint::new(p.vertex, p.frame, p.lhs, rhs)).collect();
            let mut lr = InequalityReport::new("li_yau_local", pts, 1e-12 * rhs.abs())
                .with_h(space.meta().h)
                .with_excluded(report.excluded.clone());
            lr.params = report.params.clone();
            lr.params.insert("C_N".into(), c_n.unwrap_or_default());
            (Some(rhs), Some(lr))
        }
        None => (calibrated.map(|c| evaluate_bound(&local_spec.with_constant(c))).transpose()?, None),
    };

    let summary = LiYauSummary {
        sup_lhs: sup,
        rhs_global: global_at(params.t)?,
        rhs_global_weak: evaluate_bound(&BoundSpec::LiYauGlobal {
            k: params.k,
            n: params.n,
            alpha: params.alpha,
            t: params.t,
            weak: true,
        })?,
        rhs_local,
        calibrated_c_n: calibrated,
        violation_count: report.violation_count,
        local_violation: local_report.as_ref().map(|r| !r.passed()),
        excluded_count: report.excluded.len(),
        floored_count: lg.floored_count,
        chain_discrepancy: lg.max_discrepancy,
        frames_in_window: frames.len(),
        trace: None,
    };
    Ok(LiYauOutcome {
        report,
        local_report,
        summary,
    })
}

/// Right-hand side of the classical estimates: the global form when `r` is
/// `None`, otherwise the local form with constant `c`.
pub fn classical_baseline_rhs(n: f64, k: f64, alpha: f64, t: f64, r: Option<f64>, c: Option<f64>) -> Result<f64> {
    let spec = match r {
        None => BoundSpec::Classical12 { n, k, alpha, t },
        Some(r) => BoundSpec::Classical11 { n, k, alpha, t, r, c },
    };
    evaluate_bound(&spec)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutoffProfile {
    pub center: usize,
    pub r: f64,
    pub plateau: f64,
    pub phi: ScalarField,
    /// `sup Γ(φ)/φ` over `B_{3R/2}`.
    pub measured_grad_ratio: f64,
    /// `inf Lφ` over `B_{3R/2}`.
    pub measured_min_laplacian: f64,
}

impl CutoffProfile {
    /// Implied `C₁ = R²·sup Γ(φ)/φ`.
    pub fn c1(&self) -> f64 {
        self.r * self.r * self.measured_grad_ratio
    }

    /// Implied `C₂` in `Lφ ≥ −C₂(√K/R + 1/R²)`.
    pub fn c2(&self, k: f64) -> f64 {
        (-self.measured_min_laplacian).max(0.0) / (k.sqrt() / self.r + 1.0 / (self.r * self.r))
    }
}

/// Radial cutoff in graph distance: 1 on `B_R`, a smoothstep down to
/// `M1/(2M2)` on `B_{5R/4} \ B_R`, constant beyond.
pub fn build_cutoff(space: &DiscreteSpace, center: usize, r: f64, m1: f64, m2: f64) -> Result<CutoffProfile> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(invalid("R", "must be positive"));
    }
    if !(m1 > 0.0 && m1 <= m2 && m2.is_finite()) {
        return Err(invalid("M1", format!("need 0 < M1 ≤ M2, got M1 = {m1}, M2 = {m2}")));
    }
    let dist = graph_distance(space, center)?;
    ball_clear_of_boundary(space, &dist, center, 1.5 * r)?;
    let plateau = m1 / (2.0 * m2);
    let phi = dist.map(|d| {
        if d <= r {
            1.0
        } else if d >= 1.25 * r {
            plateau
        } else {
            let tau = (d - r) / (0.25 * r);
            let s = 1.0 - tau * tau * (3.0 - 2.0 * tau);
            plateau + (1.0 - plateau) * s
        }
    });
    let region = crate::space::metric::ball_from_distance(&dist, 1.5 * r);
    let g = gamma::gamma_values(space, phi.values(), phi.values());
    let l = gamma::laplacian_values(space, phi.values());
    let measured_grad_ratio = region.iter().map(|x| g[x] / phi[x]).fold(0.0, f64::max);
    let measured_min_laplacian = region.iter().map(|x| l[x]).fold(f64::INFINITY, f64::min);
    Ok(CutoffProfile {
        center,
        r,
        plateau,
        phi,
        measured_grad_ratio,
        measured_min_laplacian,
    })
}

/// Quantities of the maximum-principle argument for the local estimate,
/// evaluated at the space-time maximum of `G = φF`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProofTrace {
    pub degenerate: bool,
    pub argmax_vertex: usize,
    pub argmax_frame: usize,
    pub t: f64,
    #[serde(rename = "F_max")]
    pub f_max: f64,
    #[serde(rename = "G_max")]
    pub g_max: f64,
    pub phi_at_max: f64,
    pub v: f64,
    pub z: f64,
    pub epsilon: f64,
    #[serde(rename = "A_eps")]
    pub a_eps: f64,
    #[serde(rename = "B0")]
    pub b0: f64,
    #[serde(rename = "C1")]
    pub c1: f64,
    #[serde(rename = "C3")]
    pub c3: f64,
    pub eq516_lhs: f64,
    pub eq516_rhs: f64,
    pub eq516_margin: f64,
}

/// `F = t[Γ(ln u) − α∂_t ln u]₊`, `G = φF`, and the differential inequality
/// for `G` at its maximum over `B_{3R/2} × (0, T]`.
///
/// `C₃ = C₂ + 2C₁` collects the cutoff terms. The margin is `LHS − RHS`;
/// positive means the inequality holds at the maximum.
pub fn proof_trace(
    space: &DiscreteSpace,
    tsf: &TimeSeriesField,
    params: &EstimateParams,
    cutoff: &CutoffProfile,
) -> Result<ProofTrace> {
    params.validate(space)?;
    space.check_aligned(&cutoff.phi)?;
    let lg = log_gradient_quantity(space, tsf, params.alpha)?;
    let (logs, _) = floored_logs(tsf)?;
    let dist = graph_distance(space, cutoff.center)?;
    let region = crate::space::metric::ball_from_distance(&dist, 1.5 * cutoff.r);
    let phi = cutoff.phi.values();
    let nv = space.vertex_count();

    // F per input frame; frame 0 is only usable when it sits at t = 0.
    let f_frame = |k: usize| -> Vec<f64> {
        if k == 0 {
            return vec![0.0; nv];
        }
        let t = tsf.time(k);
        (0..nv)
            .map(|x| {
                if lg.excluded[k - 1][x] {
                    0.0
                } else {
                    t * lg.q.frame(k - 1)[x].max(0.0)
                }
            })
            .collect()
    };
    let first = if tsf.t0() == 0.0 { 1 } else { 2 };
    let mut best: Option<(usize, usize, f64)> = None;
    let mut f_max = 0.0f64;
    for k in first..tsf.len() {
        if tsf.time(k) > params.t + 1e-9 * tsf.dt() {
            break;
        }
        let f = f_frame(k);
        for x in region.iter() {
            f_max = f_max.max(f[x]);
            let g = phi[x] * f[x];
            if best.is_none_or(|b| g > b.2) {
                best = Some((x, k, g));
            }
        }
    }
    let c1 = cutoff.c1();
    let c3 = cutoff.c2(params.k) + 2.0 * c1;
    let b0 = params.b0();
    let Some((x, k, g_max)) = best.filter(|b| b.2 > 0.0) else {
        return Ok(ProofTrace {
            degenerate: true,
            argmax_vertex: 0,
            argmax_frame: 0,
            t: f64::NAN,
            f_max,
            g_max: 0.0,
            phi_at_max: f64::NAN,
            v: f64::NAN,
            z: f64::NAN,
            epsilon: f64::NAN,
            a_eps: f64::NAN,
            b0,
            c1,
            c3,
            eq516_lhs: f64::NAN,
            eq516_rhs: f64::NAN,
            eq516_margin: f64::NAN,
        });
    };
    let t = tsf.time(k);
    let (a, n, r) = (params.alpha, params.n, params.r);
    let f_now = f_frame(k);
    let g_now: Vec<f64> = f_now.iter().zip(phi).map(|(f, p)| f * p).collect();
    let g_prev: Vec<f64> = f_frame(k - 1).iter().zip(phi).map(|(f, p)| f * p).collect();
    let log_u = &logs[k];
    let lap_g = gamma::laplacian_values(space, &g_now)[x];
    let dt_g = (g_now[x] - g_prev[x]) / tsf.dt();
    let grad_fg = gamma::gamma_values(space, log_u, &g_now)[x];
    let grad_phig = gamma::gamma_values(space, phi, &g_now)[x];
    let phi_x = phi[x];
    let lhs = lap_g - dt_g + 2.0 * grad_fg - 2.0 * grad_phig / phi_x;

    let gamma_f = lg.gamma_ln.frame(k - 1)[x];
    let f_x = f_now[x];
    let v = gamma_f / f_x;
    let z = (a - 1.0) * v * t;
    let epsilon = if c1 > 0.0 {
        2.0 * params.beta * r * r / (c1 * n * a * a * params.t)
    } else {
        f64::INFINITY
    };
    let eps_inv = 1.0 / epsilon;
    let a_eps = (2.0 * params.k * t + eps_inv) / (a - 1.0);
    let scale = params.k.sqrt() / r + 1.0 / (r * r);
    let eps_term = if epsilon.is_finite() {
        epsilon * g_max * g_max / phi_x * c1 / (r * r)
    } else {
        0.0
    };
    let rhs = (g_max / (phi_x * t)) * (2.0 * g_max / (n * a * a) - b0 - eps_inv / (4.0 * (a - 1.0))) * (z + 1.0).powi(2)
        - c3 * g_max / phi_x * scale
        - eps_term;
    Ok(ProofTrace {
        degenerate: false,
        argmax_vertex: x,
        argmax_frame: k,
        t,
        f_max,
        g_max,
        phi_at_max: phi_x,
        v,
        z,
        epsilon,
        a_eps,
        b0,
        c1,
        c3,
        eq516_lhs: lhs,
        eq516_rhs: rhs,
        eq516_margin: lhs - rhs,
    })
}

/// Discrete weak-solution residual
/// `Σ_k ψ_k dt Σ_x [(u^k − u^{k−1})/dt · φ μ + Γ(u^k, φ) μ]` together with the
/// scale `Σ_k |ψ_k| dt Σ_x (|∂_t u φ| + |Γ(u^k, φ)|) μ` it should be compared
/// with. `ψ` has one weight per frame `k ≥ 1`; `φ` must vanish at Dirichlet
/// vertices.
pub fn weak_solution_residual(
    space: &DiscreteSpace,
    tsf: &TimeSeriesField,
    phi: &ScalarField,
    psi: &[f64],
) -> Result<(f64, f64)> {
    tsf.check_space(space)?;
    space.check_aligned(phi)?;
    if psi.len() + 1 != tsf.len() {
        return Err(invalid("psi", format!("expected {} weights, got {}", tsf.len() - 1, psi.len())));
    }
    let dt = tsf.dt();
    let mu = space.mu();
    let mut terms = Vec::new();
    let mut scale = 0.0;
    for k in 1..tsf.len() {
        let u = tsf.frame(k).values();
        let prev = tsf.frame(k - 1).values();
        let g = gamma::gamma_values(space, u, phi.values());
        for x in 0..space.vertex_count() {
            let time = (u[x] - prev[x]) / dt * phi[x] * mu[x];
            let space_term = g[x] * mu[x];
            terms.push(psi[k - 1] * dt * (time + space_term));
            scale += psi[k - 1].abs() * dt * (time.abs() + space_term.abs());
        }
    }
    // Σ_x Γ(u,φ)μ equals the edge sum Σ c Δu Δφ
    Ok((crate::linalg::compensated_sum(terms), scale))
}

/// `sup |L(u_h) − (u^{k+m} − u^k)/(m·dt)|` over `region` and all averaged
/// frames, where `u_h` is the Steklov average with `m` frames. For an
/// implicit-Euler solution this vanishes at vertices without prescribed
/// values. Returns the defect and `sup |L(u_h)|` for scale.
pub fn steklov_time_defect(
    space: &DiscreteSpace,
    tsf: &TimeSeriesField,
    window: f64,
    region: &IndexSet,
) -> Result<(f64, f64)> {
    let avg = gamma::steklov_average(tsf, window)?;
    let m = gamma::steklov_frames(window, tsf.dt());
    let mut defect = 0.0f64;
    let mut scale = 0.0f64;
    for j in 0..avg.len() {
        let l = gamma::laplacian_values(space, avg.frame(j).values());
        let hi = tsf.frame(j + m).values();
        let lo = tsf.frame(j).values();
        for x in region.iter() {
            let dq = (hi[x] - lo[x]) / (m as f64 * tsf.dt());
            defect = defect.max((l[x] - dq).abs());
            scale = scale.max(l[x].abs());
        }
    }
    Ok((defect, scale))
}
