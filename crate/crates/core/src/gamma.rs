//! Discrete Γ-calculus on a weighted graph.
//!
//! With vertex masses μ and edge conductances c,
//!
//! ```text
//! Lf(x)     = (1/μ_x) Σ_y c_xy (f(y) − f(x))
//! Γ(f,g)(x) = (1/(2μ_x)) Σ_y c_xy (f(y) − f(x)) (g(y) − g(x))
//! Γ₂(f)(x)  = ½ LΓ(f)(x) − Γ(f, Lf)(x)
//! ```
//!
//! `L` satisfies `Σ_x Lf·φ·μ = −Σ_edges c (Δf)(Δφ)` exactly, which is the
//! weak-Laplacian identity. `|∇f|²` is identified with `Γ(f, f)` throughout.
//! Discrete measures have no singular part, so hypotheses of the form
//! `L^sing f ≥ 0` hold vacuously.

use crate::error::{invalid, Error, Result};
use crate::report::{Excluded, InequalityReport, ReportPoint};
use crate::space::{DiscreteSpace, ScalarField};

/// Relative tolerance for identities that hold exactly in real arithmetic.
pub const EXACT_TOL: f64 = 1e-12;

pub(crate) fn laplacian_values(space: &DiscreteSpace, f: &[f64]) -> Vec<f64> {
    (0..space.vertex_count())
        .map(|x| {
            let fx = f[x];
            space
                .neighbors(x)
                .iter()
                .map(|nb| nb.conductance * (f[nb.vertex] - fx))
                .sum::<f64>()
                / space.mu()[x]
        })
        .collect()
}

pub(crate) fn gamma_values(space: &DiscreteSpace, f: &[f64], g: &[f64]) -> Vec<f64> {
    (0..space.vertex_count())
        .map(|x| {
            let (fx, gx) = (f[x], g[x]);
            space
                .neighbors(x)
                .iter()
                .map(|nb| nb.conductance * (f[nb.vertex] - fx) * (g[nb.vertex] - gx))
                .sum::<f64>()
                / (2.0 * space.mu()[x])
        })
        .collect()
}

pub fn laplacian(space: &DiscreteSpace, f: &ScalarField) -> Result<ScalarField> {
    space.check_aligned(f)?;
    Ok(ScalarField::from_parts(laplacian_values(space, f.values()), space.id()))
}

/// Carré du champ `Γ(f, g)`.
pub fn gamma(space: &DiscreteSpace, f: &ScalarField, g: &ScalarField) -> Result<ScalarField> {
    space.check_aligned(f)?;
    space.check_aligned(g)?;
    Ok(ScalarField::from_parts(gamma_values(space, f.values(), g.values()), space.id()))
}

/// `Γ(f) = Γ(f, f)`.
pub fn gamma_sq(space: &DiscreteSpace, f: &ScalarField) -> Result<ScalarField> {
    gamma(space, f, f)
}

pub(crate) fn gamma2_values(space: &DiscreteSpace, f: &[f64]) -> Vec<f64> {
    let g = gamma_values(space, f, f);
    let lf = laplacian_values(space, f);
    let lg = laplacian_values(space, &g);
    let cross = gamma_values(space, f, &lf);
    lg.iter().zip(&cross).map(|(a, b)| 0.5 * a - b).collect()
}

/// `Γ₂(f) = ½ L(Γ(f)) − Γ(f, Lf)`.
pub fn gamma2(space: &DiscreteSpace, f: &ScalarField) -> Result<ScalarField> {
    space.check_aligned(f)?;
    Ok(ScalarField::from_parts(gamma2_values(space, f.values()), space.id()))
}

/// `Γ₂` evaluated from its expanded local sum over the 2-ball, without
/// forming the intermediate fields Γ(f) and Lf globally:
///
/// ```text
/// Γ₂(f)(x) = 1/(4μ_x) Σ_y c_xy [ (1/μ_y) Σ_z c_yz (f_z − f_y)² − (1/μ_x) Σ_z c_xz (f_z − f_x)² ]
///          − 1/(2μ_x) Σ_y c_xy (f_y − f_x) (Lf(y) − Lf(x))
/// ```
pub fn gamma2_expanded(space: &DiscreteSpace, f: &ScalarField) -> Result<ScalarField> {
    space.check_aligned(f)?;
    let f = f.values();
    let local_sq = |y: usize| -> f64 {
        space
            .neighbors(y)
            .iter()
            .map(|nb| nb.conductance * (f[nb.vertex] - f[y]).powi(2))
            .sum::<f64>()
            / space.mu()[y]
    };
    let local_lap = |y: usize| -> f64 {
        space
            .neighbors(y)
            .iter()
            .map(|nb| nb.conductance * (f[nb.vertex] - f[y]))
            .sum::<f64>()
            / space.mu()[y]
    };
    let values = (0..space.vertex_count())
        .map(|x| {
            let mx = space.mu()[x];
            let sq_x = local_sq(x);
            let lap_x = local_lap(x);
            let mut first = 0.0;
            let mut second = 0.0;
            for nb in space.neighbors(x) {
                let y = nb.vertex;
                first += nb.conductance * (local_sq(y) - sq_x);
                second += nb.conductance * (f[y] - f[x]) * (local_lap(y) - lap_x);
            }
            first / (4.0 * mx) - second / (2.0 * mx)
        })
        .collect();
    Ok(ScalarField::from_parts(values, space.id()))
}

/// Laplacian of the reweighted space `μ_w = e^w μ`, `c_w = c e^{(w(x)+w(y))/2}`.
///
/// The result is itself a graph Laplacian; it agrees with `Lf + Γ(w, f)` up to
/// an O(h) defect for smooth data.
pub fn weighted_laplacian(space: &DiscreteSpace, f: &ScalarField, w: &ScalarField) -> Result<ScalarField> {
    space.check_aligned(f)?;
    space.check_aligned(w)?;
    Ok(ScalarField::from_parts(
        weighted_laplacian_values(space, f.values(), w.values()),
        space.id(),
    ))
}

pub(crate) fn weighted_laplacian_values(space: &DiscreteSpace, f: &[f64], w: &[f64]) -> Vec<f64> {
    (0..space.vertex_count())
        .map(|x| weighted_laplacian_at(space, f, w, x))
        .collect()
}

pub(crate) fn weighted_laplacian_at(space: &DiscreteSpace, f: &[f64], w: &[f64], x: usize) -> f64 {
    let fx = f[x];
    let wx = w[x];
    space
        .neighbors(x)
        .iter()
        .map(|nb| nb.conductance * ((wx + w[nb.vertex]) / 2.0).exp() * (f[nb.vertex] - fx))
        .sum::<f64>()
        / (space.mu()[x] * wx.exp())
}

/// Kato's inequality `L_w f₊ ≥ χ[f ≥ 0]·L_w f`, checked at every vertex with
/// zero tolerance. `lhs = χ[f ≥ 0]·L_w f`, `rhs = L_w f₊`.
///
/// Termwise `f₊(y) ≥ f(y)`, and rounding is monotone, so the floating-point
/// margin is nonnegative as well.
pub fn kato_check(space: &DiscreteSpace, f: &ScalarField, w: &ScalarField) -> Result<InequalityReport> {
    space.check_aligned(f)?;
    space.check_aligned(w)?;
    let fv = f.values();
    let fplus: Vec<f64> = fv.iter().map(|&v| v.max(0.0)).collect();
    let lw_f = weighted_laplacian_values(space, fv, w.values());
    let lw_fplus = weighted_laplacian_values(space, &fplus, w.values());
    let points = (0..space.vertex_count())
        .map(|x| {
            let chi = if fv[x] >= 0.0 { lw_f[x] } else { 0.0 };
            ReportPoint::new(x, None, chi, lw_fplus[x])
        })
        .collect();
    Ok(InequalityReport::new("kato", points, 0.0))
}

/// The equivalent form `L_w |f| ≥ sgn(f)·L_w f`.
pub fn kato_abs_check(space: &DiscreteSpace, f: &ScalarField, w: &ScalarField) -> Result<InequalityReport> {
    space.check_aligned(f)?;
    space.check_aligned(w)?;
    let fv = f.values();
    let abs: Vec<f64> = fv.iter().map(|v| v.abs()).collect();
    let lw_f = weighted_laplacian_values(space, fv, w.values());
    let lw_abs = weighted_laplacian_values(space, &abs, w.values());
    let points = (0..space.vertex_count())
        .map(|x| {
            let signed = if fv[x] > 0.0 {
                lw_f[x]
            } else if fv[x] < 0.0 {
                -lw_f[x]
            } else {
                0.0
            };
            ReportPoint::new(x, None, signed, lw_abs[x])
        })
        .collect();
    Ok(InequalityReport::new("kato_abs", points, 0.0))
}

/// `L(fg) − f·Lg − g·Lf − 2Γ(f,g)`, identically zero up to rounding.
pub fn leibniz_defect(space: &DiscreteSpace, f: &ScalarField, g: &ScalarField) -> Result<ScalarField> {
    space.check_aligned(f)?;
    space.check_aligned(g)?;
    let (fv, gv) = (f.values(), g.values());
    let fg: Vec<f64> = fv.iter().zip(gv).map(|(a, b)| a * b).collect();
    let l_fg = laplacian_values(space, &fg);
    let lf = laplacian_values(space, fv);
    let lg = laplacian_values(space, gv);
    let gm = gamma_values(space, fv, gv);
    let values = (0..space.vertex_count())
        .map(|x| l_fg[x] - fv[x] * lg[x] - gv[x] * lf[x] - 2.0 * gm[x])
        .collect();
    Ok(ScalarField::from_parts(values, space.id()))
}

/// Scale against which [`leibniz_defect`] is measured: `max|f|·max|g|·‖L‖`.
pub fn leibniz_scale(space: &DiscreteSpace, f: &ScalarField, g: &ScalarField) -> f64 {
    (f.max_abs() * g.max_abs() * space.operator_scale()).max(f64::MIN_POSITIVE)
}

/// A twice-differentiable scalar map with derivative evaluators.
pub trait ScalarMap {
    fn value(&self, s: f64) -> Result<f64>;
    fn d1(&self, s: f64) -> Result<f64>;
    fn d2(&self, s: f64) -> Result<f64>;
}

#[derive(Debug, Clone, Copy)]
pub struct Exp;

#[derive(Debug, Clone, Copy)]
pub struct Ln;

#[derive(Debug, Clone, Copy)]
pub struct Square;

impl ScalarMap for Exp {
    fn value(&self, s: f64) -> Result<f64> {
        Ok(s.exp())
    }
    fn d1(&self, s: f64) -> Result<f64> {
        Ok(s.exp())
    }
    fn d2(&self, s: f64) -> Result<f64> {
        Ok(s.exp())
    }
}

impl Ln {
    fn check(s: f64) -> Result<()> {
        if s > 0.0 {
            Ok(())
        } else {
            Err(Error::MapEvaluation {
                value: s,
                reason: "logarithm of a nonpositive value",
            })
        }
    }
}

impl ScalarMap for Ln {
    fn value(&self, s: f64) -> Result<f64> {
        Ln::check(s)?;
        Ok(s.ln())
    }
    fn d1(&self, s: f64) -> Result<f64> {
        Ln::check(s)?;
        Ok(1.0 / s)
    }
    fn d2(&self, s: f64) -> Result<f64> {
        Ln::check(s)?;
        Ok(-1.0 / (s * s))
    }
}

impl ScalarMap for Square {
    fn value(&self, s: f64) -> Result<f64> {
        Ok(s * s)
    }
    fn d1(&self, s: f64) -> Result<f64> {
        Ok(2.0 * s)
    }
    fn d2(&self, _s: f64) -> Result<f64> {
        Ok(2.0)
    }
}

/// `L[η(f)] − η'(f)·Lf − η''(f)·Γ(f)`. Zero for quadratic η, O(h) otherwise.
pub fn chain_defect(space: &DiscreteSpace, f: &ScalarField, eta: &dyn ScalarMap) -> Result<ScalarField> {
    space.check_aligned(f)?;
    let fv = f.values();
    let composed = fv.iter().map(|&s| eta.value(s)).collect::<Result<Vec<_>>>()?;
    let l_composed = laplacian_values(space, &composed);
    let lf = laplacian_values(space, fv);
    let gf = gamma_values(space, fv, fv);
    let values = (0..space.vertex_count())
        .map(|x| Ok(l_composed[x] - eta.d1(fv[x])? * lf[x] - eta.d2(fv[x])? * gf[x]))
        .collect::<Result<Vec<_>>>()?;
    Ok(ScalarField::from_parts(values, space.id()))
}

fn check_dimension(n: f64, strict: bool) -> Result<()> {
    let ok = if strict { n > 1.0 } else { n >= 1.0 };
    if ok {
        Ok(())
    } else {
        Err(invalid("N", format!("N = {n} out of range")))
    }
}

fn inv_dim(n: f64) -> f64 {
    if n.is_infinite() {
        0.0
    } else {
        1.0 / n
    }
}

/// Bochner margin `Γ₂(f) − (Lf)²/N − K·Γ(f)` at every vertex.
///
/// `k` is the signed Ricci lower bound (a space satisfying RCD*(−1, 2) is
/// checked with `k = −1`). `n = ∞` drops the dimensional term.
pub fn bochner_margin(space: &DiscreteSpace, f: &ScalarField, k: f64, n: f64) -> Result<InequalityReport> {
    space.check_aligned(f)?;
    check_dimension(n, false)?;
    let fv = f.values();
    let g2 = gamma2_values(space, fv);
    let lf = laplacian_values(space, fv);
    let gf = gamma_values(space, fv, fv);
    let points = (0..space.vertex_count())
        .map(|x| ReportPoint::new(x, None, lf[x] * lf[x] * inv_dim(n) + k * gf[x], g2[x]))
        .collect();
    Ok(InequalityReport::new("bochner", points, 0.0)
        .with_param("K", k)
        .with_param("N", n))
}

/// Self-improved Bochner margin, adding
/// `N/(N−1)·(Γ(f, Γ(f))/(2Γ(f)) − Lf/N)²` to the right-hand side of the plain
/// inequality. Vertices with `Γ(f) < eps_gamma` are excluded.
pub fn improved_bochner_margin(
    space: &DiscreteSpace,
    f: &ScalarField,
    k: f64,
    n: f64,
    eps_gamma: f64,
) -> Result<InequalityReport> {
    space.check_aligned(f)?;
    check_dimension(n, true)?;
    if !(eps_gamma > 0.0) {
        return Err(invalid("eps_gamma", "must be positive"));
    }
    let fv = f.values();
    let g2 = gamma2_values(space, fv);
    let lf = laplacian_values(space, fv);
    let gf = gamma_values(space, fv, fv);
    let g_gf = gamma_values(space, fv, &gf);
    let ratio = if n.is_infinite() { 1.0 } else { n / (n - 1.0) };
    let mut points = Vec::new();
    let mut excluded = Vec::new();
    for x in 0..space.vertex_count() {
        if gf[x] < eps_gamma {
            excluded.push(Excluded {
                vertex: x,
                frame: None,
                reason: "gamma below eps_gamma".into(),
            });
            continue;
        }
        let extra = ratio * (g_gf[x] / (2.0 * gf[x]) - lf[x] * inv_dim(n)).powi(2);
        let lhs = lf[x] * lf[x] * inv_dim(n) + k * gf[x] + extra;
        points.push(ReportPoint::new(x, None, lhs, g2[x]));
    }
    Ok(InequalityReport::new("improved_bochner", points, 0.0)
        .with_param("K", k)
        .with_param("N", n)
        .with_param("eps_gamma", eps_gamma)
        .with_excluded(excluded))
}

/// Per-frame fields with a uniform time step.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesField {
    frames: Vec<ScalarField>,
    dt: f64,
    t0: f64,
}

impl TimeSeriesField {
    pub fn new(frames: Vec<ScalarField>, dt: f64, t0: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid("dt", "must be positive"));
        }
        if !(t0 >= 0.0) {
            return Err(invalid("t0", "must be nonnegative"));
        }
        let first = frames
            .first()
            .ok_or_else(|| Error::TimeSeries("a series needs at least one frame".into()))?;
        if frames
            .iter()
            .any(|f| f.space_id() != first.space_id() || f.len() != first.len())
        {
            return Err(Error::TimeSeries("frames belong to different spaces".into()));
        }
        Ok(Self { frames, dt, t0 })
    }

    pub fn frames(&self) -> &[ScalarField] {
        &self.frames
    }

    pub fn frame(&self, k: usize) -> &ScalarField {
        &self.frames[k]
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn final_time(&self) -> f64 {
        self.time(self.frames.len() - 1)
    }

    pub fn space_id(&self) -> u64 {
        self.frames[0].space_id()
    }

    pub fn check_space(&self, space: &DiscreteSpace) -> Result<()> {
        space.check_aligned(&self.frames[0])
    }

    /// Applies a per-frame map.
    pub fn map_frames(&self, f: impl Fn(&ScalarField) -> Result<ScalarField>) -> Result<TimeSeriesField> {
        Self::new(self.frames.iter().map(f).collect::<Result<_>>()?, self.dt, self.t0)
    }
}

/// Number of frames a Steklov window spans: `⌈window/dt⌉`.
pub fn steklov_frames(window: f64, dt: f64) -> usize {
    (window / dt - 1e-9).ceil().max(1.0) as usize
}

/// Forward Steklov average: frame `k` of the output is the mean of input
/// frames `k+1, …, k+m` with `m = ⌈window/dt⌉`.
///
/// The output keeps `t0` and has `m` fewer frames. With `window = dt` it is a
/// shift by one frame.
pub fn steklov_average(tsf: &TimeSeriesField, window: f64) -> Result<TimeSeriesField> {
    if !(window > 0.0) || window < tsf.dt() * (1.0 - 1e-9) {
        return Err(invalid("window", format!("window {window} must be at least dt = {}", tsf.dt())));
    }
    let m = steklov_frames(window, tsf.dt());
    if m >= tsf.len() {
        return Err(Error::TimeSeries(format!(
            "window spans {m} frames but the series has only {}",
            tsf.len()
        )));
    }
    let n = tsf.len() - m;
    let width = tsf.frame(0).len();
    let frames = (0..n)
        .map(|k| {
            let mut acc = vec![0.0; width];
            for j in 1..=m {
                for (a, v) in acc.iter_mut().zip(tsf.frame(k + j).values()) {
                    *a += v;
                }
            }
            acc.iter_mut().for_each(|a| *a /= m as f64);
            ScalarField::from_parts(acc, tsf.space_id())
        })
        .collect();
    TimeSeriesField::new(frames, tsf.dt(), tsf.t0())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{build_grid, Edge, SpaceMeta};

    pub(crate) fn two_point() -> DiscreteSpace {
        DiscreteSpace::new(
            vec![1.0, 1.0],
            vec![Edge {
                i: 0,
                j: 1,
                conductance: 1.0,
                length: 1.0,
            }],
            None,
            vec![false; 2],
            SpaceMeta {
                model: "two_point".into(),
                n_geo: 1,
                k_ref: None,
                n_ref: None,
                h: 1.0,
            },
        )
        .unwrap()
    }

    #[test]
    fn path_laplacian_and_gamma() {
        let s = build_grid(1, 2.0, 1.0, false).unwrap();
        let f = s.field(vec![0.0, 1.0, 4.0]).unwrap();
        assert_eq!(laplacian(&s, &f).unwrap()[1], 2.0);
        assert_eq!(gamma_sq(&s, &f).unwrap()[1], 5.0);
        let c = s.constant_field(3.0);
        assert!(laplacian(&s, &c).unwrap().values().iter().all(|&v| v == 0.0));
        assert!(gamma(&s, &f, &c).unwrap().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn quadratic_on_grid_has_laplacian_four() {
        for &h in &[0.1, 0.05] {
            let s = build_grid(2, 2.0, h, false).unwrap();
            let f = s.sample(|p| p[0] * p[0] + p[1] * p[1]).unwrap();
            let lf = laplacian(&s, &f).unwrap();
            for v in s.interior().iter() {
                assert!((lf[v] - 4.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn two_point_gamma2() {
        let s = two_point();
        let f = s.field(vec![0.0, 1.0]).unwrap();
        assert_eq!(gamma2(&s, &f).unwrap().values(), &[1.0, 1.0]);
        assert_eq!(gamma2_expanded(&s, &f).unwrap().values(), &[1.0, 1.0]);
        let c = s.constant_field(5.0);
        assert_eq!(gamma2(&s, &c).unwrap().values(), &[0.0, 0.0]);
    }

    #[test]
    fn gamma2_of_linear_function_vanishes() {
        let s = build_grid(2, 2.0, 0.1, true).unwrap();
        // linear functions are not periodic; use a non-periodic grid interior
        let s2 = build_grid(2, 2.0, 0.1, false).unwrap();
        let f = s2.sample(|p| 0.3 * p[0] - 1.2 * p[1]).unwrap();
        let g2 = gamma2(&s2, &f).unwrap();
        let far_interior: Vec<usize> = s2
            .interior()
            .iter()
            .filter(|&v| s2.neighbors(v).iter().all(|nb| !s2.is_boundary(nb.vertex)))
            .collect();
        for v in far_interior {
            assert!(g2[v].abs() < 1e-9, "{}", g2[v]);
        }
        assert!(s.vertex_count() > 0);
    }

    #[test]
    fn weighted_laplacian_cases() {
        let s = two_point();
        let f = s.field(vec![0.0, 1.0]).unwrap();
        let w = s.field(vec![0.0, 2.0 * 2f64.ln()]).unwrap();
        let lw = weighted_laplacian(&s, &f, &w).unwrap();
        assert!((lw[0] - 2.0).abs() < 1e-15);
        let zero = s.constant_field(0.0);
        assert_eq!(
            weighted_laplacian(&s, &f, &zero).unwrap(),
            laplacian(&s, &f).unwrap()
        );
    }

    #[test]
    fn kato_two_point() {
        let s = two_point();
        let f = s.field(vec![-1.0, 2.0]).unwrap();
        let zero = s.constant_field(0.0);
        let r = kato_check(&s, &f, &zero).unwrap();
        assert_eq!(r.points[0].rhs, 2.0);
        assert_eq!(r.points[0].lhs, 0.0);
        assert_eq!(r.points[0].margin, 2.0);
        assert!(r.passed());
        let pos = s.field(vec![1.0, 2.0]).unwrap();
        let r = kato_check(&s, &pos, &zero).unwrap();
        assert!(r.points.iter().all(|p| p.margin == 0.0));
    }

    #[test]
    fn chain_rule_quadratic_and_log() {
        let s = build_grid(1, 2.0, 0.1, false).unwrap();
        let f = s.sample(|p| (p[0]).sin() + 2.0).unwrap();
        let d = chain_defect(&s, &f, &Square).unwrap();
        assert!(d.max_abs() < 1e-10);
        let ln_defect = chain_defect(&s, &f, &Ln).unwrap();
        assert!(ln_defect.max_abs() > 0.0);
        let neg = s.sample(|p| p[0]).unwrap();
        assert!(matches!(chain_defect(&s, &neg, &Ln), Err(Error::MapEvaluation { .. })));
    }

    #[test]
    fn bochner_two_point() {
        let s = two_point();
        let f = s.field(vec![0.0, 1.0]).unwrap();
        let r = bochner_margin(&s, &f, 0.0, 2.0).unwrap();
        assert_eq!(r.points[0].margin, 0.5);
        let imp = improved_bochner_margin(&s, &f, 0.0, 2.0, 1e-9).unwrap();
        assert_eq!(imp.points[0].margin, 0.0);
        assert!(bochner_margin(&s, &f, 0.0, 0.5).is_err());
        assert!(improved_bochner_margin(&s, &f, 0.0, 1.0, 1e-9).is_err());
        let c = s.constant_field(1.0);
        let r = bochner_margin(&s, &c, 7.0, 2.0).unwrap();
        assert!(r.points.iter().all(|p| p.margin == 0.0));
        let imp = improved_bochner_margin(&s, &c, 0.0, 2.0, 1e-9).unwrap();
        assert!(imp.points.is_empty());
        assert_eq!(imp.excluded.len(), 2);
    }

    #[test]
    fn improved_margin_on_linear_function_matches_plain() {
        let s = build_grid(1, 2.0, 0.05, false).unwrap();
        let f = s.sample(|p| 1.5 * p[0]).unwrap();
        let plain = bochner_margin(&s, &f, 0.0, 3.0).unwrap();
        let imp = improved_bochner_margin(&s, &f, 0.0, 3.0, 1e-6).unwrap();
        let interior = s.interior();
        for p in imp.points.iter().filter(|p| {
            interior.contains(p.vertex) && s.neighbors(p.vertex).iter().all(|nb| !s.is_boundary(nb.vertex))
        }) {
            assert!((p.margin - plain.points[p.vertex].margin).abs() < 1e-8);
        }
    }

    #[test]
    fn steklov_basics() {
        let s = two_point();
        let frames: Vec<ScalarField> = (0..6).map(|k| s.field(vec![k as f64, 2.0 * k as f64]).unwrap()).collect();
        let tsf = TimeSeriesField::new(frames, 0.1, 0.0).unwrap();
        let shift = steklov_average(&tsf, 0.1).unwrap();
        assert_eq!(shift.len(), 5);
        for k in 0..5 {
            assert_eq!(shift.frame(k), tsf.frame(k + 1));
        }
        let avg = steklov_average(&tsf, 0.3).unwrap();
        assert_eq!(avg.len(), 3);
        assert_eq!(avg.frame(0).values(), &[2.0, 4.0]);
        assert!(steklov_average(&tsf, 0.6).is_err());
        assert!(steklov_average(&tsf, 0.05).is_err());
        let constant = TimeSeriesField::new(vec![s.constant_field(3.0); 4], 0.5, 0.0).unwrap();
        let c = steklov_average(&constant, 1.0).unwrap();
        assert!(c.frames().iter().all(|f| f.values() == [3.0, 3.0]));
    }
}
