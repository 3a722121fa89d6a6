//! Closed-form gradient bounds and refinement sweeps.
//!
//! Every bound is affine in its single unknown constant,
//! `bound = base + constant·coef`, which makes calibration a one-line
//! inversion.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Distance of β from 0 or 1 below which the local bounds are reported as +∞.
pub const BETA_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "which", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundSpec {
    /// Local Li-Yau bound on `B_R × (βT, T]` for RCD*(−K, N).
    LiYauLocal {
        k: f64,
        n: f64,
        alpha: f64,
        beta: f64,
        t: f64,
        r: f64,
        c_n: Option<f64>,
    },
    /// Global Li-Yau bound at time `t`. `weak` selects the
    /// `(1 + Kt/(2(α−1)))` prefactor instead of `max{1, ½ + Kt/(2(α−1))}`.
    LiYauGlobal {
        k: f64,
        n: f64,
        alpha: f64,
        t: f64,
        weak: bool,
    },
    /// Classical local estimate on a manifold with `Ric ≥ −k`.
    Classical11 {
        n: f64,
        k: f64,
        alpha: f64,
        t: f64,
        r: f64,
        c: Option<f64>,
    },
    /// Classical global estimate.
    Classical12 { n: f64, k: f64, alpha: f64, t: f64 },
    /// Local Yau bound on `sup_{B_R} |∇ ln u|` for harmonic `u > 0` on `B_{2R}`.
    Yau19 {
        k: f64,
        n: f64,
        beta: f64,
        r: f64,
        c_n: Option<f64>,
    },
}

/// `bound = base + constant·coef`; `coef = None` means the bound has no
/// constant slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineBound {
    pub base: f64,
    pub coef: Option<f64>,
    pub constant: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Calibration {
    NoSlot,
    Value(f64),
}

impl Calibration {
    pub fn value(self) -> Option<f64> {
        match self {
            Calibration::NoSlot => None,
            Calibration::Value(v) => Some(v),
        }
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, format!("must be positive and finite, got {v}")))
    }
}

fn nonneg(name: &'static str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, format!("must be nonnegative and finite, got {v}")))
    }
}

fn alpha_gt_one(alpha: f64) -> Result<()> {
    if alpha > 1.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(invalid("alpha", format!("must exceed 1, got {alpha}")))
    }
}

fn dimension(n: f64) -> Result<()> {
    if n >= 1.0 && n.is_finite() {
        Ok(())
    } else {
        Err(invalid("N", format!("must be a finite value ≥ 1, got {n}")))
    }
}

/// Returns whether β is within the guard of 0 or 1.
fn beta_degenerate(beta: f64) -> Result<bool> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(invalid("beta", format!("must lie in (0, 1), got {beta}")));
    }
    Ok(beta < BETA_GUARD || 1.0 - beta < BETA_GUARD)
}

fn constant_slot(c: Option<f64>) -> Result<Option<f64>> {
    match c {
        Some(v) if !(v >= 0.0 && v.is_finite()) => Err(invalid("constant", format!("must be nonnegative, got {v}"))),
        other => Ok(other),
    }
}

/// `max{1, ½ + Kt/(2(α−1))}`.
pub fn li_yau_prefactor(k: f64, t: f64, alpha: f64) -> f64 {
    (0.5 + k * t / (2.0 * (alpha - 1.0))).max(1.0)
}

/// `√((1+β)/(1−β)·(N−1)K)`, the constant-free part of the local Yau bound.
pub fn yau_leading(n: f64, k: f64, beta: f64) -> f64 {
    ((1.0 + beta) / (1.0 - beta) * (n - 1.0) * k).sqrt()
}

impl BoundSpec {
    pub fn name(&self) -> &'static str {
        match self {
            BoundSpec::LiYauLocal { .. } => "li_yau_local",
            BoundSpec::LiYauGlobal { .. } => "li_yau_global",
            BoundSpec::Classical11 { .. } => "classical_local",
            BoundSpec::Classical12 { .. } => "classical_global",
            BoundSpec::Yau19 { .. } => "yau_local",
        }
    }

    pub fn decompose(&self) -> Result<AffineBound> {
        match *self {
            BoundSpec::LiYauLocal {
                k,
                n,
                alpha,
                beta,
                t,
                r,
                c_n,
            } => {
                nonneg("K", k)?;
                dimension(n)?;
                alpha_gt_one(alpha)?;
                positive("T", t)?;
                positive("R", r)?;
                let c_n = constant_slot(c_n)?;
                if beta_degenerate(beta)? {
                    return Ok(AffineBound {
                        base: f64::INFINITY,
                        coef: Some(f64::INFINITY),
                        constant: c_n,
                    });
                }
                let b2 = beta * beta;
                let base = li_yau_prefactor(k, t, alpha) * n * alpha * alpha / (2.0 * t) / b2;
                let coef = alpha.powi(4) / (r * r * (alpha - 1.0)) / ((1.0 - beta) * b2)
                    + alpha * alpha / b2 * (k.sqrt() / r + 1.0 / (r * r));
                Ok(AffineBound {
                    base,
                    coef: Some(coef),
                    constant: c_n,
                })
            }
            BoundSpec::LiYauGlobal { k, n, alpha, t, weak } => {
                nonneg("K", k)?;
                dimension(n)?;
                alpha_gt_one(alpha)?;
                positive("T", t)?;
                let pre = if weak {
                    1.0 + k * t / (2.0 * (alpha - 1.0))
                } else {
                    li_yau_prefactor(k, t, alpha)
                };
                Ok(AffineBound {
                    base: pre * n * alpha * alpha / (2.0 * t),
                    coef: None,
                    constant: None,
                })
            }
            BoundSpec::Classical11 { n, k, alpha, t, r, c } => {
                dimension(n)?;
                nonneg("k", k)?;
                alpha_gt_one(alpha)?;
                positive("t", t)?;
                positive("R", r)?;
                let a2 = alpha * alpha;
                Ok(AffineBound {
                    base: n * a2 * k / (2.0 * (alpha - 1.0)) + n * a2 / (2.0 * t),
                    coef: Some(a2 / (r * r) * (a2 / (a2 - 1.0) + k.sqrt() * r)),
                    constant: constant_slot(c)?,
                })
            }
            BoundSpec::Classical12 { n, k, alpha, t } => {
                dimension(n)?;
                nonneg("k", k)?;
                alpha_gt_one(alpha)?;
                positive("t", t)?;
                let a2 = alpha * alpha;
                Ok(AffineBound {
                    base: n * a2 * k / (2.0 * (alpha - 1.0)) + n * a2 / (2.0 * t),
                    coef: None,
                    constant: None,
                })
            }
            BoundSpec::Yau19 { k, n, beta, r, c_n } => {
                nonneg("K", k)?;
                dimension(n)?;
                positive("R", r)?;
                let c_n = constant_slot(c_n)?;
                if beta_degenerate(beta)? {
                    return Ok(AffineBound {
                        base: f64::INFINITY,
                        coef: Some(f64::INFINITY),
                        constant: c_n,
                    });
                }
                Ok(AffineBound {
                    base: yau_leading(n, k, beta),
                    coef: Some(1.0 / ((beta * (1.0 - beta)).sqrt() * r)),
                    constant: c_n,
                })
            }
        }
    }

    /// Same bound with the constant slot filled.
    pub fn with_constant(mut self, value: f64) -> Self {
        match &mut self {
            BoundSpec::LiYauLocal { c_n, .. } | BoundSpec::Yau19 { c_n, .. } => *c_n = Some(value),
            BoundSpec::Classical11 { c, .. } => *c = Some(value),
            BoundSpec::LiYauGlobal { .. } | BoundSpec::Classical12 { .. } => {}
        }
        self
    }
}

pub fn evaluate_bound(spec: &BoundSpec) -> Result<f64> {
    let a = spec.decompose()?;
    if a.base.is_infinite() {
        return Ok(f64::INFINITY);
    }
    match a.coef {
        None => Ok(a.base),
        Some(coef) => {
            let c = a.constant.ok_or(Error::MissingConstant(spec.name()))?;
            Ok(a.base + c * coef)
        }
    }
}

/// Smallest constant making the bound at least `measured_sup`.
pub fn calibrate_constant(spec: &BoundSpec, measured_sup: f64) -> Result<Calibration> {
    if measured_sup.is_nan() {
        return Err(invalid("measured_sup", "must not be NaN"));
    }
    let a = spec.decompose()?;
    let Some(coef) = a.coef else {
        return Ok(Calibration::NoSlot);
    };
    if measured_sup <= a.base {
        return Ok(Calibration::Value(0.0));
    }
    if !(coef > 0.0) {
        return Err(invalid("constant", "bound is not increasing in its constant"));
    }
    Ok(Calibration::Value((measured_sup - a.base) / coef))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    H,
    Beta,
    R,
    Alpha,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::H => "h",
            SweepAxis::Beta => "beta",
            SweepAxis::R => "R",
            SweepAxis::Alpha => "alpha",
        }
    }
}

/// What one sweep point measures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSample {
    pub measured: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    pub measured: f64,
    pub bound: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub points: Vec<SweepPoint>,
    /// Reference value the measurements converge to, if known.
    pub limit: Option<f64>,
    /// NaN when undefined; see `order_note`.
    pub fitted_order: f64,
    pub order_note: Option<String>,
}

/// Least-squares slope of `ln y` against `ln x`, using only positive pairs.
fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(&x, &y)| x > 0.0 && y > 0.0 && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx)
}

/// Empirical convergence order of `measured` along `values`.
///
/// With a known limit the errors `|m − limit|` are fitted; otherwise the
/// successive differences `|m_{i+1} − m_i|` against `values[i]`. Returns
/// `Err(note)` when the order is undefined.
pub fn fit_order(values: &[f64], measured: &[f64], limit: Option<f64>) -> std::result::Result<f64, String> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = match limit {
        Some(l) => (values.to_vec(), measured.iter().map(|m| (m - l).abs()).collect()),
        None => (
            values[..values.len().saturating_sub(1)].to_vec(),
            measured.windows(2).map(|w| (w[1] - w[0]).abs()).collect(),
        ),
    };
    if ys.iter().all(|&y| y == 0.0) {
        return Err("all errors are zero; order undefined".into());
    }
    loglog_slope(&xs, &ys).ok_or_else(|| "fewer than two positive errors; order undefined".into())
}

/// Runs `experiment` at each axis value (in parallel) and fits the
/// empirical order. Output points are sorted by axis value.
pub fn convergence_sweep<F>(axis: SweepAxis, values: &[f64], limit: Option<f64>, experiment: F) -> Result<SweepResult>
where
    F: Fn(f64) -> Result<SweepSample> + Sync,
{
    if values.len() < 3 {
        return Err(invalid("points", "a sweep needs at least 3 points"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(invalid("points", "axis values must be finite"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let samples: Vec<SweepSample> = sorted
        .par_iter()
        .enumerate()
        .map(|(index, &value)| {
            experiment(value).map_err(|e| Error::SweepPoint {
                index,
                value,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;
    let points: Vec<SweepPoint> = sorted
        .iter()
        .zip(&samples)
        .map(|(&value, s)| SweepPoint {
            value,
            measured: s.measured,
            bound: s.bound,
            ratio: s.measured / s.bound,
        })
        .collect();
    let (fitted_order, order_note) = match fit_order(&sorted, &points.iter().map(|p| p.measured).collect::<Vec<_>>(), limit) {
        Ok(o) => (o, None),
        Err(note) => (f64::NAN, Some(note)),
    };
    Ok(SweepResult {
        axis,
        points,
        limit,
        fitted_order,
        order_note,
    })
}

impl SweepResult {
    pub fn order_defined(&self) -> bool {
        self.order_note.is_none()
    }

    /// CSV `axis_value,measured,bound,ratio,fitted_order_running`, where the
    /// running order uses the points up to and including each row.
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# axis: {}\n# fitted_order: {}\naxis_value,measured,bound,ratio,fitted_order_running\n",
            self.axis.name(),
            self.fitted_order
        );
        let values: Vec<f64> = self.points.iter().map(|p| p.value).collect();
        let measured: Vec<f64> = self.points.iter().map(|p| p.measured).collect();
        for (i, p) in self.points.iter().enumerate() {
            let running = fit_order(&values[..=i], &measured[..=i], self.limit)
                .map(|o| o.to_string())
                .unwrap_or_default();
            let _ = writeln!(out, "{},{},{},{},{}", p.value, p.measured, p.bound, p.ratio, running);
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}
