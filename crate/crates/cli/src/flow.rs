//! `heat` and `harmonic`: heat flow with the Li-Yau estimates, Poisson solves
//! and the Yau estimate.

use std::path::PathBuf;

use anyhow::{anyhow, bail, Result};
use clap::{Args, Subcommand};
use gammalab::elliptic::{busemann_harmonic, solve_poisson_with_stats, yau_report, yau_sweep_csv, BoundaryValues, YauParams};
use gammalab::fieldio::{field_to_json, load_field, load_series, series_to_json};
use gammalab::heat::{
    build_cutoff, li_yau_report, proof_trace, sample_gaussian_series, solve_heat_with_stats, Dirichlet, EstimateParams,
};
use gammalab::space::{graph_distance, load_space};
use gammalab::{DiscreteSpace, ScalarField, TimeSeriesField};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::checks::{finite_or_null, out_dir, summarize};
use crate::config::{require, resolve};
use crate::Outcome;

#[derive(Args, Serialize, Deserialize, Default, Debug, Clone)]
#[serde(deny_unknown_fields, default)]
#[command(allow_negative_numbers = true)]
pub struct HeatSolveArgs {
    #[arg(long)]
    pub space: Option<PathBuf>,
    /// delta[:vertex] | constant:c | gaussian:t0 | file:path
    #[arg(long)]
    pub u0: Option<String>,
    #[arg(long = "T")]
    #[serde(rename = "T")]
    pub t: Option<f64>,
    /// Defaults to the largest step at most h²/2 dividing T.
    #[arg(long)]
    pub dt: Option<f64>,
    /// fixed (boundary held at u0) | none
    #[arg(long)]
    pub dirichlet: Option<String>,
    #[arg(long)]
    pub center: Option<usize>,
    /// Centre as coordinates; the nearest vertex is used.
    #[arg(long, value_delimiter = ',')]
    pub center_at: Option<Vec<f64>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize, Deserialize, Default, Debug, Clone)]
#[serde(deny_unknown_fields, default)]
#[command(allow_negative_numbers = true)]
pub struct LiYauArgs {
    #[arg(long)]
    pub space: Option<PathBuf>,
    /// Time-series file; without it the flow is solved from `u0`.
    #[arg(long)]
    pub series: Option<PathBuf>,
    #[arg(long)]
    pub u0: Option<String>,
    #[arg(long = "T")]
    #[serde(rename = "T")]
    pub t: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub dirichlet: Option<String>,
    #[arg(long = "K")]
    #[serde(rename = "K")]
    pub k: Option<f64>,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub gamma_frac: Option<f64>,
    #[arg(long = "R")]
    #[serde(rename = "R")]
    pub r: Option<f64>,
    #[arg(long)]
    pub center: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub center_at: Option<Vec<f64>>,
    /// Constant of the local bound; calibrated when absent.
    #[arg(long = "C-N")]
    #[serde(rename = "C_N")]
    pub c_n: Option<f64>,
    /// Evaluate the maximum-principle argument at the maximum of `φF`.
    #[arg(long)]
    pub trace: bool,
    #[arg(long = "M1")]
    #[serde(rename = "M1")]
    pub m1: Option<f64>,
    #[arg(long = "M2")]
    #[serde(rename = "M2")]
    pub m2: Option<f64>,
    /// Also write the solved series.
    #[arg(long)]
    pub save_series: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand)]
pub enum HeatCommand {
    /// Solve the heat equation and write the series.
    Solve(HeatSolveArgs),
    /// Check the global and local Li-Yau estimates.
    Liyau(LiYauArgs),
}

#[derive(Args, Serialize, Deserialize, Default, Debug, Clone)]
#[serde(deny_unknown_fields, default)]
pub struct PoissonArgs {
    #[arg(long)]
    pub space: Option<PathBuf>,
    /// Field whose boundary values are prescribed; none for the zero-mean
    /// problem on a closed space.
    #[arg(long)]
    pub boundary_field: Option<PathBuf>,
    /// Right-hand side field; zero when absent.
    #[arg(long)]
    pub g: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize, Deserialize, Default, Debug, Clone)]
#[serde(deny_unknown_fields, default)]
#[command(allow_negative_numbers = true)]
pub struct YauArgs {
    #[arg(long)]
    pub space: Option<PathBuf>,
    /// Positive harmonic field; `u = y` on a half-plane when absent.
    #[arg(long)]
    pub u: Option<PathBuf>,
    #[arg(long = "K")]
    #[serde(rename = "K")]
    pub k: Option<f64>,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n: Option<f64>,
    #[arg(long = "R")]
    #[serde(rename = "R")]
    pub r: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub center: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub center_at: Option<Vec<f64>>,
    #[arg(long = "C-N")]
    #[serde(rename = "C_N")]
    pub c_n: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub betas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub radii: Option<Vec<f64>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand)]
pub enum HarmonicCommand {
    /// Solve `Lf = g` with prescribed boundary values.
    Solve(PoissonArgs),
    /// Check the local Yau estimate and tabulate the β/R sweep.
    Yau(YauArgs),
}

/// The vertex given by id, else the one nearest to `at`, else the one
/// nearest to the coordinate centroid (vertex 0 without coordinates).
pub fn pick_center(space: &DiscreteSpace, center: Option<usize>, at: Option<&[f64]>) -> Result<usize> {
    if let Some(c) = center {
        space.check_vertex(c)?;
        return Ok(c);
    }
    let Some(coords) = space.coords() else {
        return match at {
            Some(_) => Err(anyhow!("invalid config: key `center_at` needs a space with coordinates")),
            None => Ok(0),
        };
    };
    let target: Vec<f64> = match at {
        Some(p) => p.to_vec(),
        None => {
            let dim = coords[0].len();
            (0..dim)
                .map(|i| coords.iter().map(|c| c[i]).sum::<f64>() / coords.len() as f64)
                .collect()
        }
    };
    if target.len() != coords[0].len() {
        bail!("invalid config: key `center_at` needs {} coordinates", coords[0].len());
    }
    let d2 = |c: &[f64]| c.iter().zip(&target).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    Ok((0..coords.len())
        .min_by(|&a, &b| d2(&coords[a]).total_cmp(&d2(&coords[b])).then(a.cmp(&b)))
        .unwrap_or(0))
}

/// Largest radius `R` with `B_{2R}(center)` clear of the boundary; a quarter
/// of the eccentricity on closed spaces.
pub fn default_radius(space: &DiscreteSpace, center: usize) -> Result<f64> {
    let dist = graph_distance(space, center)?;
    let to_boundary = (0..space.vertex_count())
        .filter(|&v| space.is_boundary(v))
        .map(|v| dist[v])
        .fold(f64::INFINITY, f64::min);
    if to_boundary.is_finite() {
        Ok(0.5 * to_boundary * (1.0 - 1e-9))
    } else {
        Ok(0.25 * dist.values().iter().copied().fold(0.0, f64::max))
    }
}

pub fn default_dt(space: &DiscreteSpace, t: f64) -> f64 {
    let h = space.meta().h;
    let steps = (2.0 * t / (h * h)).ceil().max(1.0);
    t / steps
}

fn initial_field(space: &DiscreteSpace, spec: &str, center: usize) -> Result<ScalarField> {
    let (kind, arg) = spec.split_once(':').unwrap_or((spec, ""));
    let num = |s: &str| -> Result<f64> {
        s.parse::<f64>()
            .map_err(|e| anyhow!("invalid config: key `u0`: `{s}`: {e}"))
    };
    match kind {
        "delta" => {
            let x = if arg.is_empty() {
                center
            } else {
                arg.parse().map_err(|e| anyhow!("invalid config: key `u0`: {e}"))?
            };
            space.check_vertex(x)?;
            Ok(space.field_from_fn(|v| if v == x { 1.0 / space.mu()[x] } else { 0.0 })?)
        }
        "constant" => Ok(space.constant_field(num(arg)?)),
        "gaussian" => Ok(sample_gaussian_series(space, num(arg)?, 1.0, 1)?.frame(0).clone()),
        "file" => Ok(load_field(space, arg)?),
        _ => bail!("invalid config: key `u0` must be delta[:v], constant:c, gaussian:t0 or file:path"),
    }
}

fn dirichlet_for(space: &DiscreteSpace, spec: Option<&str>, u0: &ScalarField) -> Result<Option<Dirichlet>> {
    match spec.unwrap_or("fixed") {
        "fixed" if space.has_boundary() => Ok(Some(Dirichlet::fixed_boundary(space, u0)?)),
        "fixed" | "none" => Ok(None),
        other => bail!("invalid config: unknown value `{other}` for key `dirichlet`"),
    }
}

fn solve(
    space: &DiscreteSpace,
    u0: Option<&str>,
    t: f64,
    dt: Option<f64>,
    dirichlet: Option<&str>,
    center: usize,
) -> Result<(TimeSeriesField, Value)> {
    let u0 = initial_field(space, u0.unwrap_or("delta"), center)?;
    let dt = dt.unwrap_or_else(|| default_dt(space, t));
    let bc = dirichlet_for(space, dirichlet, &u0)?;
    let (tsf, stats) = solve_heat_with_stats(space, &u0, t, dt, bc.as_ref())?;
    let info = json!({
        "dt": dt,
        "steps": stats.steps,
        "cg_iterations": stats.cg_iterations,
        "max_relative_residual": stats.max_relative_residual,
        "repaired_steps": stats.repaired_steps,
        "dirichlet_vertices": bc.as_ref().map_or(0, |b| b.vertices.len()),
    });
    Ok((tsf, info))
}

pub fn run_heat(cmd: HeatCommand, cfg: Option<&Map<String, Value>>) -> Result<Outcome> {
    match cmd {
        HeatCommand::Solve(flags) => {
            let a = resolve(&flags, cfg)?;
            let space = load_space(require(&a.space, "space")?)?;
            let center = pick_center(&space, a.center, a.center_at.as_deref())?;
            let t = require(&a.t, "T")?;
            let (tsf, info) = solve(&space, a.u0.as_deref(), t, a.dt, a.dirichlet.as_deref(), center)?;
            let mut out = out_dir(&a.out);
            out.write("series.json", series_to_json(&tsf))?;
            let summary = json!({
                "passed": true,
                "frames": tsf.len(),
                "solver": info,
                "mass_initial": space.mass(tsf.frame(0))?,
                "mass_final": space.mass(tsf.frame(tsf.len() - 1))?,
                "min_value": tsf.frames().iter().flat_map(|f| f.values().iter().copied()).fold(f64::INFINITY, f64::min),
                "files": ["series.json", "summary.json"],
            });
            out.write_json("summary.json", &summary)?;
            Ok(Outcome { passed: true, summary })
        }
        HeatCommand::Liyau(flags) => {
            let a = resolve(&flags, cfg)?;
            let space = load_space(require(&a.space, "space")?)?;
            let center = pick_center(&space, a.center, a.center_at.as_deref())?;
            let (tsf, solver) = match &a.series {
                Some(path) => (load_series(&space, path)?, Value::Null),
                None => solve(&space, a.u0.as_deref(), require(&a.t, "T")?, a.dt, a.dirichlet.as_deref(), center)?,
            };
            let params = EstimateParams {
                k: a.k.or(space.meta().k_ref).ok_or_else(|| anyhow!("missing required key `K`"))?,
                n: a.n.or(space.meta().n_ref).ok_or_else(|| anyhow!("missing required key `N`"))?,
                alpha: require(&a.alpha, "alpha")?,
                beta: a.beta.unwrap_or(0.5),
                gamma_frac: a.gamma_frac.unwrap_or(0.5),
                t: a.t.unwrap_or_else(|| tsf.final_time()),
                r: match a.r {
                    Some(r) => r,
                    None => default_radius(&space, center)?,
                },
                center,
            };
            let mut outcome = li_yau_report(&space, &tsf, &params, a.c_n)?;
            if a.trace {
                let cutoff = build_cutoff(&space, center, params.r, a.m1.unwrap_or(1.0), a.m2.unwrap_or(1.0))?;
                outcome.summary.trace = Some(proof_trace(&space, &tsf, &params, &cutoff)?);
            }
            let mut out = out_dir(&a.out);
            out.write("li_yau.csv", outcome.report.to_csv())?;
            if let Some(lr) = &outcome.local_report {
                out.write("li_yau_local.csv", lr.to_csv())?;
            }
            if a.save_series && a.series.is_none() {
                out.write("series.json", series_to_json(&tsf))?;
            }
            let passed = outcome.report.passed() && outcome.local_report.as_ref().is_none_or(|r| r.passed());
            let mut summary = serde_json::to_value(&outcome.summary)?;
            summary["passed"] = json!(passed);
            summary["params"] = serde_json::to_value(params)?;
            summary["solver"] = solver;
            summary["report"] = summarize(&outcome.report);
            summary["sup_lhs"] = finite_or_null(outcome.summary.sup_lhs);
            let mut files = out.written().to_vec();
            files.push("summary.json".into());
            summary["files"] = json!(files);
            out.write_json("summary.json", &summary)?;
            Ok(Outcome { passed, summary })
        }
    }
}

pub fn run_harmonic(cmd: HarmonicCommand, cfg: Option<&Map<String, Value>>) -> Result<Outcome> {
    match cmd {
        HarmonicCommand::Solve(flags) => {
            let a = resolve(&flags, cfg)?;
            let space = load_space(require(&a.space, "space")?)?;
            let g = match &a.g {
                Some(p) => load_field(&space, p)?,
                None => space.constant_field(0.0),
            };
            let boundary = match &a.boundary_field {
                Some(p) => Some(BoundaryValues::trace_of(&space, &load_field(&space, p)?)?),
                None => None,
            };
            let (f, stats) = solve_poisson_with_stats(&space, &g, boundary.as_ref())?;
            let mut out = out_dir(&a.out);
            out.write("solution.json", field_to_json(&f))?;
            let summary = json!({
                "passed": true,
                "iterations": stats.iterations,
                "relative_residual": stats.relative_residual,
                "max_residual": stats.max_residual,
                "files": ["solution.json", "summary.json"],
            });
            out.write_json("summary.json", &summary)?;
            Ok(Outcome { passed: true, summary })
        }
        HarmonicCommand::Yau(flags) => {
            let a = resolve(&flags, cfg)?;
            let space = load_space(require(&a.space, "space")?)?;
            let center = pick_center(&space, a.center, a.center_at.as_deref())?;
            let u = match &a.u {
                Some(p) => load_field(&space, p)?,
                None => busemann_harmonic(&space)?,
            };
            let r = match a.r {
                Some(r) => r,
                None => default_radius(&space, center)?,
            };
            let params = YauParams {
                k: a.k.or(space.meta().k_ref).ok_or_else(|| anyhow!("missing required key `K`"))?,
                n: a.n.or(space.meta().n_ref).ok_or_else(|| anyhow!("missing required key `N`"))?,
                r,
                beta: a.beta.unwrap_or(0.5),
                center,
            };
            let betas = a
                .betas
                .clone()
                .unwrap_or_else(|| (1..=9).map(|i| f64::from(i) / 10.0).collect());
            let radii = a.radii.clone().unwrap_or_else(|| vec![r]);
            let outcome = yau_report(&space, &u, &params, a.c_n, &betas, &radii)?;
            let mut out = out_dir(&a.out);
            out.write("yau.csv", outcome.report.to_csv())?;
            out.write("yau_sweep.csv", yau_sweep_csv(&outcome.summary.sweep))?;
            let passed = outcome.report.passed();
            let mut summary = serde_json::to_value(&outcome.summary)?;
            summary["passed"] = json!(passed);
            summary["params"] = serde_json::to_value(params)?;
            summary["report"] = summarize(&outcome.report);
            summary["files"] = json!(["yau.csv", "yau_sweep.csv", "summary.json"]);
            out.write_json("summary.json", &summary)?;
            Ok(Outcome { passed, summary })
        }
    }
}
