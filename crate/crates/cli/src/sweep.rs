//! `sweep`: an experiment repeated along one parameter axis, with the fitted
//! convergence order.

use std::path::PathBuf;

use anyhow::{anyhow, bail, Result};
use clap::Args;
use gammalab::elliptic::{busemann_harmonic, yau_sweep, YauParams};
use gammalab::estimates::{convergence_sweep, evaluate_bound, BoundSpec, SweepAxis, SweepSample};
use gammalab::gamma::{chain_defect, Exp, Ln, ScalarMap, Square};
use gammalab::heat::{heat_kernel, li_yau_report, EstimateParams};
use gammalab::space::{build_grid, load_space};
use gammalab::{DiscreteSpace, TimeSeriesField};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::checks::out_dir;
use crate::config::{require, resolve};
use crate::flow::{default_dt, default_radius, pick_center};
use crate::Outcome;

#[derive(Args, Serialize, Deserialize, Default, Debug, Clone)]
#[serde(deny_unknown_fields, default)]
#[command(allow_negative_numbers = true)]
pub struct SweepArgs {
    /// chain (axis h) | yau (axis beta or R) | liyau (axis alpha or h)
    #[arg(long)]
    pub experiment: Option<String>,
    /// h | beta | R | alpha
    #[arg(long)]
    pub axis: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub values: Option<Vec<f64>>,
    /// Known limit of the measured quantity.
    #[arg(long)]
    pub limit: Option<f64>,
    #[arg(long)]
    pub space: Option<PathBuf>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub side: Option<f64>,
    /// exp | ln | square
    #[arg(long)]
    pub map: Option<String>,
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
    pub alpha: Option<f64>,
    #[arg(long = "T")]
    #[serde(rename = "T")]
    pub t: Option<f64>,
    #[arg(long)]
    pub center: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub center_at: Option<Vec<f64>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_axis(name: &str) -> Result<SweepAxis> {
    Ok(match name {
        "h" => SweepAxis::H,
        "beta" => SweepAxis::Beta,
        "R" => SweepAxis::R,
        "alpha" => SweepAxis::Alpha,
        other => bail!("invalid config: unknown axis `{other}` for key `axis`"),
    })
}

fn map_for(name: &str) -> Result<&'static (dyn ScalarMap + Sync)> {
    Ok(match name {
        "exp" => &Exp,
        "ln" => &Ln,
        "square" => &Square,
        other => bail!("invalid config: unknown map `{other}` for key `map`"),
    })
}

/// `sup |chain defect|` of `sin(x₁)·Π cos(x_i)` (shifted positive for ln)
/// over the interior of a grid.
fn chain_sample(dim: usize, side: f64, h: f64, eta: &dyn ScalarMap, shift: f64) -> gammalab::Result<SweepSample> {
    let space = build_grid(dim, side, h, false)?;
    let f = space.sample(|p| {
        shift + p[0].sin() * p[1..].iter().map(|x| x.cos()).product::<f64>()
    })?;
    let d = chain_defect(&space, &f, eta)?;
    Ok(SweepSample {
        measured: d.sup_over(&space.interior_band(1)).max(-d.inf_over(&space.interior_band(1))),
        bound: f64::NAN,
    })
}

fn li_yau_sample(space: &DiscreteSpace, tsf: &TimeSeriesField, params: &EstimateParams) -> gammalab::Result<SweepSample> {
    let outcome = li_yau_report(space, tsf, params, None)?;
    Ok(SweepSample {
        measured: outcome.summary.sup_lhs,
        bound: evaluate_bound(&BoundSpec::LiYauGlobal {
            k: params.k,
            n: params.n,
            alpha: params.alpha,
            t: params.t,
            weak: false,
        })?,
    })
}

pub fn run(flags: SweepArgs, cfg: Option<&Map<String, Value>>) -> Result<Outcome> {
    let a = resolve(&flags, cfg)?;
    let experiment = require(&a.experiment, "experiment")?;
    let axis = parse_axis(&require(&a.axis, "axis")?)?;
    let values = require(&a.values, "values")?;
    let mut bounded = false;
    let result = match (experiment.as_str(), axis) {
        ("chain", SweepAxis::H) => {
            let dim = a.dim.unwrap_or(2);
            let side = a.side.unwrap_or(2.0);
            let name = a.map.clone().unwrap_or_else(|| "exp".into());
            let eta = map_for(&name)?;
            let shift = if name == "ln" { 2.0 } else { 0.0 };
            convergence_sweep(axis, &values, a.limit.or(Some(0.0)), |h| chain_sample(dim, side, h, eta, shift))?
        }
        ("yau", SweepAxis::Beta | SweepAxis::R) => {
            let space = load_space(require(&a.space, "space")?)?;
            let center = pick_center(&space, a.center, a.center_at.as_deref())?;
            let u = busemann_harmonic(&space)?;
            let params = YauParams {
                k: a.k.or(space.meta().k_ref).ok_or_else(|| anyhow!("missing required key `K`"))?,
                n: a.n.or(space.meta().n_ref).ok_or_else(|| anyhow!("missing required key `N`"))?,
                r: match a.r {
                    Some(r) => r,
                    None => default_radius(&space, center)?,
                },
                beta: a.beta.unwrap_or(0.5),
                center,
            };
            convergence_sweep(axis, &values, a.limit, |v| {
                let (betas, radii) = match axis {
                    SweepAxis::Beta => (vec![v], vec![params.r]),
                    _ => (vec![params.beta], vec![v]),
                };
                let row = yau_sweep(&space, &u, &params, &betas, &radii)?[0];
                Ok(SweepSample {
                    measured: row.measured_sup,
                    bound: row.leading_term,
                })
            })?
        }
        ("liyau", SweepAxis::Alpha) => {
            bounded = true;
            let space = load_space(require(&a.space, "space")?)?;
            let center = pick_center(&space, a.center, a.center_at.as_deref())?;
            let t = a.t.unwrap_or(1.0);
            let tsf = heat_kernel(&space, center, t, default_dt(&space, t))?;
            let base = EstimateParams {
                k: a.k.or(space.meta().k_ref).unwrap_or(0.0),
                n: a.n.or(space.meta().n_ref).ok_or_else(|| anyhow!("missing required key `N`"))?,
                alpha: 2.0,
                beta: a.beta.unwrap_or(0.5),
                gamma_frac: 0.5,
                t,
                r: match a.r {
                    Some(r) => r,
                    None => default_radius(&space, center)?,
                },
                center,
            };
            convergence_sweep(axis, &values, a.limit, |alpha| {
                li_yau_sample(&space, &tsf, &EstimateParams { alpha, ..base })
            })?
        }
        ("liyau", SweepAxis::H) => {
            bounded = true;
            let dim = a.dim.unwrap_or(1);
            let side = a.side.unwrap_or(4.0);
            let t = a.t.unwrap_or(1.0);
            let alpha = a.alpha.unwrap_or(1.1);
            let n = a.n.unwrap_or(dim as f64);
            let beta = a.beta.unwrap_or(0.5);
            convergence_sweep(axis, &values, a.limit, |h| {
                let space = build_grid(dim, side, h, true)?;
                let center = pick_center(&space, None, None).unwrap_or(0);
                let tsf = heat_kernel(&space, center, t, default_dt(&space, t))?;
                let params = EstimateParams {
                    k: 0.0,
                    n,
                    alpha,
                    beta,
                    gamma_frac: 0.5,
                    t,
                    r: 0.25 * side,
                    center,
                };
                li_yau_sample(&space, &tsf, &params)
            })?
        }
        (e, _) => bail!("invalid config: experiment `{e}` does not support axis `{}`", axis.name()),
    };
    let passed = !bounded || result.points.iter().all(|p| p.measured <= p.bound * (1.0 + 1e-12));
    let mut out = out_dir(&a.out);
    out.write("sweep.csv", result.to_csv())?;
    let mut summary = serde_json::to_value(&result)?;
    summary["experiment"] = json!(experiment);
    summary["passed"] = json!(passed);
    if !result.fitted_order.is_finite() {
        summary["fitted_order"] = Value::Null;
    }
    summary["files"] = json!(["sweep.csv", "summary.json"]);
    out.write_json("summary.json", &summary)?;
    Ok(Outcome { passed, summary })
}
