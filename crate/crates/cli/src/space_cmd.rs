//! `space build` and `space info`.

use std::f64::consts::PI;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Subcommand};
use gammalab::space::{
    build_grid, build_hyperbolic_halfplane, build_sphere_patch, build_weighted_line, load_space, save_space,
};
use gammalab::DiscreteSpace;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::config::{require, resolve};
use crate::Outcome;

#[derive(Subcommand)]
pub enum SpaceCommand {
    /// Build a model space and write it to `--out`.
    Build(BuildArgs),
    /// Print size, measure and metadata of a space file.
    Info(InfoArgs),
}

#[derive(Args, Serialize, Deserialize, Default, Debug, Clone)]
#[serde(deny_unknown_fields, default)]
#[command(allow_negative_numbers = true)]
pub struct BuildArgs {
    /// grid | torus | hyperbolic_halfplane | sphere_patch | weighted_line
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub side: Option<f64>,
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub periodic: bool,
    #[arg(long)]
    pub x_min: Option<f64>,
    #[arg(long)]
    pub x_max: Option<f64>,
    #[arg(long)]
    pub y_min: Option<f64>,
    #[arg(long)]
    pub y_max: Option<f64>,
    #[arg(long)]
    pub radius: Option<f64>,
    /// Polar band, defaults to [π/4, 3π/4].
    #[arg(long)]
    pub theta_min: Option<f64>,
    #[arg(long)]
    pub theta_max: Option<f64>,
    #[arg(long)]
    pub n_theta: Option<usize>,
    #[arg(long)]
    pub n_phi: Option<usize>,
    #[arg(long)]
    pub n_vertices: Option<usize>,
    /// Weight `w(y) = −a·y²` on a centred weighted line.
    #[arg(long)]
    pub w_coef: Option<f64>,
    /// Path of the space file to write.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize, Deserialize, Default, Debug, Clone)]
#[serde(deny_unknown_fields, default)]
pub struct InfoArgs {
    #[arg(long)]
    pub space: Option<PathBuf>,
}

pub fn build(a: &BuildArgs) -> Result<DiscreteSpace> {
    let model = require(&a.model, "model")?;
    let space = match model.as_str() {
        "grid" | "torus" => build_grid(
            require(&a.dim, "dim")?,
            require(&a.side, "side")?,
            require(&a.h, "h")?,
            a.periodic || model == "torus",
        )?,
        "hyperbolic_halfplane" | "hyperbolic" => build_hyperbolic_halfplane(
            (require(&a.x_min, "x_min")?, require(&a.x_max, "x_max")?),
            (require(&a.y_min, "y_min")?, require(&a.y_max, "y_max")?),
            require(&a.h, "h")?,
        )?,
        "sphere_patch" | "sphere" => build_sphere_patch(
            a.radius.unwrap_or(1.0),
            (a.theta_min.unwrap_or(PI / 4.0), a.theta_max.unwrap_or(3.0 * PI / 4.0)),
            require(&a.n_theta, "n_theta")?,
            require(&a.n_phi, "n_phi")?,
        )?,
        "weighted_line" => {
            let n = require(&a.n_vertices, "n_vertices")?;
            let h = require(&a.h, "h")?;
            let c = a.w_coef.unwrap_or(0.0);
            let mid = (n as f64 - 1.0) / 2.0;
            let w: Vec<f64> = (0..n).map(|i| -c * ((i as f64 - mid) * h).powi(2)).collect();
            build_weighted_line(n, h, &w)?
        }
        other => bail!("invalid config: unknown model `{other}` for key `model`"),
    };
    Ok(space)
}

pub fn describe(space: &DiscreteSpace) -> Value {
    json!({
        "space_id": space.id(),
        "model": space.meta().model,
        "vertex_count": space.vertex_count(),
        "edge_count": space.edges().len(),
        "boundary_count": space.boundary().iter().filter(|&&b| b).count(),
        "total_measure": space.total_measure(),
        "h": space.meta().h,
        "K_ref": space.meta().k_ref,
        "N_ref": space.meta().n_ref,
    })
}

pub fn run(cmd: SpaceCommand, cfg: Option<&Map<String, Value>>) -> Result<Outcome> {
    match cmd {
        SpaceCommand::Build(flags) => {
            let a = resolve(&flags, cfg)?;
            let out = require(&a.out, "out")?;
            let space = build(&a)?;
            if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
            }
            save_space(&space, &out)?;
            let mut summary = describe(&space);
            summary["path"] = json!(out);
            Ok(Outcome { passed: true, summary })
        }
        SpaceCommand::Info(flags) => {
            let a = resolve(&flags, cfg)?;
            let space = load_space(require(&a.space, "space")?)?;
            Ok(Outcome {
                passed: true,
                summary: describe(&space),
            })
        }
    }
}
