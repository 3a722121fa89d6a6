//! `gamma`, `curvature` and `maxprin`: exact identities, Bochner margins,
//! curvature profiles and maximum-principle probes over seeded trials.

use std::borrow::Cow;
use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, Subcommand};
use gammalab::curvature::{curvature_profile, verify_cd};
use gammalab::elliptic::{max_principle_probe, parabolic_max_probe};
use gammalab::fieldio::field_to_json;
use gammalab::gamma::{
    bochner_margin, chain_defect, improved_bochner_margin, kato_abs_check, kato_check, leibniz_defect,
    leibniz_scale, Exp, Ln, ScalarMap, Square, EXACT_TOL,
};
use gammalab::sampling::{
    admissible_field, admissible_series, noise_field, random_connected_graph, random_region, seeded, smooth_field, unit_gradient,
    ChaCha8Rng, Rng,
};
use gammalab::space::load_space;
use gammalab::{DiscreteSpace, InequalityReport, ReportPoint};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::config::{require, resolve, Dim, OutDir};
use crate::Outcome;

const DEFAULT_OUT: &str = "gammalab_out";
const DEFAULT_MAX_VERTICES: usize = 200;

/// Declares an argument struct carrying the shared trial flags plus `extra`.
macro_rules! trial_args {
    ($(#[$m:meta])* $name:ident { $($(#[$fm:meta])* $v:vis $field:ident : $ty:ty,)* }) => {
        #[derive(Args, Serialize, Deserialize, Default, Debug, Clone)]
        #[serde(deny_unknown_fields, default)]
        $(#[$m])*
        pub struct $name {
            /// Space file; without it every trial draws a random connected graph.
            #[arg(long)]
            pub space: Option<PathBuf>,
            #[arg(long)]
            pub trials: Option<usize>,
            #[arg(long)]
            pub seed: Option<u64>,
            /// Largest random graph drawn when no space is given.
            #[arg(long)]
            pub max_vertices: Option<usize>,
            #[arg(long)]
            pub out: Option<PathBuf>,
            $($(#[$fm])* $v $field: $ty,)*
        }

        impl AsTrial for $name {
            fn trial(&self) -> TrialFlags<'_> {
                TrialFlags {
                    space: &self.space,
                    trials: self.trials,
                    seed: self.seed,
                    max_vertices: self.max_vertices,
                }
            }
        }
    };
}

pub struct TrialFlags<'a> {
    space: &'a Option<PathBuf>,
    trials: Option<usize>,
    seed: Option<u64>,
    max_vertices: Option<usize>,
}

pub trait AsTrial {
    fn trial(&self) -> TrialFlags<'_>;
}

trial_args!(TrialArgs {});

trial_args!(KatoArgs {
    /// Also check the `|f|` form.
    #[arg(long)]
    pub abs: bool,
});

trial_args!(ChainArgs {
    /// exp | ln | square
    #[arg(long)]
    pub map: Option<String>,
    /// Largest defect accepted; unbounded when absent.
    #[arg(long)]
    pub max_defect: Option<f64>,
});

trial_args!(
    #[command(allow_negative_numbers = true)]
    BochnerArgs {
        /// Signed Ricci lower bound.
        #[arg(long = "K")]
        #[serde(rename = "K")]
        pub k: Option<f64>,
        #[arg(long = "N")]
        #[serde(rename = "N")]
        pub n: Option<Dim>,
        /// smooth (needs coordinates) | noise
        #[arg(long)]
        pub fields: Option<String>,
        /// Hop distance from the boundary of the checked band.
        #[arg(long)]
        pub band: Option<usize>,
        /// Scale each field to `sup Γ(f) = 1` on the band.
        #[arg(long)]
        pub unit_gradient: bool,
        /// Check the self-improved form, excluding `Γ(f) < eps_gamma`.
        #[arg(long)]
        pub improved: bool,
        #[arg(long)]
        pub eps_gamma: Option<f64>,
    }
);

#[derive(Subcommand)]
pub enum GammaCommand {
    /// Kato's inequality for the weighted Laplacian.
    Kato(KatoArgs),
    /// Leibniz rule defect, relative to its scale.
    Leibniz(TrialArgs),
    /// Chain rule defect for exp, ln or s².
    Chain(ChainArgs),
    /// Bochner inequality margins.
    Bochner(BochnerArgs),
}

#[derive(Args, Serialize, Deserialize, Default, Debug, Clone)]
#[serde(deny_unknown_fields, default)]
pub struct ProfileArgs {
    #[arg(long)]
    pub space: Option<PathBuf>,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n: Option<Dim>,
    /// Write minimizing test functions as field files.
    #[arg(long)]
    pub emit_witness: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

trial_args!(
    #[command(allow_negative_numbers = true)]
    VerifyArgs {
        #[arg(long = "K")]
        #[serde(rename = "K")]
        pub k: Option<f64>,
        #[arg(long = "N")]
        #[serde(rename = "N")]
        pub n: Option<Dim>,
    }
);

#[derive(Subcommand)]
pub enum CurvatureCommand {
    /// Largest K with CD(K, N) at every vertex.
    Profile(ProfileArgs),
    /// Monte-Carlo check of CD(K, N) with random fields.
    Verify(VerifyArgs),
}

trial_args!(ParabolicArgs {
    #[arg(long)]
    pub frames: Option<usize>,
    #[arg(long)]
    pub dt: Option<f64>,
    /// Window start δ; the window is `(δ, T]` with `T` the final time.
    #[arg(long)]
    pub delta: Option<f64>,
});

#[derive(Subcommand)]
pub enum MaxprinCommand {
    /// `L_w f ≤ 0` at maxima over a region.
    Elliptic(TrialArgs),
    /// `L_w f − ∂_t f ≤ 0` at space-time maxima.
    Parabolic(ParabolicArgs),
}

pub fn summarize(r: &InequalityReport) -> Value {
    json!({
        "experiment": r.experiment,
        "points": r.points.len(),
        "excluded": r.excluded.len(),
        "violation_count": r.violation_count,
        "worst_violation": r.worst_violation,
        "min_margin": finite_or_null(r.min_margin),
        "sup_lhs": finite_or_null(r.sup_lhs),
        "calibrated_constant": r.calibrated_constant,
        "tol": r.tol,
    })
}

pub fn finite_or_null(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

/// Writes each report as `<experiment>.csv` plus `summary.json`.
pub fn finish(out: &mut OutDir, reports: &[InequalityReport], extra: Value) -> Result<Outcome> {
    for r in reports {
        out.write(&format!("{}.csv", r.experiment), r.to_csv())?;
    }
    let passed = reports.iter().all(InequalityReport::passed);
    let mut summary = json!({
        "passed": passed,
        "reports": reports.iter().map(summarize).collect::<Vec<_>>(),
    });
    if let (Value::Object(s), Value::Object(e)) = (&mut summary, extra) {
        s.extend(e);
    }
    summary["files"] = json!(out.written().iter().chain(["summary.json".to_string()].iter()).collect::<Vec<_>>());
    out.write_json("summary.json", &summary)?;
    Ok(Outcome { passed, summary })
}

pub fn out_dir(out: &Option<PathBuf>) -> OutDir {
    OutDir::new(out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)))
}

struct Trials {
    fixed: Option<DiscreteSpace>,
    max_vertices: usize,
    count: usize,
    rng: ChaCha8Rng,
}

impl Trials {
    fn new(a: &impl AsTrial, default_count: usize) -> Result<Self> {
        let a = a.trial();
        let fixed = a.space.as_ref().map(load_space).transpose()?;
        let max_vertices = a.max_vertices.unwrap_or(DEFAULT_MAX_VERTICES);
        if max_vertices == 0 {
            bail!("invalid config: key `max_vertices` must be positive");
        }
        let count = a.trials.unwrap_or(default_count);
        if count == 0 {
            bail!("invalid config: key `trials` must be positive");
        }
        Ok(Self {
            fixed,
            max_vertices,
            count,
            rng: seeded(a.seed.unwrap_or(0)),
        })
    }

    fn next_space(&mut self) -> Result<Cow<'_, DiscreteSpace>> {
        match &self.fixed {
            Some(s) => Ok(Cow::Borrowed(s)),
            None => {
                let n = self.rng.random_range(1..=self.max_vertices);
                Ok(Cow::Owned(random_connected_graph(n, &mut self.rng)?))
            }
        }
    }

    fn source(&self) -> Value {
        match &self.fixed {
            Some(s) => json!({ "space_id": s.id(), "model": s.meta().model }),
            None => json!({ "random_graphs": true, "max_vertices": self.max_vertices }),
        }
    }
}

fn tag_trial(mut r: InequalityReport, trial: usize) -> InequalityReport {
    r.points.iter_mut().for_each(|p| p.frame = Some(trial));
    r
}

pub fn run_gamma(cmd: GammaCommand, cfg: Option<&Map<String, Value>>) -> Result<Outcome> {
    match cmd {
        GammaCommand::Kato(flags) => {
            let a = resolve(&flags, cfg)?;
            let mut trials = Trials::new(&a, 1000)?;
            let (mut plus, mut abs) = (Vec::new(), Vec::new());
            for t in 0..trials.count {
                let space = trials.next_space()?.into_owned();
                let f = noise_field(&space, &mut trials.rng);
                let w = noise_field(&space, &mut trials.rng);
                plus.push(tag_trial(kato_check(&space, &f, &w)?, t));
                if a.abs {
                    abs.push(tag_trial(kato_abs_check(&space, &f, &w)?, t));
                }
            }
            let mut reports = vec![InequalityReport::merge("kato", &plus, 0.0)];
            if a.abs {
                reports.push(InequalityReport::merge("kato_abs", &abs, 0.0));
            }
            let extra = json!({ "trials": trials.count, "source": trials.source(), "frame_column": "trial" });
            finish(&mut out_dir(&a.out), &reports, extra)
        }
        GammaCommand::Leibniz(flags) => {
            let a = resolve(&flags, cfg)?;
            let mut trials = Trials::new(&a, 1000)?;
            let mut points = Vec::new();
            for t in 0..trials.count {
                let space = trials.next_space()?.into_owned();
                let f = noise_field(&space, &mut trials.rng);
                let g = noise_field(&space, &mut trials.rng);
                let scale = leibniz_scale(&space, &f, &g);
                let d = leibniz_defect(&space, &f, &g)?;
                points.extend(d.values().iter().enumerate().map(|(x, v)| ReportPoint::new(x, Some(t), v.abs() / scale, EXACT_TOL)));
            }
            let report = InequalityReport::new("leibniz", points, 0.0);
            let extra = json!({ "trials": trials.count, "source": trials.source(), "frame_column": "trial", "lhs": "relative defect" });
            finish(&mut out_dir(&a.out), &[report], extra)
        }
        GammaCommand::Chain(flags) => {
            let a = resolve(&flags, cfg)?;
            let map_name = a.map.clone().unwrap_or_else(|| "exp".into());
            let eta: &dyn ScalarMap = match map_name.as_str() {
                "exp" => &Exp,
                "ln" => &Ln,
                "square" => &Square,
                other => bail!("invalid config: unknown map `{other}` for key `map`"),
            };
            let mut trials = Trials::new(&a, 1)?;
            let bound = a.max_defect.unwrap_or(f64::INFINITY);
            let mut points = Vec::new();
            let mut sup = 0.0f64;
            for t in 0..trials.count {
                let space = trials.next_space()?.into_owned();
                let mut f = noise_field(&space, &mut trials.rng);
                if map_name == "ln" {
                    f = f.map(|v| v + 2.0);
                }
                let d = chain_defect(&space, &f, eta)?;
                for x in space.interior().iter() {
                    sup = sup.max(d[x].abs());
                    points.push(ReportPoint::new(x, Some(t), d[x].abs(), bound));
                }
            }
            let report = InequalityReport::new(format!("chain_{map_name}"), points, 0.0);
            let extra = json!({ "trials": trials.count, "source": trials.source(), "sup_defect": sup, "frame_column": "trial" });
            finish(&mut out_dir(&a.out), &[report], extra)
        }
        GammaCommand::Bochner(flags) => {
            let a = resolve(&flags, cfg)?;
            let mut trials = Trials::new(&a, 20)?;
            let space = match &trials.fixed {
                Some(s) => s.clone(),
                None => bail!("missing required key `space`"),
            };
            let k = require(&a.k, "K")?;
            let n = match a.n {
                Some(d) => d.0,
                None => space.meta().n_ref.unwrap_or(f64::INFINITY),
            };
            let smooth = match a.fields.as_deref().unwrap_or("smooth") {
                "smooth" => true,
                "noise" => false,
                other => bail!("invalid config: unknown field kind `{other}` for key `fields`"),
            };
            let band = space.interior_band(a.band.unwrap_or(2));
            let mut reports = Vec::new();
            for t in 0..trials.count {
                let mut f = if smooth {
                    smooth_field(&space, &mut trials.rng)?
                } else {
                    noise_field(&space, &mut trials.rng)
                };
                if a.unit_gradient {
                    f = unit_gradient(&space, &f, &band)?;
                }
                let r = if a.improved {
                    improved_bochner_margin(&space, &f, k, n, a.eps_gamma.unwrap_or(1e-8))?
                } else {
                    bochner_margin(&space, &f, k, n)?
                };
                reports.push(tag_trial(r.restricted(&band), t));
            }
            let name = if a.improved { "improved_bochner" } else { "bochner" };
            let merged = InequalityReport::merge(name, &reports, 0.0)
                .with_param("K", k)
                .with_param("N", n)
                .with_h(space.meta().h);
            let extra = json!({ "trials": trials.count, "band_vertices": band.len(), "frame_column": "trial" });
            finish(&mut out_dir(&a.out), &[merged], extra)
        }
    }
}

pub fn run_curvature(cmd: CurvatureCommand, cfg: Option<&Map<String, Value>>) -> Result<Outcome> {
    match cmd {
        CurvatureCommand::Profile(flags) => {
            let a = resolve(&flags, cfg)?;
            let space = load_space(require(&a.space, "space")?)?;
            let n = require(&a.n, "N")?.0;
            let profile = curvature_profile(&space, n)?;
            let mut out = out_dir(&a.out);
            out.write("profile.csv", profile.to_csv())?;
            if a.emit_witness {
                for (v, w) in profile.witness.iter().enumerate() {
                    if let Some(w) = w {
                        out.write(&format!("witness/vertex_{v}.json"), field_to_json(&w.to_field(&space)?))?;
                    }
                }
            }
            let summary = json!({
                "passed": true,
                "N": Dim(n),
                "min_k_star": finite_or_null(profile.min()),
                "median_k_star": finite_or_null(profile.median()),
                "unbounded_below": profile.unbounded_below.iter().filter(|&&u| u).count(),
                "excluded": profile.excluded.len(),
                "files": out.written().iter().chain(["summary.json".to_string()].iter()).collect::<Vec<_>>(),
            });
            out.write_json("summary.json", &summary)?;
            Ok(Outcome { passed: true, summary })
        }
        CurvatureCommand::Verify(flags) => {
            let a = resolve(&flags, cfg)?;
            let space = load_space(require(&a.space, "space")?)?;
            let k = require(&a.k, "K")?;
            let n = require(&a.n, "N")?.0;
            let report = verify_cd(&space, k, n, a.trials.unwrap_or(100), a.seed.unwrap_or(0))?;
            finish(&mut out_dir(&a.out), &[report], json!({}))
        }
    }
}

pub fn run_maxprin(cmd: MaxprinCommand, cfg: Option<&Map<String, Value>>) -> Result<Outcome> {
    match cmd {
        MaxprinCommand::Elliptic(flags) => {
            let a = resolve(&flags, cfg)?;
            let mut trials = Trials::new(&a, 1000)?;
            let mut points = Vec::new();
            for t in 0..trials.count {
                let space = trials.next_space()?.into_owned();
                let region = random_region(&space, &mut trials.rng)?;
                let w = noise_field(&space, &mut trials.rng);
                let f = admissible_field(&space, &region, &mut trials.rng);
                let probe = max_principle_probe(&space, &f, &w, &region)?;
                points.extend(probe.points.iter().map(|p| ReportPoint::new(p.vertex, Some(t), p.quantity, 0.0)));
            }
            let report = InequalityReport::new("maxprin_elliptic", points, 0.0);
            let extra = json!({ "trials": trials.count, "source": trials.source(), "frame_column": "trial" });
            finish(&mut out_dir(&a.out), &[report], extra)
        }
        MaxprinCommand::Parabolic(flags) => {
            let a = resolve(&flags, cfg)?;
            let mut trials = Trials::new(&a, 1000)?;
            let frames = a.frames.unwrap_or(8);
            let dt = a.dt.unwrap_or(0.1);
            if frames < 2 {
                bail!("invalid config: key `frames` must be at least 2");
            }
            let t_end = (frames - 1) as f64 * dt;
            let delta = a.delta.unwrap_or(0.25 * t_end);
            let mut points = Vec::new();
            for _ in 0..trials.count {
                let space = trials.next_space()?.into_owned();
                let region = random_region(&space, &mut trials.rng)?;
                let w = noise_field(&space, &mut trials.rng);
                let tsf = admissible_series(&space, &region, frames, dt, (delta, t_end), &mut trials.rng)?;
                let probe = parabolic_max_probe(&space, &tsf, &w, &region, (delta, t_end))?;
                points.extend(probe.points.iter().map(|p| ReportPoint::new(p.vertex, p.frame, p.quantity, 0.0)));
            }
            let report = InequalityReport::new("maxprin_parabolic", points, 0.0);
            let extra = json!({ "trials": trials.count, "source": trials.source(), "window": [delta, t_end] });
            finish(&mut out_dir(&a.out), &[report], extra)
        }
    }
}
