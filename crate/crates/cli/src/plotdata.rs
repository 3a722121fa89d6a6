//! `report plotdata` bundles report files into plot-ready CSV; `report bound`
//! evaluates a closed-form bound.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Subcommand};
use gammalab::estimates::{evaluate_bound, BoundSpec};
use gammalab::InequalityReport;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::checks::{finite_or_null, out_dir};
use crate::config::{require, resolve};
use crate::Outcome;

#[derive(Args, Serialize, Deserialize, Default, Debug, Clone)]
#[serde(deny_unknown_fields, default)]
pub struct PlotdataArgs {
    /// Report CSVs, profile CSVs, sweep CSVs or Yau summaries.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub inputs: Option<Vec<PathBuf>>,
    /// Histogram bins for margins and curvature values.
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize, Deserialize, Default, Debug, Clone)]
#[serde(deny_unknown_fields, default)]
pub struct BoundArgs {
    /// Bound specification, e.g. `{"which":"li_yau_global","k":0,"n":2,"alpha":2,"t":1,"weak":false}`.
    #[arg(long, value_parser = parse_json)]
    pub spec: Option<Value>,
}

fn parse_json(s: &str) -> std::result::Result<Value, serde_json::Error> {
    serde_json::from_str(s)
}

#[derive(Subcommand)]
pub enum ReportCommand {
    /// Per-figure CSV bundles from report files.
    Plotdata(PlotdataArgs),
    /// Evaluate a closed-form bound.
    Bound(BoundArgs),
}

pub fn run(cmd: ReportCommand, cfg: Option<&Map<String, Value>>) -> Result<Outcome> {
    match cmd {
        ReportCommand::Plotdata(flags) => {
            let a = resolve(&flags, cfg)?;
            let inputs = a.inputs.clone().unwrap_or_default();
            let mut out = out_dir(&a.out);
            let summary = emit_plotdata(&inputs, a.bins.unwrap_or(20), &mut |name, text| out.write(name, text))?;
            out.write_json("bundle.json", &summary)?;
            Ok(Outcome { passed: true, summary })
        }
        ReportCommand::Bound(flags) => {
            let a = resolve(&flags, cfg)?;
            let spec: BoundSpec =
                serde_json::from_value(require(&a.spec, "spec")?).map_err(|e| anyhow!("invalid config: key `spec`: {e}"))?;
            let value = evaluate_bound(&spec)?;
            let parts = spec.decompose()?;
            Ok(Outcome {
                passed: true,
                summary: json!({
                    "which": spec.name(),
                    "value": finite_or_null(value),
                    "base": finite_or_null(parts.base),
                    "coef": parts.coef,
                    "constant": parts.constant,
                }),
            })
        }
    }
}

enum Input {
    Report(InequalityReport),
    Profile(Vec<f64>),
    Sweep(String),
    Sharpness(Vec<[f64; 5]>),
}

fn classify(path: &Path) -> Result<Input> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let first = text.lines().next().unwrap_or("");
    if first.starts_with("# experiment") {
        return Ok(Input::Report(InequalityReport::from_csv(&text)?));
    }
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap_or("");
    if header.starts_with("axis_value,") {
        return Ok(Input::Sweep(text));
    }
    if first.starts_with("vertex_id,k_star") {
        let ks = text
            .lines()
            .skip(1)
            .filter_map(|l| l.split(',').nth(1))
            .map(|v| v.parse::<f64>().map_err(|e| anyhow!("{}: {e}", path.display())))
            .collect::<Result<Vec<_>>>()?;
        return Ok(Input::Profile(ks));
    }
    if first.starts_with("beta,R,measured,leading,ratio") {
        let rows = text
            .lines()
            .skip(1)
            .map(|l| {
                let v: Vec<f64> = l.split(',').take(5).map(str::parse).collect::<std::result::Result<_, _>>()?;
                Ok([v[0], v[1], v[2], v[3], v[4]])
            })
            .collect::<std::result::Result<Vec<_>, std::num::ParseFloatError>>()
            .map_err(|e| anyhow!("{}: {e}", path.display()))?;
        return Ok(Input::Sharpness(rows));
    }
    if let Ok(Value::Object(obj)) = serde_json::from_str::<Value>(&text) {
        if let Some(Value::Array(rows)) = obj.get("sweep") {
            let field = |r: &Value, k: &str| r.get(k).and_then(Value::as_f64).unwrap_or(f64::NAN);
            return Ok(Input::Sharpness(
                rows.iter()
                    .map(|r| {
                        [
                            field(r, "beta"),
                            field(r, "R"),
                            field(r, "measured_sup"),
                            field(r, "leading_term"),
                            field(r, "ratio"),
                        ]
                    })
                    .collect(),
            ));
        }
    }
    bail!("{}: not a report, profile, sweep or Yau summary", path.display())
}

/// Equal-width histogram `bin_lo,bin_hi,count` of the finite values.
pub fn histogram(values: &[f64], bins: usize) -> String {
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    let mut out = String::from("bin_lo,bin_hi,count\n");
    if finite.is_empty() || bins == 0 {
        return out;
    }
    let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        let _ = writeln!(out, "{lo},{hi},{}", finite.len());
        return out;
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for v in finite {
        let b = (((v - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    for (b, c) in counts.iter().enumerate() {
        let _ = writeln!(out, "{},{},{c}", lo + b as f64 * width, lo + (b + 1) as f64 * width);
    }
    out
}

/// Writes one bundle per input through `write` and returns the index.
/// Output names are `<position>_<stem>_<kind>.csv`, so identical inputs give
/// identical bytes.
pub fn emit_plotdata(
    inputs: &[PathBuf],
    bins: usize,
    write: &mut dyn FnMut(&str, String) -> Result<()>,
) -> Result<Value> {
    if inputs.is_empty() {
        bail!("missing required key `inputs`: no report files given");
    }
    let classified = inputs.iter().map(|p| classify(p)).collect::<Result<Vec<_>>>()?;
    let mut entries = Vec::new();
    for (i, (path, input)) in inputs.iter().zip(classified).enumerate() {
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("input");
        let prefix = format!("{i:02}_{stem}");
        let mut entry = json!({ "input": path });
        let files: Vec<String> = match input {
            Input::Report(r) => {
                let margins: Vec<f64> = r.points.iter().map(|p| p.margin).collect();
                let name = format!("{prefix}_margins.csv");
                write(&name, histogram(&margins, bins))?;
                entry["experiment"] = json!(r.experiment);
                entry["violation_count"] = json!(r.violation_count);
                entry["min_margin"] = finite_or_null(r.min_margin);
                entry["calibrated_constant"] = json!(r.calibrated_constant);
                vec![name]
            }
            Input::Profile(ks) => {
                let name = format!("{prefix}_kstar_hist.csv");
                write(&name, histogram(&ks, bins))?;
                vec![name]
            }
            Input::Sweep(text) => {
                let name = format!("{prefix}_sweep.csv");
                write(&name, text)?;
                vec![name]
            }
            Input::Sharpness(rows) => {
                let mut csv = String::from("beta,R,measured,leading,ratio\n");
                for r in rows {
                    let _ = writeln!(csv, "{},{},{},{},{}", r[0], r[1], r[2], r[3], r[4]);
                }
                let name = format!("{prefix}_sharpness.csv");
                write(&name, csv)?;
                vec![name]
            }
        };
        entry["outputs"] = json!(files);
        entries.push(entry);
    }
    Ok(json!({ "passed": true, "bundles": entries }))
}
