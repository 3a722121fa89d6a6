//! Carrier for every checked inequality `lhs ≤ rhs`, plus its CSV form.
//!
//! ```text
//! # experiment: <name>
//! # params: key=value;key=value
//! # h: <mesh parameter or blank>
//! # violation_count: <n>
//! # calibrated_constant: <value or blank>
//! vertex_id,lhs,rhs,margin[,frame]
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::IndexSet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportPoint {
    pub vertex: usize,
    pub frame: Option<usize>,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
}

impl ReportPoint {
    pub fn new(vertex: usize, frame: Option<usize>, lhs: f64, rhs: f64) -> Self {
        Self {
            vertex,
            frame,
            lhs,
            rhs,
            margin: rhs - lhs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Excluded {
    pub vertex: usize,
    pub frame: Option<usize>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub experiment: String,
    pub params: BTreeMap<String, f64>,
    pub h: Option<f64>,
    /// Margins below `-tol` count as violations.
    pub tol: f64,
    pub points: Vec<ReportPoint>,
    pub excluded: Vec<Excluded>,
    pub violation_count: usize,
    /// Magnitude of the most negative margin, 0 when nothing is violated.
    pub worst_violation: f64,
    pub min_margin: f64,
    pub sup_lhs: f64,
    pub calibrated_constant: Option<f64>,
}

impl InequalityReport {
    pub fn new(experiment: impl Into<String>, points: Vec<ReportPoint>, tol: f64) -> Self {
        let mut r = Self {
            experiment: experiment.into(),
            params: BTreeMap::new(),
            h: None,
            tol,
            points,
            excluded: Vec::new(),
            violation_count: 0,
            worst_violation: 0.0,
            min_margin: f64::INFINITY,
            sup_lhs: f64::NEG_INFINITY,
            calibrated_constant: None,
        };
        r.recompute();
        r
    }

    fn recompute(&mut self) {
        self.violation_count = self.points.iter().filter(|p| p.margin < -self.tol).count();
        self.min_margin = self.points.iter().map(|p| p.margin).fold(f64::INFINITY, f64::min);
        self.worst_violation = (-self.min_margin).max(0.0);
        self.sup_lhs = self.points.iter().map(|p| p.lhs).fold(f64::NEG_INFINITY, f64::max);
    }

    pub fn with_param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    pub fn with_h(mut self, h: f64) -> Self {
        self.h = Some(h);
        self
    }

    pub fn with_excluded(mut self, excluded: Vec<Excluded>) -> Self {
        self.excluded = excluded;
        self
    }

    /// Keeps only points whose vertex lies in `region`.
    pub fn restricted(&self, region: &IndexSet) -> Self {
        let mut r = self.clone();
        r.points.retain(|p| region.contains(p.vertex));
        r.excluded.retain(|e| region.contains(e.vertex));
        r.recompute();
        r
    }

    pub fn passed(&self) -> bool {
        self.violation_count == 0
    }

    /// Merges reports of the same experiment (e.g. many trials).
    pub fn merge(experiment: impl Into<String>, reports: &[InequalityReport], tol: f64) -> Self {
        let points = reports.iter().flat_map(|r| r.points.iter().copied()).collect();
        let excluded = reports.iter().flat_map(|r| r.excluded.iter().cloned()).collect();
        Self::new(experiment, points, tol).with_excluded(excluded)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let params: Vec<String> = self.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let _ = writeln!(out, "# experiment: {}", self.experiment);
        let _ = writeln!(out, "# params: {}", params.join(";"));
        let _ = writeln!(out, "# h: {}", opt(self.h));
        let _ = writeln!(out, "# violation_count: {}", self.violation_count);
        let _ = writeln!(out, "# calibrated_constant: {}", opt(self.calibrated_constant));
        let timed = self.points.iter().any(|p| p.frame.is_some());
        if timed {
            out.push_str("vertex_id,lhs,rhs,margin,frame\n");
        } else {
            out.push_str("vertex_id,lhs,rhs,margin\n");
        }
        for p in &self.points {
            let _ = write!(out, "{},{},{},{}", p.vertex, p.lhs, p.rhs, p.margin);
            if timed {
                let _ = write!(out, ",{}", p.frame.map(|f| f.to_string()).unwrap_or_default());
            }
            out.push('\n');
        }
        out
    }

    /// Parses the CSV form. Exclusions and the tolerance are not part of the
    /// file; the tolerance comes back as 0.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut experiment = None;
        let mut params = BTreeMap::new();
        let mut h = None;
        let mut calibrated = None;
        let mut points = Vec::new();
        let mut header_seen = false;
        let bad = |msg: String| Error::Corrupt(msg);
        let parse_f = |s: &str| s.trim().parse::<f64>().map_err(|e| bad(format!("bad number `{s}`: {e}")));
        for line in text.lines() {
            if let Some(rest) = line.strip_prefix("# ") {
                let (key, value) = rest.split_once(": ").unwrap_or((rest.trim_end_matches(':'), ""));
                let value = value.trim();
                match key {
                    "experiment" => experiment = Some(value.to_string()),
                    "params" => {
                        for kv in value.split(';').filter(|s| !s.is_empty()) {
                            let (k, v) = kv.split_once('=').ok_or_else(|| bad(format!("bad param `{kv}`")))?;
                            params.insert(k.to_string(), parse_f(v)?);
                        }
                    }
                    "h" if !value.is_empty() => h = Some(parse_f(value)?),
                    "calibrated_constant" if !value.is_empty() => calibrated = Some(parse_f(value)?),
                    _ => {}
                }
                continue;
            }
            if line.starts_with("vertex_id") {
                header_seen = true;
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            if !header_seen {
                return Err(bad("data row before column header".into()));
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() < 4 {
                return Err(bad(format!("short row `{line}`")));
            }
            let vertex = cols[0].parse().map_err(|_| bad(format!("bad vertex `{}`", cols[0])))?;
            let frame = match cols.get(4) {
                Some(s) if !s.is_empty() => Some(s.parse().map_err(|_| bad(format!("bad frame `{s}`")))?),
                _ => None,
            };
            points.push(ReportPoint {
                vertex,
                frame,
                lhs: parse_f(cols[1])?,
                rhs: parse_f(cols[2])?,
                margin: parse_f(cols[3])?,
            });
        }
        let experiment = experiment.ok_or_else(|| bad("missing experiment header".into()))?;
        let mut r = Self::new(experiment, points, 0.0);
        r.params = params;
        r.h = h;
        r.calibrated_constant = calibrated;
        Ok(r)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn statistics() {
        let pts = vec![
            ReportPoint::new(0, None, 1.0, 2.0),
            ReportPoint::new(1, None, 3.0, 2.0),
            ReportPoint::new(2, None, 2.0, 2.0 - 1e-13),
        ];
        let r = InequalityReport::new("t", pts, 1e-12);
        assert_eq!(r.violation_count, 1);
        assert_eq!(r.worst_violation, 1.0);
        assert_eq!(r.sup_lhs, 3.0);
        let sub = r.restricted(&IndexSet::new(vec![0, 2], 3).unwrap());
        assert!(sub.passed());
    }

    #[test]
    fn csv_round_trip() {
        let pts = vec![
            ReportPoint::new(0, Some(3), 0.1, 0.7),
            ReportPoint::new(5, Some(4), 1.0 / 3.0, -2.5e-17),
        ];
        let mut r = InequalityReport::new("li_yau", pts, 0.0)
            .with_param("alpha", 1.1)
            .with_param("K", 0.0)
            .with_h(0.05);
        r.calibrated_constant = Some(0.25);
        let back = InequalityReport::from_csv(&r.to_csv()).unwrap();
        assert_eq!(back, r);
    }
}
