//! Pointwise Bakry-Émery curvature.
//!
//! At a vertex `x`, `Γ₂(f)(x)`, `Γ(f)(x)` and `Lf(x)` depend only on `f` over
//! the combinatorial 2-ball of `x`, where they are quadratic and linear forms.
//! The largest `K` with `Γ₂(f)(x) ≥ (Lf(x))²/N + K Γ(f)(x)` for all `f` is
//! the smallest generalized eigenvalue of the pair `(A, B)`:
//!
//! ```text
//! A = form of Γ₂(·)(x) − (L·(x))²/N,    B = form of Γ(·)(x)
//! ```
//!
//! Constants are removed by pinning `f(x) = 0`. `B` is then diagonal and
//! supported on the neighbours of `x`; the remaining second-shell variables
//! span its kernel `Z` and are eliminated through a Schur complement.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::gamma;
use crate::report::{InequalityReport, ReportPoint};
use crate::space::{DiscreteSpace, ScalarField};

/// Minimizing test function, supported on the 2-ball and pinned to 0 at the
/// centre.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub vertex: usize,
    pub support: Vec<usize>,
    pub values: Vec<f64>,
}

impl Witness {
    /// Extends by zero to the whole space.
    pub fn to_field(&self, space: &DiscreteSpace) -> Result<ScalarField> {
        let mut v = vec![0.0; space.vertex_count()];
        for (&i, &x) in self.support.iter().zip(&self.values) {
            v[i] = x;
        }
        space.field(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolverStats {
    pub ball_size: usize,
    /// `|quotient(witness) − k_star|`, NaN when there is no witness.
    pub witness_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureAt {
    pub vertex: usize,
    /// `−∞` when the quotient is unbounded below.
    pub k_star: f64,
    pub unbounded_below: bool,
    pub witness: Option<Witness>,
    pub stats: SolverStats,
}

fn check_n(n: f64) -> Result<()> {
    if n > 1.0 {
        Ok(())
    } else {
        Err(invalid("N", format!("N must exceed 1 (or be infinite), got {n}")))
    }
}

/// Local quadratic forms at `x` over the 2-ball (centre first).
struct LocalForms {
    ball: Vec<usize>,
    a: DMatrix<f64>,
    b: DMatrix<f64>,
}

fn two_ball(space: &DiscreteSpace, x: usize) -> Vec<usize> {
    let mut ball = vec![x];
    for nb in space.neighbors(x) {
        ball.push(nb.vertex);
    }
    let first = ball.len();
    for k in 1..first {
        for nb in space.neighbors(ball[k]) {
            if !ball.contains(&nb.vertex) {
                ball.push(nb.vertex);
            }
        }
    }
    ball
}

fn local_forms(space: &DiscreteSpace, x: usize, n: f64) -> LocalForms {
    let ball = two_ball(space, x);
    let m = ball.len();
    let idx = |v: usize| ball.iter().position(|&b| b == v).expect("vertex in 2-ball");
    let mu = space.mu();

    // Γ(·)(y) and L·(y) for y in the 1-ball.
    let gamma_form = |y: usize| {
        let iy = idx(y);
        let mut g = DMatrix::zeros(m, m);
        for nb in space.neighbors(y) {
            let iz = idx(nb.vertex);
            let w = nb.conductance / (2.0 * mu[y]);
            g[(iz, iz)] += w;
            g[(iy, iy)] += w;
            g[(iz, iy)] -= w;
            g[(iy, iz)] -= w;
        }
        g
    };
    let lap_form = |y: usize| {
        let iy = idx(y);
        let mut l = DVector::zeros(m);
        for nb in space.neighbors(y) {
            let w = nb.conductance / mu[y];
            l[idx(nb.vertex)] += w;
            l[iy] -= w;
        }
        l
    };

    let gx = gamma_form(x);
    let lx = lap_form(x);
    let mut a = DMatrix::zeros(m, m);
    for nb in space.neighbors(x) {
        let y = nb.vertex;
        let iy = idx(y);
        let c = nb.conductance / mu[x];
        a += (gamma_form(y) - &gx) * (0.5 * c);
        let dl = lap_form(y) - &lx;
        let mut de = DVector::zeros(m);
        de[iy] = 1.0;
        de[0] = -1.0;
        let outer = &de * dl.transpose();
        a -= (&outer + outer.transpose()) * (0.25 * c);
    }
    if n.is_finite() {
        a -= &lx * lx.transpose() / n;
    }
    LocalForms { ball, a, b: gx }
}

fn quotient(forms: &LocalForms, f: &DVector<f64>) -> f64 {
    let num = f.dot(&(&forms.a * f));
    let den = f.dot(&(&forms.b * f));
    num / den
}

/// Largest `K` for which the Bochner inequality with dimension `n` holds at
/// `x` for every test function, together with a minimizer.
pub fn curvature_at(space: &DiscreteSpace, x: usize, n: f64) -> Result<CurvatureAt> {
    space.check_vertex(x)?;
    check_n(n)?;
    let forms = local_forms(space, x, n);
    let m = forms.ball.len();
    if m < 2 {
        return Err(Error::NoAdmissibleTestFunction(x));
    }
    // Pinned variables 1..m: range of B first, then its kernel.
    let scale = forms.b.amax().max(forms.a.amax());
    let zero = 1e-12 * scale;
    let (range, kernel): (Vec<usize>, Vec<usize>) = (1..m).partition(|&i| forms.b[(i, i)] > zero);
    if range.is_empty() {
        return Err(Error::NoAdmissibleTestFunction(x));
    }
    let sub = |rows: &[usize], cols: &[usize]| DMatrix::from_fn(rows.len(), cols.len(), |i, j| forms.a[(rows[i], cols[j])]);
    let a_rr = sub(&range, &range);
    let a_rz = sub(&range, &kernel);
    let a_zz = sub(&kernel, &kernel);

    let unbounded = |stats| CurvatureAt {
        vertex: x,
        k_star: f64::NEG_INFINITY,
        unbounded_below: true,
        witness: None,
        stats,
    };
    let stats = SolverStats {
        ball_size: m,
        witness_residual: f64::NAN,
    };

    // Pseudo-inverse of A_ZZ, with the unboundedness tests.
    let zz_pinv = if kernel.is_empty() {
        DMatrix::zeros(0, 0)
    } else {
        let eig = SymmetricEigen::new(a_zz);
        let mut pinv = DMatrix::zeros(kernel.len(), kernel.len());
        for (k, &lam) in eig.eigenvalues.iter().enumerate() {
            let v = eig.eigenvectors.column(k);
            if lam < -zero {
                return Ok(unbounded(stats));
            }
            if lam <= zero {
                if (&a_rz * v).amax() > zero {
                    return Ok(unbounded(stats));
                }
                continue;
            }
            pinv += v * v.transpose() / lam;
        }
        pinv
    };

    let schur = &a_rr - &a_rz * &zz_pinv * a_rz.transpose();
    let d_inv_sqrt: Vec<f64> = range.iter().map(|&i| 1.0 / forms.b[(i, i)].sqrt()).collect();
    let scaled = DMatrix::from_fn(range.len(), range.len(), |i, j| schur[(i, j)] * d_inv_sqrt[i] * d_inv_sqrt[j]);
    let scaled = (&scaled + scaled.transpose()) * 0.5;
    let eig = SymmetricEigen::new(scaled);
    let (kmin, &k_star) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty range");
    let v = eig.eigenvectors.column(kmin);
    let g_r = DVector::from_iterator(range.len(), v.iter().zip(&d_inv_sqrt).map(|(a, b)| a * b));
    let g_z = -(&zz_pinv * a_rz.transpose() * &g_r);

    let mut f = DVector::zeros(m);
    for (k, &i) in range.iter().enumerate() {
        f[i] = g_r[k];
    }
    for (k, &i) in kernel.iter().enumerate() {
        f[i] = g_z[k];
    }
    let residual = (quotient(&forms, &f) - k_star).abs();
    Ok(CurvatureAt {
        vertex: x,
        k_star,
        unbounded_below: false,
        witness: Some(Witness {
            vertex: x,
            support: forms.ball.clone(),
            values: f.iter().copied().collect(),
        }),
        stats: SolverStats {
            ball_size: m,
            witness_residual: residual,
        },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureProfile {
    pub n: f64,
    /// NaN at excluded vertices.
    pub k_star: Vec<f64>,
    pub unbounded_below: Vec<bool>,
    pub witness: Vec<Option<Witness>>,
    pub stats: Vec<SolverStats>,
    pub excluded: Vec<(usize, String)>,
}

impl CurvatureProfile {
    /// Minimum over non-excluded vertices.
    pub fn min(&self) -> f64 {
        self.k_star.iter().copied().filter(|k| !k.is_nan()).fold(f64::INFINITY, f64::min)
    }

    pub fn median(&self) -> f64 {
        let mut v: Vec<f64> = self.k_star.iter().copied().filter(|k| !k.is_nan()).collect();
        if v.is_empty() {
            return f64::NAN;
        }
        v.sort_by(f64::total_cmp);
        let m = v.len() / 2;
        if v.len() % 2 == 1 {
            v[m]
        } else {
            0.5 * (v[m - 1] + v[m])
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("vertex_id,k_star,excluded_reason\n");
        for (v, k) in self.k_star.iter().enumerate() {
            let reason = self
                .excluded
                .iter()
                .find(|(x, _)| *x == v)
                .map(|(_, r)| r.replace(',', ";"))
                .unwrap_or_default();
            let _ = writeln!(out, "{v},{k},{reason}");
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// [`curvature_at`] over every vertex, in parallel. Per-vertex failures are
/// recorded as exclusions.
pub fn curvature_profile(space: &DiscreteSpace, n: f64) -> Result<CurvatureProfile> {
    check_n(n)?;
    let results: Vec<Result<CurvatureAt>> = (0..space.vertex_count())
        .into_par_iter()
        .map(|x| curvature_at(space, x, n))
        .collect();
    let mut profile = CurvatureProfile {
        n,
        k_star: Vec::with_capacity(results.len()),
        unbounded_below: Vec::with_capacity(results.len()),
        witness: Vec::with_capacity(results.len()),
        stats: Vec::with_capacity(results.len()),
        excluded: Vec::new(),
    };
    for (x, r) in results.into_iter().enumerate() {
        match r {
            Ok(c) => {
                profile.k_star.push(c.k_star);
                profile.unbounded_below.push(c.unbounded_below);
                profile.witness.push(c.witness);
                profile.stats.push(c.stats);
            }
            Err(e) => {
                profile.k_star.push(f64::NAN);
                profile.unbounded_below.push(false);
                profile.witness.push(None);
                profile.stats.push(SolverStats::default());
                profile.excluded.push((x, e.to_string()));
            }
        }
    }
    Ok(profile)
}


/// Monte-Carlo check of `Γ₂(f) ≥ (Lf)²/N + K Γ(f)` at every vertex.
///
/// The report keeps, per vertex, the trial with the smallest margin. Margins
/// are compared against `1e-10·‖L‖²` (fields have unit sup norm).
pub fn verify_cd(space: &DiscreteSpace, k: f64, n: f64, trials: usize, seed: u64) -> Result<InequalityReport> {
    if trials == 0 {
        return Err(invalid("trials", "at least one trial is required"));
    }
    check_n(n)?;
    let inv_n = if n.is_infinite() { 0.0 } else { 1.0 / n };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: Vec<Option<ReportPoint>> = vec![None; space.vertex_count()];
    for _ in 0..trials {
        let f = crate::sampling::noise_field(space, &mut rng).into_values();
        let g2 = gamma::gamma2_values(space, &f);
        let lf = gamma::laplacian_values(space, &f);
        let gf = gamma::gamma_values(space, &f, &f);
        for x in 0..space.vertex_count() {
            let p = ReportPoint::new(x, None, lf[x] * lf[x] * inv_n + k * gf[x], g2[x]);
            if worst[x].is_none_or(|w| p.margin < w.margin) {
                worst[x] = Some(p);
            }
        }
    }
    let tol = 1e-10 * space.operator_scale().powi(2);
    Ok(InequalityReport::new("verify_cd", worst.into_iter().flatten().collect(), tol)
        .with_param("K", k)
        .with_param("N", n)
        .with_param("trials", trials as f64)
        .with_param("seed", seed as f64))
}
