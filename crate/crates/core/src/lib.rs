//! Discrete Γ-calculus, curvature-dimension checks and heat-flow gradient
//! estimates on weighted graphs.
//!
//! A [`DiscreteSpace`] is a connected weighted graph with vertex measure `μ`,
//! edge conductances `c` and edge lengths. On it the crate provides the
//! Laplacian, carré du champ and `Γ₂` ([`gamma`]), pointwise Bakry-Émery
//! curvature ([`curvature`]), implicit heat flow with the Li-Yau quantity
//! ([`heat`]), Poisson solves, the local Yau estimate and maximum-principle
//! probes ([`elliptic`]), and the closed-form bounds they are compared
//! against ([`estimates`]). Every checked inequality is returned as an
//! [`InequalityReport`].

pub mod curvature;
pub mod elliptic;
pub mod error;
pub mod estimates;
pub mod fieldio;
pub mod gamma;
pub mod heat;
pub mod linalg;
pub mod report;
pub mod sampling;
pub mod space;

pub use curvature::{curvature_at, curvature_profile, verify_cd, CurvatureAt, CurvatureProfile, Witness};
pub use elliptic::{
    busemann_harmonic, max_principle_probe, parabolic_max_probe, solve_poisson, yau_report, BoundaryValues,
    MaxPrincipleProbe, YauParams,
};
pub use error::{Error, Result};
pub use estimates::{calibrate_constant, convergence_sweep, evaluate_bound, BoundSpec, Calibration, SweepAxis, SweepResult};
pub use gamma::{
    bochner_margin, chain_defect, gamma, gamma2, improved_bochner_margin, kato_check, laplacian, leibniz_defect,
    steklov_average, weighted_laplacian, TimeSeriesField,
};
pub use heat::{
    build_cutoff, heat_kernel, li_yau_report, log_gradient_quantity, proof_trace, solve_heat, CutoffProfile,
    EstimateParams, ProofTrace,
};
pub use report::{Excluded, InequalityReport, ReportPoint};
pub use space::{DiscreteSpace, IndexSet, ScalarField};
