//! Numerical laboratory for periodic homogenization of 2D linear elasticity.
//!
//! The crate builds 1-periodic elasticity coefficient fields, solves the
//! periodic cell problems for correctors and the effective tensor, solves
//! oscillating and homogenized boundary-value problems on structured meshes,
//! and runs the convergence-rate and boundary-uniformity studies that probe
//! the quantitative homogenization estimates at desk scale.

pub mod bvp;
pub mod cell;
pub mod coeff;
pub mod config;
pub mod error;
pub mod fem;
pub mod grid;
pub mod mesh;
pub mod norms;
pub mod reference;
pub mod report;
pub mod runner;
pub mod smoothing;
pub mod solver;
pub mod study;
pub mod tensor;
pub mod twoscale;

pub use bvp::{
    solve_dirichlet, solve_local, solve_neumann, Coefficients, DeltaCondition, DisplacementField,
    RigidBasis,
};
pub use cell::{
    b_field, cell_residuals, effective_tensor, flux_correctors, solve_cell, solve_correctors,
    BField, CellArtifacts, CellDiagnostics, CorrectorSet, EffectiveTensor, FluxCorrectorSet,
};
pub use coeff::{
    ellipticity_bounds, make_preset, verify_symmetries, PeriodicTensorField, Preset,
    SymmetryReport,
};
pub use config::{ExperimentConfig, StudyKind};
pub use error::{Error, Result};
pub use mesh::{build_domain, BoundaryTag, DomainKind, DomainMesh};
pub use norms::{norms, NormKind};
pub use smoothing::{cutoff, mollifier, mollify, mollify_twice, CutoffField, Mollifier};
pub use study::{fit_slope, RateReport};
pub use tensor::ElasticityTensor;
pub use twoscale::{two_scale_discrepancy, TwoScaleResult};
