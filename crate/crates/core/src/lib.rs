//! Reduced-order modeling with data-driven closure.
//!
//! The pipeline: generate full-order snapshots (`fom`), extract a POD basis
//! (`pod`), assemble the Galerkin reduced model (`galerkin`), extract the
//! exact closure term from data and fit a quadratic correction (`closure`),
//! then quantify the accuracy of the closed models (`diagnostics`).
//! Artifacts persist as JSON sidecar + raw f64 binary pairs (`io`).

pub mod closure;
pub mod diagnostics;
pub mod error;
pub mod fom;
pub mod galerkin;
pub mod grid;
pub mod io;
pub mod pod;
pub mod tensor;

pub use closure::{
    auto_ridge_lambda, d2vms_rhs, extract_closure_samples, fit_closure, fit_toy_closure, irom_rhs,
    toy_closure_samples, ClosureOperators, ClosureSamples, UnresolvedInterpolant,
};
pub use diagnostics::{
    compare, emit, field_error_series, in_space_error_series, ErrorReport, ErrorSeries,
    ReportFormat, ReportMeta, VariantErrors,
};
pub use error::{Result, RomError};
pub use fom::{
    solve_burgers, solve_toy, FomConfig, InitialCondition, SnapshotSet, ToySystem, TOY_DIM,
};
pub use galerkin::{assemble_operators, integrate_rom, RomLabel, RomOperators, RomTrajectory};
pub use grid::{Boundary, Grid1D};
pub use pod::{compute_pod, CoefficientSeries, PodBasis};
pub use tensor::Tensor3;
