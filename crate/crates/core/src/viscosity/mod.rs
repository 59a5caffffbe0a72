//! Lax-Friedrichs reference solutions and viscosity tests.

pub mod check;
pub mod scheme;
pub mod splitting;

pub use check::{
    differentials, tol_visc, viscosity_check, CheckEntry, Direction, PointDifferentials,
    ViscosityCheckReport,
};
pub use scheme::{lf_solve, BoundaryFn, LFConfig, LFSummary, CFL_LIMIT, CFL_TARGET};
pub use splitting::{
    example_field, example_probe, splitting_report, splitting_reports, GridMeta, SplittingConfig,
    SplittingReport,
};
