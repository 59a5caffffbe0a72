//! Generating functions quadratic at infinity built from broken geodesics.

pub mod audit;
pub mod broken;
pub mod compose;
pub mod step;

pub use audit::{quadraticity_audit, rel_check, QuadraticityReport, RelReport};
pub use broken::{build_broken_gf, choose_step_count, BrokenGF, GfSummary, GfWindow, Signature};
pub use compose::{compose_gf, Composed, FnGf, GeneratingFunction};
pub use step::{step_gf, StepEval, StepGF};
