//! Grids, Hamiltonians, initial data and sampled solution fields.

pub mod cubic;
pub mod datum;
pub mod field;
pub mod grid;
pub mod hamiltonian;

pub use cubic::{cubic_root, CubicDatum, ExampleBranch};
pub use datum::{Builtin, DatumSpec, Smoothness};
pub use field::{oscillation, sup_distance, FieldMeta, LipschitzReport, Method, SolutionField};
pub use grid::{Axis, SpaceGrid};
pub use hamiltonian::{Convexity, HamiltonianKind, HamiltonianSpec, Potential, QuadForm, ScalarFn, Vec2};
