//! The solution operator `J^{t,t1}` as a two-parameter family and its measured properties.

pub mod audit;
pub mod mollify;
pub mod propagator;
pub mod report;

pub use audit::{hamiltonian_continuity_audit, hamiltonian_oscillation, nonexpansive_audit};
pub use mollify::{c0_solve, datum_distance, mollify, C0Solution};
pub use propagator::{propagate, surrogate, Propagator, SurrogateInfo};
pub use report::{
    hysteresis_residual, implication_table, markov_residual, sup_residual, Experiment,
    ImplicationTable, ResidualReport,
};
