//! Solver settings shared by the generating-function, minmax and semigroup layers.

use serde::{Deserialize, Serialize};

use crate::flow::{DELTA_TWIST, STEPS_PER_UNIT};

/// Number of broken-geodesics interior points `N` (the chain has `N + 1` steps).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepCount {
    Auto,
    Fixed(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub steps: StepCount,
    /// Starting `N` for the automatic doubling search.
    pub n_start: usize,
    pub n_max: usize,
    /// Lattice points across the reachable window, per parameter dimension.
    pub density: usize,
    /// Upper bound on lattice points per axis.
    pub lattice_cap: usize,
    pub delta_twist: f64,
    pub rk4_per_unit: f64,
    pub newton_max_iter: usize,
    pub newton_tol: f64,
    /// Lattice candidates polished per evaluation point.
    pub candidates: usize,
    /// Tolerance reported for a single minmax evaluation.
    pub tol_minmax: f64,
    /// Sup-norm tolerance of composite experiments.
    pub tol_solver: f64,
    pub tol_refine: f64,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            steps: StepCount::Auto,
            n_start: 4,
            n_max: 64,
            density: 41,
            lattice_cap: 4096,
            delta_twist: DELTA_TWIST,
            rk4_per_unit: STEPS_PER_UNIT,
            newton_max_iter: 50,
            newton_tol: 1e-10,
            candidates: 3,
            tol_minmax: 1e-6,
            tol_solver: 5e-3,
            tol_refine: 1e-4,
            seed: 0x5eed,
        }
    }
}

impl SolverConfig {
    pub fn with_steps(mut self, n: usize) -> Self {
        self.steps = StepCount::Fixed(n);
        self
    }

    /// One refinement level: `N -> 2N + 1` and a lattice twice as dense.
    pub fn refined(&self, n_current: usize) -> Self {
        let mut c = self.clone();
        c.steps = StepCount::Fixed(2 * n_current + 1);
        c.density = 2 * self.density - 1;
        c.lattice_cap = 2 * self.lattice_cap;
        c
    }
}
