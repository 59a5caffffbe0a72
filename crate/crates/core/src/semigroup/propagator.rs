//! The propagator `J^{t,t1}` on grid data.

use std::sync::Arc;

use serde::Serialize;

use crate::domain::{DatumSpec, HamiltonianSpec, SpaceGrid};
use crate::error::{Error, Result};
use crate::minmax::solve_slice;
use crate::settings::SolverConfig;

/// Relative separability defect below which 2-D grid data is split into two factors.
const SEPARABLE_DEFECT: f64 = 1e-9;

/// `J^{t,t1}`: data given at `t1` mapped to time `t` (either order).
#[derive(Clone, Debug)]
pub struct Propagator {
    pub h: Arc<HamiltonianSpec>,
    pub t1: f64,
    pub t: f64,
    pub cfg: SolverConfig,
}

/// How grid data re-entered the generating-function machinery.
#[derive(Clone, Debug, Serialize)]
pub struct SurrogateInfo {
    pub description: String,
    /// `max |f_ij - a_i - b_j|` when a factor split was attempted.
    pub separable_defect: Option<f64>,
}

impl Propagator {
    pub fn new(h: &HamiltonianSpec, t1: f64, t: f64, cfg: &SolverConfig) -> Self {
        Propagator {
            h: Arc::new(h.clone()),
            t1,
            t,
            cfg: cfg.clone(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.t == self.t1
    }

    /// `J^{t,t1}(d)` sampled on `grid`, with the step count used (0 for the identity).
    pub fn apply_datum(&self, d: &DatumSpec, grid: &SpaceGrid) -> Result<(Vec<f64>, usize)> {
        if grid.dim() != self.h.dim() {
            return Err(Error::Contract("grid and Hamiltonian dimensions differ".into()));
        }
        if self.is_identity() {
            return Ok((d.sample(grid)?, 0));
        }
        solve_slice(&self.h, d, self.t1, self.t, &grid.points(), &self.cfg)
    }

    /// `J^{t,t1}(f)` for grid data `f`, through its `C1` surrogate.
    pub fn apply_grid(&self, grid: &SpaceGrid, f: &[f64]) -> Result<(Vec<f64>, usize)> {
        if f.len() != grid.len() {
            return Err(Error::Contract(format!(
                "{} values for a grid of {} points",
                f.len(),
                grid.len()
            )));
        }
        if let Some(i) = f.iter().position(|v| !v.is_finite()) {
            return Err(Error::Contract(format!("grid value {i} is not finite")));
        }
        if self.is_identity() {
            return Ok((f.to_vec(), 0));
        }
        let (d, _) = surrogate(&self.h, grid, f)?;
        self.apply_datum(&d, grid)
    }
}

/// `J^{t,t1}(f)` on grid data.
pub fn propagate(pr: &Propagator, grid: &SpaceGrid, f: &[f64]) -> Result<Vec<f64>> {
    Ok(pr.apply_grid(grid, f)?.0)
}

/// Monotone cubic surrogate of grid data. Under a separable Hamiltonian, 2-D data that
/// splits as `a(x1) + b(x2)` becomes a separable datum so the block-separable solver applies.
pub fn surrogate(h: &HamiltonianSpec, grid: &SpaceGrid, f: &[f64]) -> Result<(DatumSpec, SurrogateInfo)> {
    if grid.dim() == 2 && h.split().is_some() {
        let (n0, n1) = (grid.axis(0).n, grid.axis(1).n);
        let a: Vec<f64> = (0..n0).map(|i| f[i * n1]).collect();
        let b: Vec<f64> = (0..n1).map(|j| f[j] - f[0]).collect();
        let scale = f.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let defect = (0..n0)
            .flat_map(|i| (0..n1).map(move |j| (i, j)))
            .map(|(i, j)| (f[i * n1 + j] - a[i] - b[j]).abs())
            .fold(0.0, f64::max);
        if defect <= SEPARABLE_DEFECT * scale {
            let g0 = SpaceGrid::new(vec![grid.axis(0).clone()])?;
            let g1 = SpaceGrid::new(vec![grid.axis(1).clone()])?;
            let d = DatumSpec::separable(
                DatumSpec::monotone_cubic(&g0, &a)?,
                DatumSpec::monotone_cubic(&g1, &b)?,
            );
            let info = SurrogateInfo {
                description: d.describe(),
                separable_defect: Some(defect),
            };
            return Ok((d, info));
        }
        let d = DatumSpec::monotone_cubic(grid, f)?;
        let info = SurrogateInfo {
            description: d.describe(),
            separable_defect: Some(defect),
        };
        return Ok((d, info));
    }
    let d = DatumSpec::monotone_cubic(grid, f)?;
    let info = SurrogateInfo {
        description: d.describe(),
        separable_defect: None,
    };
    Ok((d, info))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_returns_input_bit_for_bit() {
        let h = HamiltonianSpec::free_particle(1.0);
        let grid = SpaceGrid::torus1(32).unwrap();
        let f: Vec<f64> = grid.points().iter().map(|x| x[0].sin() + 0.3).collect();
        let pr = Propagator::new(&h, 0.4, 0.4, &SolverConfig::default());
        assert_eq!(propagate(&pr, &grid, &f).unwrap(), f);
    }

    #[test]
    fn forward_free_particle_at_origin() {
        let h = HamiltonianSpec::free_particle(1.0);
        let grid = SpaceGrid::torus1(16).unwrap();
        let pr = Propagator::new(&h, 0.0, 0.5, &SolverConfig::default());
        let (u, _) = pr.apply_datum(&DatumSpec::cos(), &grid).unwrap();
        assert!((u[0] - 1.0).abs() < 1e-9, "{}", u[0]);
    }

    #[test]
    fn backward_free_particle_is_a_sup_convolution() {
        let h = HamiltonianSpec::free_particle(1.0);
        let grid = SpaceGrid::torus1(16).unwrap();
        let pr = Propagator::new(&h, 0.5, 0.0, &SolverConfig::default());
        let (u, _) = pr.apply_datum(&DatumSpec::cos(), &grid).unwrap();
        // nested-grid oracle: coarse scan then a fine scan around the best point
        let tau = 0.5;
        for (i, x) in grid.points().iter().enumerate() {
            let x = x[0];
            let phi = |y: f64| y.cos() - (x - y) * (x - y) / (2.0 * tau);
            let mut best = (x, phi(x));
            for k in 0..=4000 {
                let y = x - 4.0 + 8.0 * k as f64 / 4000.0;
                if phi(y) > best.1 {
                    best = (y, phi(y));
                }
            }
            let c = best.0;
            for k in 0..=4000 {
                let y = c - 2e-3 + 4e-3 * k as f64 / 4000.0;
                best.1 = best.1.max(phi(y));
            }
            assert!((u[i] - best.1).abs() < 1e-6, "x={x}: {} vs {}", u[i], best.1);
        }
    }

    #[test]
    fn separable_grid_data_splits() {
        use crate::domain::{Potential, QuadForm};
        let h = HamiltonianSpec::quadratic(QuadForm::diag(1.0, -1.0), Potential::Zero, 1.0);
        let grid = SpaceGrid::torus2(12).unwrap();
        let f: Vec<f64> = grid.points().iter().map(|x| x[0].cos() + 2.0 * x[1].sin()).collect();
        let (d, info) = surrogate(&h, &grid, &f).unwrap();
        assert!(info.separable_defect.unwrap() < 1e-12);
        assert!(d.factors().is_some());
    }
}
