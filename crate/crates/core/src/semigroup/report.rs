//! Residual reports and the composition experiments.

use std::collections::BTreeMap;

use serde::Serialize;

use super::propagator::Propagator;
use crate::domain::{DatumSpec, HamiltonianSpec, SpaceGrid};
use crate::error::{Error, Result};
use crate::settings::SolverConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Markov,
    Hysteresis,
    Nonexpansive,
    Continuity,
    C0Cauchy,
}

#[derive(Clone, Debug, Serialize)]
pub struct ResidualReport {
    pub experiment: Experiment,
    pub instants: Vec<f64>,
    /// Sup-norm residual on the grid.
    pub residual: f64,
    /// Allowed residual before the tolerance is added (0 for identities).
    pub bound: f64,
    pub tolerance: f64,
    /// `bound + tolerance - residual`.
    pub slack: f64,
    pub pass: bool,
    /// Grid point where the residual is attained.
    pub worst_at: Vec<f64>,
    /// Broken-geodesics step counts of the solves involved.
    pub steps: Vec<usize>,
    pub details: BTreeMap<String, f64>,
    pub series: BTreeMap<String, Vec<f64>>,
}

impl ResidualReport {
    pub fn new(experiment: Experiment, instants: Vec<f64>, residual: f64, bound: f64, tolerance: f64, worst_at: Vec<f64>) -> Self {
        let slack = bound + tolerance - residual;
        ResidualReport {
            experiment,
            instants,
            residual,
            bound,
            tolerance,
            slack,
            pass: slack >= 0.0,
            worst_at,
            steps: Vec::new(),
            details: BTreeMap::new(),
            series: BTreeMap::new(),
        }
    }
}

/// `sup |a - b|` and the grid point where it is attained.
pub fn sup_residual(grid: &SpaceGrid, a: &[f64], b: &[f64]) -> (f64, Vec<f64>) {
    let mut best = (0.0f64, 0usize);
    for (i, (x, y)) in a.iter().zip(b).enumerate() {
        let r = (x - y).abs();
        if r > best.0 || r.is_nan() {
            best = (r, i);
        }
    }
    (best.0, grid.point(best.1)[..grid.dim()].to_vec())
}

/// `|| J^{t3,t2} J^{t2,t1} sigma - J^{t3,t1} sigma ||` on the grid.
pub fn markov_residual(
    h: &HamiltonianSpec,
    d: &DatumSpec,
    instants: (f64, f64, f64),
    grid: &SpaceGrid,
    cfg: &SolverConfig,
) -> Result<ResidualReport> {
    let (t1, t2, t3) = instants;
    if !(t1 <= t2 && t2 <= t3) {
        return Err(Error::Contract(format!("instants must be ordered, got ({t1}, {t2}, {t3})")));
    }
    let (direct, n_direct) = Propagator::new(h, t1, t3, cfg).apply_datum(d, grid)?;
    let (composed, n_first, n_second) = if t1 == t2 {
        // the identity hands the datum itself to the second factor
        let (u, n) = Propagator::new(h, t2, t3, cfg).apply_datum(d, grid)?;
        (u, 0, n)
    } else {
        let (mid, n_first) = Propagator::new(h, t1, t2, cfg).apply_datum(d, grid)?;
        let (u, n_second) = Propagator::new(h, t2, t3, cfg).apply_grid(grid, &mid)?;
        (u, n_first, n_second)
    };
    let (r, at) = sup_residual(grid, &composed, &direct);
    let mut rep = ResidualReport::new(Experiment::Markov, vec![t1, t2, t3], r, 0.0, cfg.tol_solver, at);
    rep.steps = vec![n_direct, n_first, n_second];
    Ok(rep)
}

/// `|| J^{t1,t2} J^{t2,t1} sigma - sigma ||` on the grid (either order of `t1`, `t2`).
pub fn hysteresis_residual(
    h: &HamiltonianSpec,
    d: &DatumSpec,
    t1: f64,
    t2: f64,
    grid: &SpaceGrid,
    cfg: &SolverConfig,
) -> Result<ResidualReport> {
    let sigma = d.sample(grid)?;
    let (there, n_out) = Propagator::new(h, t1, t2, cfg).apply_datum(d, grid)?;
    let (back, n_back) = Propagator::new(h, t2, t1, cfg).apply_grid(grid, &there)?;
    let (r, at) = sup_residual(grid, &back, &sigma);
    let mut rep = ResidualReport::new(Experiment::Hysteresis, vec![t1, t2], r, 0.0, cfg.tol_solver, at);
    rep.steps = vec![n_out, n_back];
    Ok(rep)
}

/// Measured relation between non-hysteresis and the Markov property on sampled instants.
#[derive(Clone, Debug, Serialize)]
pub struct ImplicationTable {
    /// `(t1, t2, residual)` for every ordered pair.
    pub hysteresis: Vec<(f64, f64, f64)>,
    /// `(t1, t2, t3, residual)` for every ordered triple.
    pub markov: Vec<(f64, f64, f64, f64)>,
    /// Largest hysteresis residual.
    pub delta: f64,
    pub markov_max: f64,
    pub tolerance: f64,
    /// Smallest `C` with `markov_max <= C delta + tolerance` (0 when no excess).
    pub constant: f64,
}

/// Hysteresis residuals on all pairs and Markov residuals on all ordered triples of
/// `instants`, with the measured constant linking them.
pub fn implication_table(
    h: &HamiltonianSpec,
    d: &DatumSpec,
    instants: &[f64],
    grid: &SpaceGrid,
    cfg: &SolverConfig,
) -> Result<ImplicationTable> {
    let mut ts = instants.to_vec();
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    if ts.len() < 3 {
        return Err(Error::Contract("implication table needs three distinct instants".into()));
    }
    let mut hysteresis = Vec::new();
    for i in 0..ts.len() {
        for j in i + 1..ts.len() {
            let r = hysteresis_residual(h, d, ts[i], ts[j], grid, cfg)?;
            hysteresis.push((ts[i], ts[j], r.residual));
        }
    }
    let mut markov = Vec::new();
    for i in 0..ts.len() {
        for j in i + 1..ts.len() {
            for k in j + 1..ts.len() {
                let r = markov_residual(h, d, (ts[i], ts[j], ts[k]), grid, cfg)?;
                markov.push((ts[i], ts[j], ts[k], r.residual));
            }
        }
    }
    let delta = hysteresis.iter().map(|r| r.2).fold(0.0, f64::max);
    let markov_max = markov.iter().map(|r| r.3).fold(0.0, f64::max);
    let excess = (markov_max - cfg.tol_solver).max(0.0);
    let constant = if excess == 0.0 {
        0.0
    } else if delta > 0.0 {
        excess / delta
    } else {
        f64::INFINITY
    };
    Ok(ImplicationTable {
        hysteresis,
        markov,
        delta,
        markov_max,
        tolerance: cfg.tol_solver,
        constant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_triple_is_the_identity_defect() {
        let h = HamiltonianSpec::free_particle(1.0);
        let grid = SpaceGrid::torus1(32).unwrap();
        let r = markov_residual(&h, &DatumSpec::cos(), (0.0, 0.0, 0.5), &grid, &SolverConfig::default()).unwrap();
        assert!(r.residual <= 1e-10, "{}", r.residual);
        let r = hysteresis_residual(&h, &DatumSpec::cos(), 0.3, 0.3, &grid, &SolverConfig::default()).unwrap();
        assert!(r.residual <= 1e-10);
    }

    #[test]
    fn unordered_instants_are_rejected() {
        let h = HamiltonianSpec::free_particle(1.0);
        let grid = SpaceGrid::torus1(8).unwrap();
        let r = markov_residual(&h, &DatumSpec::cos(), (0.5, 0.2, 0.7), &grid, &SolverConfig::default());
        assert!(matches!(r, Err(Error::Contract(_))));
    }

    #[test]
    fn hat_does_not_recover() {
        let h = HamiltonianSpec::free_particle(1.0);
        let grid = SpaceGrid::torus1(128).unwrap();
        let d = crate::semigroup::mollify(&DatumSpec::hat(3.0, 1.0, 1.0), 0.02).unwrap();
        let r = hysteresis_residual(&h, &d, 0.0, 0.5, &grid, &SolverConfig::default()).unwrap();
        assert!(r.residual > 0.05, "{}", r.residual);
    }
}
