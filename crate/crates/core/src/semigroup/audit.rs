//! Continuity of the solution operator in the datum and in the Hamiltonian.

use super::mollify::datum_distance;
use super::propagator::Propagator;
use super::report::{sup_residual, Experiment, ResidualReport};
use crate::domain::hamiltonian::Vec2;
use crate::domain::{oscillation, DatumSpec, HamiltonianSpec, SpaceGrid};
use crate::error::{Error, Result};
use crate::flow::momentum_bound;
use crate::settings::SolverConfig;

/// `||u1(t) - u2(t)|| <= ||sigma1 - sigma2|| + tol`.
pub fn nonexpansive_audit(
    h: &HamiltonianSpec,
    d1: &DatumSpec,
    d2: &DatumSpec,
    t: f64,
    grid: &SpaceGrid,
    cfg: &SolverConfig,
) -> Result<ResidualReport> {
    let pr = Propagator::new(h, 0.0, t, cfg);
    let (u1, n1) = pr.apply_datum(d1, grid)?;
    let (u2, n2) = pr.apply_datum(d2, grid)?;
    let (r, at) = sup_residual(grid, &u1, &u2);
    let bound = datum_distance(d1, d2, grid)?;
    let mut rep = ResidualReport::new(Experiment::Nonexpansive, vec![t], r, bound, cfg.tol_solver, at);
    rep.steps = vec![n1, n2];
    rep.details.insert("datum_distance".into(), bound);
    Ok(rep)
}

/// `sup (H1 - H2) - inf (H1 - H2)` over `[0, t] x box x {|p| <= p_max}`.
pub fn hamiltonian_oscillation(
    h1: &HamiltonianSpec,
    h2: &HamiltonianSpec,
    t: f64,
    x_box: &[(f64, f64)],
    p_max: f64,
) -> f64 {
    let dim = h1.dim();
    let nx: usize = if dim == 1 { 64 } else { 16 };
    let np: usize = if dim == 1 { 81 } else { 21 };
    let nt = 5;
    let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
    for it in 0..nt {
        let s = t * it as f64 / (nt - 1) as f64;
        for ix in 0..nx.pow(dim as u32) {
            let idx = [ix % nx, ix / nx];
            let mut x: Vec2 = [0.0; 2];
            for k in 0..dim {
                x[k] = x_box[k].0 + (x_box[k].1 - x_box[k].0) * idx[k] as f64 / nx as f64;
            }
            for ip in 0..np.pow(dim as u32) {
                let jdx = [ip % np, ip / np];
                let mut p: Vec2 = [0.0; 2];
                for k in 0..dim {
                    p[k] = -p_max + 2.0 * p_max * jdx[k] as f64 / (np - 1) as f64;
                }
                let v = h1.h(s, &x, &p) - h2.h(s, &x, &p);
                hi = hi.max(v);
                lo = lo.min(v);
            }
        }
    }
    hi - lo
}

/// `osc(u1(t) - u2(t)) <= t osc(H1 - H2) + tol`, oscillations taken over the visited window.
///
/// Removing the mean drift makes a constant shift of `H` cost nothing; the oscillation of
/// `u1 - u2` is bounded by `t` times that of `H1 - H2` because `u1 - u2 - c t` is bounded by
/// `t sup |H1 - H2 - c|` for every constant `c`.
pub fn hamiltonian_continuity_audit(
    h1: &HamiltonianSpec,
    h2: &HamiltonianSpec,
    d: &DatumSpec,
    t: f64,
    grid: &SpaceGrid,
    cfg: &SolverConfig,
) -> Result<ResidualReport> {
    if h1.dim() != h2.dim() {
        return Err(Error::Contract("Hamiltonians of different dimension".into()));
    }
    let (u1, n1) = Propagator::new(h1, 0.0, t, cfg).apply_datum(d, grid)?;
    let (u2, n2) = Propagator::new(h2, 0.0, t, cfg).apply_datum(d, grid)?;
    let diff: Vec<f64> = u1.iter().zip(&u2).map(|(a, b)| a - b).collect();
    let osc_u = oscillation(&diff);
    let x_box: Vec<(f64, f64)> = grid.axes().iter().map(|a| (a.lo, a.hi)).collect();
    let p_max = momentum_bound(h1, d, &x_box, (0.0, t)).max(momentum_bound(h2, d, &x_box, (0.0, t)));
    let osc_h = hamiltonian_oscillation(h1, h2, t, &x_box, p_max);
    let mean = 0.5 * (diff.iter().cloned().fold(f64::INFINITY, f64::min) + diff.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
    let centered: Vec<f64> = diff.iter().map(|v| v - mean).collect();
    let (_, at) = sup_residual(grid, &centered, &vec![0.0; centered.len()]);
    let mut rep = ResidualReport::new(Experiment::Continuity, vec![t], osc_u, t * osc_h, cfg.tol_solver, at);
    rep.steps = vec![n1, n2];
    rep.details.insert("hamiltonian_oscillation".into(), osc_h);
    rep.details.insert("mean_drift".into(), mean);
    rep.details.insert("momentum_window".into(), p_max);
    rep.details.insert("sup_difference".into(), diff.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    Ok(rep)
}
