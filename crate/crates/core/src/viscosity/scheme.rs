//! Monotone Lax-Friedrichs scheme for `u_t + H(t, x, u_x) = 0`.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::domain::hamiltonian::Vec2;
use crate::domain::{DatumSpec, FieldMeta, HamiltonianSpec, Method, SolutionField, SpaceGrid};
use crate::error::{Error, Result};
use crate::flow::{momentum_bound, sup_over};

/// Monotonicity limit on `dt * sum_k theta_k / dx_k`.
pub const CFL_LIMIT: f64 = 0.5;
/// Default working ratio.
pub const CFL_TARGET: f64 = 0.45;
/// Values beyond this magnitude count as a blowup.
pub const BLOWUP: f64 = 1e12;

/// Boundary value `(t, x) -> u`.
pub type BoundaryFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct LFConfig {
    pub grid: SpaceGrid,
    /// Time step (the largest one in local mode).
    pub dt: f64,
    /// Global viscosity coefficient per axis.
    pub theta: Vec<f64>,
    /// Local (Rusanov) coefficients from the momenta on each stencil; `dt` adapts per step.
    pub local: bool,
    pub cfl_target: f64,
    /// Prescribed value at the right end of a 1-D line grid (an inflow edge); without it
    /// both ends extrapolate.
    pub right_value: Option<BoundaryFn>,
}

impl fmt::Debug for LFConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LFConfig")
            .field("grid", &self.grid)
            .field("dt", &self.dt)
            .field("theta", &self.theta)
            .field("local", &self.local)
            .field("cfl_target", &self.cfl_target)
            .field("right_value", &self.right_value.is_some())
            .finish()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LFSummary {
    pub points: usize,
    pub spacing: Vec<f64>,
    pub theta: Vec<f64>,
    pub dt: f64,
    pub cfl_ratio: f64,
    pub local: bool,
}

impl LFConfig {
    /// Global coefficients from the momentum range reachable from `d` up to `t_max`.
    pub fn for_problem(h: &HamiltonianSpec, d: &DatumSpec, grid: &SpaceGrid, t_max: f64) -> Result<Self> {
        if grid.dim() != h.dim() {
            return Err(Error::Contract(format!(
                "grid of dimension {} for a Hamiltonian of dimension {}",
                grid.dim(),
                h.dim()
            )));
        }
        let x_box: Vec<(f64, f64)> = grid.axes().iter().map(|a| (a.lo, a.hi)).collect();
        let ts = (0.0, t_max.max(0.0));
        let p_max = momentum_bound(h, d, &x_box, ts);
        let theta: Vec<f64> = (0..h.dim())
            .map(|k| sup_over(h, ts, &x_box, p_max, |hp, _| hp[k].abs()))
            .collect();
        let mut cfg = LFConfig {
            grid: grid.clone(),
            dt: 0.0,
            theta,
            local: false,
            cfl_target: CFL_TARGET,
            right_value: None,
        };
        cfg.dt = cfg.stable_dt(&cfg.theta).min(0.01);
        Ok(cfg)
    }

    pub fn with_local(mut self, local: bool) -> Self {
        self.local = local;
        self
    }

    /// Largest `dt` meeting the target ratio for the given coefficients.
    pub fn stable_dt(&self, theta: &[f64]) -> f64 {
        let rate: f64 = theta
            .iter()
            .zip(self.grid.axes())
            .map(|(t, a)| t / a.spacing())
            .sum();
        if rate > 0.0 {
            self.cfl_target / rate
        } else {
            f64::INFINITY
        }
    }

    pub fn cfl_ratio(&self) -> f64 {
        self.dt
            * self
                .theta
                .iter()
                .zip(self.grid.axes())
                .map(|(t, a)| t / a.spacing())
                .sum::<f64>()
    }

    pub fn validate(&self) -> Result<()> {
        if self.theta.len() != self.grid.dim() {
            return Err(Error::Config("one viscosity coefficient per axis".into()));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("time step must be positive, got {}", self.dt)));
        }
        if self.theta.iter().any(|t| !(*t >= 0.0)) {
            return Err(Error::Config("viscosity coefficients must be nonnegative".into()));
        }
        if !self.local {
            let ratio = self.cfl_ratio();
            if ratio > CFL_LIMIT {
                return Err(Error::Cfl {
                    ratio,
                    limit: CFL_LIMIT,
                });
            }
        }
        if self.right_value.is_some() && (self.grid.dim() != 1 || self.grid.axis(0).periodic) {
            return Err(Error::Config("a prescribed right edge needs a 1-D line grid".into()));
        }
        Ok(())
    }

    pub fn summary(&self) -> LFSummary {
        LFSummary {
            points: self.grid.len(),
            spacing: self.grid.axes().iter().map(|a| a.spacing()).collect(),
            theta: self.theta.clone(),
            dt: self.dt,
            cfl_ratio: self.cfl_ratio(),
            local: self.local,
        }
    }
}

/// Neighbor table: `-1` marks a line boundary.
struct Stencil {
    left: Vec<Vec<i64>>,
    right: Vec<Vec<i64>>,
    inv_dx: Vec<f64>,
}

impl Stencil {
    fn new(grid: &SpaceGrid) -> Self {
        let dim = grid.dim();
        let mut left = vec![vec![-1; grid.len()]; dim];
        let mut right = vec![vec![-1; grid.len()]; dim];
        for i in 0..grid.len() {
            let idx = grid.multi_index(i);
            for k in 0..dim {
                let ax = grid.axis(k);
                if let Some(j) = ax.neighbor(idx[k], -1) {
                    let mut m = idx;
                    m[k] = j;
                    left[k][i] = grid.flat_index(m) as i64;
                }
                if let Some(j) = ax.neighbor(idx[k], 1) {
                    let mut m = idx;
                    m[k] = j;
                    right[k][i] = grid.flat_index(m) as i64;
                }
            }
        }
        Stencil {
            left,
            right,
            inv_dx: grid.axes().iter().map(|a| 1.0 / a.spacing()).collect(),
        }
    }

    /// One-sided differences at `i`; a missing side copies the other (linear extrapolation).
    fn diffs(&self, u: &[f64], i: usize, k: usize) -> (f64, f64) {
        let l = self.left[k][i];
        let r = self.right[k][i];
        let dm = (l >= 0).then(|| (u[i] - u[l as usize]) * self.inv_dx[k]);
        let dp = (r >= 0).then(|| (u[r as usize] - u[i]) * self.inv_dx[k]);
        match (dm, dp) {
            (Some(a), Some(b)) => (a, b),
            (Some(a), None) => (a, a),
            (None, Some(b)) => (b, b),
            (None, None) => (0.0, 0.0),
        }
    }
}

/// `max |dH/dp_k|` for `p_k` between `lo` and `hi`, other components at `p`.
fn local_speed(h: &HamiltonianSpec, t: f64, x: &Vec2, p: &Vec2, k: usize, lo: f64, hi: f64) -> f64 {
    let mut q = *p;
    let mut best = 0.0f64;
    let mut probe = |v: f64| {
        q[k] = v;
        best = best.max(h.gradient(t, x, &q).0[k].abs());
    };
    probe(lo);
    probe(hi);
    if lo < 0.0 && 0.0 < hi {
        probe(0.0);
    }
    for s in [0.25, 0.5, 0.75] {
        probe(lo + s * (hi - lo));
    }
    best
}

/// Lax-Friedrichs solution of `u_t + H = 0`, `u(0) = d`, sampled at `times`.
pub fn lf_solve(h: &HamiltonianSpec, d: &DatumSpec, cfg: &LFConfig, times: &[f64]) -> Result<SolutionField> {
    cfg.validate()?;
    let grid = &cfg.grid;
    if grid.dim() != h.dim() {
        return Err(Error::Contract("grid and Hamiltonian dimensions differ".into()));
    }
    if times.is_empty() || times[0] < 0.0 || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Contract("instants must be nonnegative and ordered".into()));
    }
    if let Some(&t) = times.last() {
        if t > h.horizon {
            return Err(Error::Contract(format!("instant {t} beyond the horizon {}", h.horizon)));
        }
    }
    let dim = grid.dim();
    let n = grid.len();
    let points = grid.points();
    let st = Stencil::new(grid);
    let mut u = d.sample(grid)?;
    if let Some(f) = &cfg.right_value {
        u[n - 1] = f(0.0, points[n - 1][0]);
    }
    let mut next = u.clone();
    let mut t = 0.0;
    let mut slices = Vec::with_capacity(times.len());
    let mut steps = 0usize;
    let mut max_ratio = 0.0f64;
    for &target in times {
        while t < target {
            let hi = if cfg.right_value.is_some() { n - 2 } else { n - 1 };
            // stencil momenta and coefficients
            let stencil: Vec<(Vec2, Vec2, Vec2)> = (0..=hi)
                .into_par_iter()
                .map(|i| {
                    let mut dm = [0.0; 2];
                    let mut dp = [0.0; 2];
                    for k in 0..dim {
                        let (a, b) = st.diffs(&u, i, k);
                        dm[k] = a;
                        dp[k] = b;
                    }
                    let pm = [0.5 * (dm[0] + dp[0]), 0.5 * (dm[1] + dp[1])];
                    let mut th = [0.0; 2];
                    for k in 0..dim {
                        th[k] = if cfg.local {
                            local_speed(h, t, &points[i], &pm, k, dm[k].min(dp[k]), dm[k].max(dp[k]))
                        } else {
                            cfg.theta[k]
                        };
                    }
                    (pm, [dp[0] - dm[0], dp[1] - dm[1]], th)
                })
                .collect();
            let dt = if cfg.local {
                let mut rate = 0.0f64;
                for (_, _, th) in &stencil {
                    let r: f64 = (0..dim).map(|k| th[k] * st.inv_dx[k]).sum();
                    rate = rate.max(r);
                }
                let stable = if rate > 0.0 { cfg.cfl_target / rate } else { f64::INFINITY };
                stable.min(cfg.dt)
            } else {
                cfg.dt
            };
            let dt = dt.min(target - t);
            if cfg.local {
                for (_, _, th) in &stencil {
                    let r: f64 = (0..dim).map(|k| th[k] * st.inv_dx[k]).sum();
                    max_ratio = max_ratio.max(dt * r);
                }
            }
            next[..=hi]
                .par_iter_mut()
                .enumerate()
                .for_each(|(i, out)| {
                    let (pm, jump, th) = &stencil[i];
                    let mut num = h.h(t, &points[i], pm);
                    for k in 0..dim {
                        num -= 0.5 * th[k] * jump[k];
                    }
                    *out = u[i] - dt * num;
                });
            if next[..=hi].iter().any(|v| !v.is_finite() || v.abs() > BLOWUP) {
                return Err(Error::SchemeBlowup { time: t + dt });
            }
            if let Some(f) = &cfg.right_value {
                next[n - 1] = f(t + dt, points[n - 1][0]);
            }
            std::mem::swap(&mut u, &mut next);
            t = if target - t <= dt { target } else { t + dt };
            steps += 1;
        }
        slices.push(u.clone());
    }
    let mut field = SolutionField::new(grid.clone(), times.to_vec(), slices, Method::Viscosity)?;
    let mut meta = FieldMeta::default();
    meta.tolerances.insert("cfl_ratio".into(), if cfg.local { max_ratio } else { cfg.cfl_ratio() });
    meta.notes.push(format!(
        "{} Lax-Friedrichs, {steps} steps, theta {:?}",
        if cfg.local { "local" } else { "global" },
        cfg.theta
    ));
    field.meta = meta;
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::hamiltonian::{ScalarFn, Convexity};

    #[test]
    fn constant_datum_is_stationary() {
        let h = HamiltonianSpec::free_particle(1.0);
        let grid = SpaceGrid::torus1(64).unwrap();
        let d = DatumSpec::constant(0.3);
        let cfg = LFConfig::for_problem(&h, &d, &grid, 1.0).unwrap();
        let f = lf_solve(&h, &d, &cfg, &[0.0, 0.5, 1.0]).unwrap();
        assert!(f.values.iter().flatten().all(|v| *v == 0.3));
    }

    #[test]
    fn transport_moves_the_profile() {
        let h = HamiltonianSpec::custom_1d(
            ScalarFn::Poly {
                coeffs: vec![0.0, 1.0],
                x_slope: 0.0,
            },
            Convexity::None,
            1.0,
        );
        let grid = SpaceGrid::torus1(256).unwrap();
        let cfg = LFConfig::for_problem(&h, &DatumSpec::cos(), &grid, 1.0).unwrap();
        let f = lf_solve(&h, &DatumSpec::cos(), &cfg, &[1.0]).unwrap();
        let err = grid
            .points()
            .iter()
            .zip(&f.values[0])
            .map(|(x, u)| (u - (x[0] - 1.0).cos()).abs())
            .fold(0.0, f64::max);
        assert!(err < 0.05, "{err}");
    }

    #[test]
    fn cfl_violation_is_reported() {
        let h = HamiltonianSpec::free_particle(1.0);
        let grid = SpaceGrid::torus1(64).unwrap();
        let mut cfg = LFConfig::for_problem(&h, &DatumSpec::cos(), &grid, 1.0).unwrap();
        cfg.dt = 2.0 * cfg.stable_dt(&cfg.theta);
        assert!(matches!(lf_solve(&h, &DatumSpec::cos(), &cfg, &[0.5]), Err(Error::Cfl { .. })));
    }
}
