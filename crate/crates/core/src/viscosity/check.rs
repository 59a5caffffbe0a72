//! Sub/supersolution tests on sampled fields.

use serde::Serialize;

use crate::domain::hamiltonian::pad;
use crate::domain::{HamiltonianSpec, SolutionField};
use crate::error::{Error, Result};

/// Spacing at which `tol_visc` takes its base value.
pub const BASE_SPACING: f64 = 6.0 / 256.0;

/// `1e-2 max(1, dx / (6/256))`.
pub fn tol_visc(dx: f64) -> f64 {
    1e-2 * (dx / BASE_SPACING).max(1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Test slopes from the superdifferential: `tau + H <= tol`.
    Sub,
    /// Test slopes from the subdifferential: `tau + H >= -tol`.
    Super,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckEntry {
    pub t: f64,
    pub x: Vec<f64>,
    pub direction: Direction,
    pub tau: f64,
    pub p: Vec<f64>,
    pub residual: f64,
    pub violated: bool,
}

/// Estimated one-sided quotients at one point.
#[derive(Clone, Debug, Serialize)]
pub struct PointDifferentials {
    pub t: f64,
    pub x: Vec<f64>,
    pub tau_minus: f64,
    pub tau_plus: f64,
    /// Per axis `(D-, D+)`.
    pub space: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ViscosityCheckReport {
    pub entries: Vec<CheckEntry>,
    pub differentials: Vec<PointDifferentials>,
    pub tolerance: f64,
    /// Largest excess over the tolerance (negative when every test passes).
    pub worst_violation: f64,
    pub pass: bool,
}

/// Richardson-improved one-sided quotient from samples at `0, s, 2s`.
fn richardson(u0: f64, u1: f64, u2: Option<f64>, s: f64) -> f64 {
    let d1 = (u1 - u0) / s;
    match u2 {
        Some(u2) => 2.0 * d1 - (u2 - u0) / (2.0 * s),
        None => d1,
    }
}

/// One-sided quotients of `u` at slice `k` and node `i`.
pub fn differentials(u: &SolutionField, k: usize, i: usize) -> Result<PointDifferentials> {
    let grid = &u.grid;
    let nt = u.times.len();
    let val = |kk: usize, ii: usize| u.values[kk][ii];
    let (tau_minus, tau_plus) = {
        let back = (k >= 1).then(|| {
            let s = u.times[k] - u.times[k - 1];
            let two = (k >= 2 && ((u.times[k] - u.times[k - 2]) - 2.0 * s).abs() <= 1e-9 * s)
                .then(|| val(k - 2, i));
            -richardson(val(k, i), val(k - 1, i), two, s)
        });
        let fwd = (k + 1 < nt).then(|| {
            let s = u.times[k + 1] - u.times[k];
            let two = (k + 2 < nt && ((u.times[k + 2] - u.times[k]) - 2.0 * s).abs() <= 1e-9 * s)
                .then(|| val(k + 2, i));
            richardson(val(k, i), val(k + 1, i), two, s)
        });
        match (back, fwd) {
            (Some(a), Some(b)) => (a, b),
            (Some(a), None) => (a, a),
            (None, Some(b)) => (b, b),
            (None, None) => {
                return Err(Error::Contract("time quotients need at least two slices".into()))
            }
        }
    };
    let idx = grid.multi_index(i);
    let mut space = Vec::new();
    for ax in 0..grid.dim() {
        let a = grid.axis(ax);
        let h = a.spacing();
        let step = |off: isize| -> Option<usize> {
            let j = a.neighbor(idx[ax], off)?;
            let mut m = idx;
            m[ax] = j;
            Some(grid.flat_index(m))
        };
        let u0 = val(k, i);
        let left = step(-1).map(|j| -richardson(u0, val(k, j), step(-2).map(|j2| val(k, j2)), h));
        let right = step(1).map(|j| richardson(u0, val(k, j), step(2).map(|j2| val(k, j2)), h));
        space.push(match (left, right) {
            (Some(a), Some(b)) => (a, b),
            (Some(a), None) => (a, a),
            (None, Some(b)) => (b, b),
            (None, None) => (0.0, 0.0),
        });
    }
    Ok(PointDifferentials {
        t: u.times[k],
        x: grid.point(i)[..grid.dim()].to_vec(),
        tau_minus,
        tau_plus,
        space,
    })
}

/// Tests the viscosity inequalities at `(t, x)` points of `u`.
///
/// Where the one-sided space quotients agree within the tolerance the point is treated as
/// smooth and both inequalities are tested at the averaged slopes. Where `D+ < D-` the
/// superdifferential `{tau} x [D+, D-]` is probed at its ends, its midpoint and every
/// supplied probe `(tau, p)` lying in it; `D+ > D-` is handled dually.
pub fn viscosity_check(
    u: &SolutionField,
    h: &HamiltonianSpec,
    points: &[(f64, Vec<f64>)],
    probes: &[(f64, Vec<f64>)],
    tol: f64,
) -> Result<ViscosityCheckReport> {
    let dim = u.grid.dim();
    let mut entries = Vec::new();
    let mut diffs = Vec::new();
    for (t, x) in points {
        let k = u
            .times
            .iter()
            .position(|s| (s - t).abs() <= 1e-12 * (1.0 + t.abs()))
            .ok_or_else(|| Error::Contract(format!("instant {t} is not a field slice")))?;
        let i = u
            .grid
            .node_of(x)
            .ok_or_else(|| Error::Contract(format!("{x:?} is not a grid node")))?;
        let d = differentials(u, k, i)?;
        let tau = 0.5 * (d.tau_minus + d.tau_plus);
        let xp = pad(x);
        let mut push = |direction: Direction, tau: f64, p: Vec<f64>| {
            let residual = tau + h.h(*t, &xp, &pad(&p));
            let violated = match direction {
                Direction::Sub => residual > tol,
                Direction::Super => residual < -tol,
            };
            entries.push(CheckEntry {
                t: *t,
                x: x.clone(),
                direction,
                tau,
                p,
                residual,
                violated,
            });
        };
        let mid: Vec<f64> = d.space.iter().map(|(a, b)| 0.5 * (a + b)).collect();
        let smooth = d.space.iter().all(|(a, b)| (a - b).abs() <= tol);
        if smooth {
            push(Direction::Sub, tau, mid.clone());
            push(Direction::Super, tau, mid);
        } else {
            let concave = d.space.iter().all(|(a, b)| b <= &(a + tol));
            let convex = d.space.iter().all(|(a, b)| a <= &(b + tol));
            // interval per axis in the order (low, high)
            let boxes: Vec<(f64, f64)> = d.space.iter().map(|(a, b)| (a.min(*b), a.max(*b))).collect();
            let corner = |lowhigh: usize| -> Vec<f64> {
                (0..dim)
                    .map(|ax| if lowhigh == 0 { boxes[ax].0 } else { boxes[ax].1 })
                    .collect()
            };
            for (flag, direction) in [(concave, Direction::Sub), (convex, Direction::Super)] {
                if !flag {
                    continue;
                }
                push(direction, tau, corner(0));
                push(direction, tau, corner(1));
                push(direction, tau, mid.clone());
                let (tlo, thi) = (d.tau_minus.min(d.tau_plus) - tol, d.tau_minus.max(d.tau_plus) + tol);
                for (pt, pp) in probes {
                    if pp.len() != dim {
                        return Err(Error::Contract("probe slope dimension mismatch".into()));
                    }
                    let inside = (0..dim).all(|ax| pp[ax] >= boxes[ax].0 - tol && pp[ax] <= boxes[ax].1 + tol);
                    if inside && *pt >= tlo && *pt <= thi {
                        push(direction, *pt, pp.clone());
                    }
                }
            }
        }
        diffs.push(d);
    }
    let worst_violation = entries
        .iter()
        .map(|e| match e.direction {
            Direction::Sub => e.residual - tol,
            Direction::Super => -e.residual - tol,
        })
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(ViscosityCheckReport {
        pass: entries.iter().all(|e| !e.violated),
        entries,
        differentials: diffs,
        tolerance: tol,
        worst_violation,
    })
}
