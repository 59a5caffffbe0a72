//! Hamilton's equations, characteristics launched from a datum, and the twist diagnostic.
//!
//! States carry the action `int (p . dx/dt - H) dt` integrated by the same RK4 stages
//! as the phase variables.

use serde::Serialize;
use std::f64::consts::TAU;

use crate::domain::hamiltonian::{dot, HamiltonianKind, HamiltonianSpec, Vec2, CUBIC_X_MAX};
use crate::domain::DatumSpec;
use crate::error::{Error, Result};

/// RK4 steps per unit time.
pub const STEPS_PER_UNIT: f64 = 200.0;

/// Default twist threshold on `|dx/dP|` (or `|det|` in 2-D).
pub const DELTA_TWIST: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PhaseState {
    pub t: f64,
    pub x: Vec2,
    pub p: Vec2,
    pub action: f64,
}

impl PhaseState {
    pub fn launch(t: f64, x: Vec2, p: Vec2) -> Self {
        PhaseState {
            t,
            x,
            p,
            action: 0.0,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite()
            && self.action.is_finite()
            && self.x.iter().chain(self.p.iter()).all(|v| v.is_finite())
    }
}

/// RK4 step count for an interval of length `dt` at the default resolution.
pub fn default_steps(dt: f64) -> usize {
    ((STEPS_PER_UNIT * dt.abs()).ceil() as usize).max(1)
}

/// `(dx/dt, dp/dt)` from checked slices.
pub fn vector_field(h: &HamiltonianSpec, t: f64, x: &[f64], p: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    h.vector_field(t, x, p)
}

#[inline]
fn rhs(h: &HamiltonianSpec, t: f64, x: &Vec2, p: &Vec2, dim: usize) -> (Vec2, Vec2, f64) {
    let (hp, hx) = h.gradient(t, x, p);
    let energy = h.h(t, x, p);
    let lag = dot(p, &hp, dim) - energy;
    ([hp[0], hp[1]], [-hx[0], -hx[1]], lag)
}

/// Fixed-step classical RK4 from `from` to time `t1` (either direction).
pub fn integrate(h: &HamiltonianSpec, from: &PhaseState, t1: f64, steps: usize) -> Result<PhaseState> {
    if steps == 0 {
        return Err(Error::Contract("integration needs at least one step".into()));
    }
    let dim = h.dim();
    let dt = (t1 - from.t) / steps as f64;
    let mut s = *from;
    let axpy = |a: &Vec2, k: f64, b: &Vec2| [a[0] + k * b[0], a[1] + k * b[1]];
    for n in 0..steps {
        let t = from.t + n as f64 * dt;
        let (k1x, k1p, k1a) = rhs(h, t, &s.x, &s.p, dim);
        let (k2x, k2p, k2a) = rhs(h, t + 0.5 * dt, &axpy(&s.x, 0.5 * dt, &k1x), &axpy(&s.p, 0.5 * dt, &k1p), dim);
        let (k3x, k3p, k3a) = rhs(h, t + 0.5 * dt, &axpy(&s.x, 0.5 * dt, &k2x), &axpy(&s.p, 0.5 * dt, &k2p), dim);
        let (k4x, k4p, k4a) = rhs(h, t + dt, &axpy(&s.x, dt, &k3x), &axpy(&s.p, dt, &k3p), dim);
        for i in 0..dim {
            s.x[i] += dt / 6.0 * (k1x[i] + 2.0 * k2x[i] + 2.0 * k3x[i] + k4x[i]);
            s.p[i] += dt / 6.0 * (k1p[i] + 2.0 * k2p[i] + 2.0 * k3p[i] + k4p[i]);
        }
        s.action += dt / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a);
        s.t = t + dt;
        if !s.is_finite() {
            return Err(Error::IntegrationBlowup { time: s.t });
        }
    }
    s.t = t1;
    Ok(s)
}

/// Largest energy deviation along an integration of an autonomous Hamiltonian.
pub fn energy_drift(h: &HamiltonianSpec, from: &PhaseState, t1: f64, steps: usize) -> Result<f64> {
    let e0 = h.h(from.t, &from.x, &from.p);
    let mut s = *from;
    let mut worst = 0.0f64;
    let dt = (t1 - from.t) / steps as f64;
    for n in 0..steps {
        s = integrate(h, &s, from.t + (n + 1) as f64 * dt, 1)?;
        worst = worst.max((h.h(s.t, &s.x, &s.p) - e0).abs());
    }
    Ok(worst)
}

/// Launch from `(x0, d sigma(x0))` at time 0 and integrate to `t`.
pub fn characteristics_from_datum(h: &HamiltonianSpec, d: &DatumSpec, x0: &[f64], t: f64) -> Result<PhaseState> {
    if !d.is_c1() {
        return Err(Error::Contract("characteristics need a C1 datum".into()));
    }
    if x0.len() != h.dim() {
        return Err(Error::Contract(format!(
            "launch point of dimension {} for a Hamiltonian of dimension {}",
            x0.len(),
            h.dim()
        )));
    }
    let x = crate::domain::hamiltonian::pad(x0);
    let p = d.gradient(&x)?;
    integrate(h, &PhaseState::launch(0.0, x, p), t, default_steps(t))
}

/// `sup` of `f(H_p, H_x)` over sampled `(t, x, p)` in the given box.
pub fn sup_over(h: &HamiltonianSpec, ts: (f64, f64), x_box: &[(f64, f64)], p_max: f64, f: impl Fn(&Vec2, &Vec2) -> f64) -> f64 {
    let dim = h.dim();
    let nx: usize = if dim == 1 { 64 } else { 16 };
    let np: usize = if dim == 1 { 81 } else { 21 };
    let mut best = 0.0f64;
    for it in 0..3 {
        let t = ts.0 + (ts.1 - ts.0) * it as f64 / 2.0;
        for ix in 0..nx.pow(dim as u32) {
            let mut x = [0.0; 2];
            let idx = [ix % nx, ix / nx];
            for k in 0..dim {
                x[k] = x_box[k].0 + (x_box[k].1 - x_box[k].0) * idx[k] as f64 / nx as f64;
            }
            for ip in 0..np.pow(dim as u32) {
                let jdx = [ip % np, ip / np];
                let mut p = [0.0; 2];
                for k in 0..dim {
                    p[k] = -p_max + 2.0 * p_max * jdx[k] as f64 / (np - 1) as f64;
                }
                let (hp, hx) = h.gradient(t, &x, &p);
                best = best.max(f(&hp, &hx));
            }
        }
    }
    best
}


/// Bound on `|p|` along characteristics issued from `d` during `ts`:
/// `1.1 (Lip(sigma) + |dt| sup|H_x|) + 0.1`.
pub fn momentum_bound(h: &HamiltonianSpec, d: &DatumSpec, x_box: &[(f64, f64)], ts: (f64, f64)) -> f64 {
    let slope = d.slope_bound(h.dim());
    let force = if h.is_pure_quadratic() {
        0.0
    } else {
        let reach = slope.max(h.support_radius()).max(2.0) + 1.0;
        sup_over(h, ts, x_box, reach, |_, hx| hx[0].hypot(hx[1]))
    };
    1.1 * (slope + (ts.1 - ts.0) * force) + 0.1
}

/// Sampling region for the twist diagnostic.
#[derive(Clone, Debug, Serialize)]
pub struct TwistWindow {
    pub x_box: Vec<(f64, f64)>,
    pub p_max: f64,
}

impl TwistWindow {
    /// One period of the torus (or the example's line window) times `|p| <= max(R_V, 2) + 1`.
    pub fn for_problem(h: &HamiltonianSpec) -> Self {
        let x_box = match h.kind {
            HamiltonianKind::CubicExample => vec![(-CUBIC_X_MAX, CUBIC_X_MAX)],
            _ => vec![(0.0, TAU); h.dim()],
        };
        TwistWindow {
            x_box,
            p_max: h.support_radius().max(2.0) + 1.0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TwistReport {
    pub s: f64,
    pub t: f64,
    pub samples: usize,
    /// Smallest `|dx/dP|` (1-D) or `|det dx/dP|` (2-D); zero when the sign changes in-window.
    pub min_derivative: f64,
    pub sign_change: bool,
    pub threshold: f64,
    pub pass: bool,
}

/// Finite-difference sweep of the momentum-to-endpoint derivative over `window`.
///
/// `samples` is the number of momentum samples per axis; positions use `samples / 4 + 2`
/// per axis.
pub fn twist_check(
    h: &HamiltonianSpec,
    s: f64,
    t: f64,
    samples: usize,
    window: &TwistWindow,
    threshold: f64,
) -> Result<TwistReport> {
    if !(s < t) || s < 0.0 || t > h.horizon + 1e-12 {
        return Err(Error::Contract(format!(
            "twist interval must satisfy 0 <= s < t <= T, got [{s}, {t}] with T = {}",
            h.horizon
        )));
    }
    let dim = h.dim();
    let samples = samples.max(3);
    if h.is_pure_quadratic() {
        let a = h
            .quadratic_part()
            .expect("pure quadratic Hamiltonians expose their form");
        let det = a.scaled(t - s).det().abs();
        return Ok(TwistReport {
            s,
            t,
            samples: 1,
            min_derivative: det,
            sign_change: false,
            threshold,
            pass: det >= threshold,
        });
    }
    let steps = default_steps(t - s);
    let fd = 1e-6;
    let nx = samples / 4 + 2;
    let endpoint = |x: Vec2, p: Vec2| integrate(h, &PhaseState::launch(s, x, p), t, steps).map(|st| st.x);
    let jac = |x: Vec2, p: Vec2| -> Result<f64> {
        let mut cols = [[0.0; 2]; 2];
        for k in 0..dim {
            let (mut pp, mut pm) = (p, p);
            pp[k] += fd;
            pm[k] -= fd;
            let (a, b) = (endpoint(x, pp)?, endpoint(x, pm)?);
            for i in 0..dim {
                cols[k][i] = (a[i] - b[i]) / (2.0 * fd);
            }
        }
        Ok(if dim == 1 {
            cols[0][0]
        } else {
            cols[0][0] * cols[1][1] - cols[1][0] * cols[0][1]
        })
    };
    let mut min_abs = f64::INFINITY;
    let mut sign_change = false;
    let mut count = 0;
    let mut reference_sign = 0.0f64;
    for ix in 0..nx.pow(dim as u32) {
        let mut x = [0.0; 2];
        let idx = [ix % nx, ix / nx];
        for k in 0..dim {
            let (lo, hi) = window.x_box[k];
            x[k] = lo + (hi - lo) * idx[k] as f64 / (nx - 1) as f64;
        }
        for ip in 0..samples.pow(dim as u32) {
            let jdx = [ip % samples, ip / samples];
            let mut p = [0.0; 2];
            for k in 0..dim {
                p[k] = -window.p_max + 2.0 * window.p_max * jdx[k] as f64 / (samples - 1) as f64;
            }
            let d = jac(x, p)?;
            count += 1;
            min_abs = min_abs.min(d.abs());
            if d != 0.0 {
                if reference_sign == 0.0 {
                    reference_sign = d.signum();
                } else if d.signum() != reference_sign {
                    sign_change = true;
                }
            }
        }
    }
    if sign_change {
        min_abs = 0.0;
    }
    Ok(TwistReport {
        s,
        t,
        samples: count,
        min_derivative: min_abs,
        sign_change,
        threshold,
        pass: min_abs >= threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::hamiltonian::{Potential, QuadForm};

    #[test]
    fn cubic_characteristic_matches_closed_form() {
        let h = HamiltonianSpec::cubic_example(5.0);
        let (x0, v, t) = (0.3, -1.2, 1.0);
        let s = integrate(&h, &PhaseState::launch(0.0, [x0, 0.0], [v, 0.0]), t, 200).unwrap();
        let x = x0 + t - 3.0 * v * v * t - 3.0 * v * t * t - t * t * t;
        assert!((s.x[0] - x).abs() < 1e-8);
        assert!((s.p[0] - (v + t)).abs() < 1e-12);
    }

    #[test]
    fn free_particle_action() {
        let h = HamiltonianSpec::free_particle(1.0);
        let s = integrate(&h, &PhaseState::launch(0.0, [0.0; 2], [1.0, 0.0]), 1.0, 200).unwrap();
        assert!((s.x[0] - 1.0).abs() < 1e-14);
        assert_eq!(s.p[0], 1.0);
        assert!((s.action - 0.5).abs() < 1e-14);
    }

    #[test]
    fn backward_undoes_forward() {
        let h = HamiltonianSpec::cubic_example(5.0);
        let a = PhaseState::launch(0.0, [0.2, 0.0], [0.1, 0.0]);
        let b = integrate(&h, &a, 1.0, 200).unwrap();
        let c = integrate(&h, &b, 0.0, 200).unwrap();
        assert!((c.x[0] - 0.2).abs() < 1e-7 && (c.p[0] - 0.1).abs() < 1e-7);
        assert!(c.action.abs() < 1e-7);
    }

    #[test]
    fn characteristics_examples() {
        let fp = HamiltonianSpec::free_particle(1.0);
        let s = characteristics_from_datum(&fp, &DatumSpec::constant(0.4), &[1.0], 1.0).unwrap();
        assert_eq!((s.x[0], s.p[0], s.action), (1.0, 0.0, 0.0));
        let s = characteristics_from_datum(&fp, &DatumSpec::cos(), &[std::f64::consts::FRAC_PI_2], 1.0).unwrap();
        assert!((s.x[0] - (std::f64::consts::FRAC_PI_2 - 1.0)).abs() < 1e-12);
        assert!((s.p[0] + 1.0).abs() < 1e-15);
        let cubic = HamiltonianSpec::cubic_example(5.0);
        let d = DatumSpec::cubic_branch(0.1).unwrap();
        let s = characteristics_from_datum(&cubic, &d, &[-1.0], 2.0).unwrap();
        let v = crate::domain::cubic_root(-1.0, crate::domain::ExampleBranch::VPlus).unwrap();
        assert!((s.p[0] - (v + 2.0)).abs() < 1e-10);
        assert!(characteristics_from_datum(&fp, &DatumSpec::shifted_abs_sine(0.0), &[1.0], 1.0).is_err());
    }

    #[test]
    fn twist_of_free_particle_is_exact() {
        let h = HamiltonianSpec::free_particle(2.0);
        let w = TwistWindow::for_problem(&h);
        let r = twist_check(&h, 0.25, 0.75, 9, &w, DELTA_TWIST).unwrap();
        assert_eq!(r.min_derivative, 0.5);
        assert!(r.pass);
    }

    #[test]
    fn twist_of_cubic_example_changes_sign() {
        let h = HamiltonianSpec::cubic_example(5.0);
        let w = TwistWindow {
            x_box: vec![(-CUBIC_X_MAX, CUBIC_X_MAX)],
            p_max: 2.0,
        };
        let long = twist_check(&h, 0.0, 2.0, 41, &w, DELTA_TWIST).unwrap();
        assert!(long.sign_change && !long.pass);
        // dx/dP = -3 eps (2P + eps) vanishes at P = -eps/2 for every step length
        let short = twist_check(&h, 0.0, 0.05, 41, &w, DELTA_TWIST).unwrap();
        assert!(short.sign_change && !short.pass);
    }

    #[test]
    fn perturbed_quadratic_twists_for_short_steps() {
        // sup |bump''| is about 21.07, so amp / R^2 below 1/21 keeps H convex
        let h = HamiltonianSpec::quadratic(QuadForm::scalar(1.0), Potential::cos_bump(0.02, 1.0), 1.0);
        let w = TwistWindow::for_problem(&h);
        let r = twist_check(&h, 0.0, 0.1, 21, &w, DELTA_TWIST).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(r.min_derivative > 0.05 && r.min_derivative <= 0.1 + 1e-6);
        let strong = HamiltonianSpec::quadratic(QuadForm::scalar(1.0), Potential::cos_bump(0.1, 1.0), 1.0);
        assert!(!twist_check(&strong, 0.0, 0.1, 41, &w, DELTA_TWIST).unwrap().pass);
    }

    #[test]
    fn energy_is_conserved() {
        let h = HamiltonianSpec::quadratic(QuadForm::scalar(1.0), Potential::cos_bump(0.3, 1.5), 1.0);
        let drift = energy_drift(&h, &PhaseState::launch(0.0, [0.4, 0.0], [0.7, 0.0]), 1.0, 200).unwrap();
        assert!(drift <= 1e-6, "{drift}");
    }
}
