//! Generating functions of single time steps `S(X_j, X_{j+1})`.

use std::sync::Arc;

use crate::domain::hamiltonian::{dot, HamiltonianSpec, QuadForm, Vec2};
use crate::error::{Error, Result};
use crate::flow::{integrate, PhaseState};
use crate::settings::SolverConfig;

#[derive(Clone, Debug)]
enum StepRepr {
    /// `<A^-1 dX, dX> / (2 eps) - c eps` for `H = <Ap, p>/2 + c`.
    Analytic { a_inv: QuadForm, constant: f64 },
    /// Shooting plus action quadrature.
    Numeric {
        rk4_steps: usize,
        max_iter: usize,
        tol: f64,
        guess: Option<QuadForm>,
    },
}

/// Value of a step generating function with the endpoint momenta of its characteristic.
///
/// `p_start = -dS/dX_j` and `p_end = dS/dX_{j+1}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepEval {
    pub value: f64,
    pub p_start: Vec2,
    pub p_end: Vec2,
}

#[derive(Clone, Debug)]
pub struct StepGF {
    h: Arc<HamiltonianSpec>,
    pub t0: f64,
    pub t1: f64,
    dim: usize,
    repr: StepRepr,
}

/// Step generating function over `[t0, t1]` (`t1 < t0` runs the flow backward).
///
/// The caller is responsible for the twist condition on the interval.
pub fn step_gf(h: &HamiltonianSpec, t0: f64, t1: f64, cfg: &SolverConfig) -> Result<StepGF> {
    StepGF::new(Arc::new(h.clone()), t0, t1, cfg)
}

impl StepGF {
    pub fn new(h: Arc<HamiltonianSpec>, t0: f64, t1: f64, cfg: &SolverConfig) -> Result<Self> {
        if !(t0.is_finite() && t1.is_finite()) || t0 == t1 {
            return Err(Error::Contract(format!(
                "step interval must have nonzero finite length, got [{t0}, {t1}]"
            )));
        }
        let dim = h.dim();
        let repr = if h.is_pure_quadratic() {
            let a = h
                .quadratic_part()
                .ok_or_else(|| Error::Contract("quadratic form unavailable".into()))?;
            let a_inv = a
                .inverse()
                .ok_or_else(|| Error::Contract("A must be nondegenerate".into()))?;
            StepRepr::Analytic {
                a_inv,
                constant: h.h(0.0, &[0.0; 2], &[0.0; 2]),
            }
        } else {
            StepRepr::Numeric {
                rk4_steps: ((cfg.rk4_per_unit * (t1 - t0).abs()).ceil() as usize).max(1),
                max_iter: cfg.newton_max_iter,
                tol: cfg.newton_tol,
                guess: h.quadratic_part().and_then(|a| a.inverse()),
            }
        };
        Ok(StepGF {
            h,
            t0,
            t1,
            dim,
            repr,
        })
    }

    pub fn eps(&self) -> f64 {
        self.t1 - self.t0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_analytic(&self) -> bool {
        matches!(self.repr, StepRepr::Analytic { .. })
    }

    pub fn hamiltonian(&self) -> &Arc<HamiltonianSpec> {
        &self.h
    }

    /// The quadratic form `sign(eps) A` this step contributes to the block form.
    pub fn block(&self) -> Option<QuadForm> {
        self.h
            .quadratic_part()
            .map(|a| if self.eps() < 0.0 { a.scaled(-1.0) } else { a })
    }

    /// `S` and the endpoint momenta for the characteristic from `x0` at `t0` to `x1` at `t1`.
    pub fn eval(&self, x0: &Vec2, x1: &Vec2) -> Result<StepEval> {
        let eps = self.eps();
        let d = self.dim;
        let dx = [x1[0] - x0[0], if d == 2 { x1[1] - x0[1] } else { 0.0 }];
        match &self.repr {
            StepRepr::Analytic { a_inv, constant } => {
                let eta = a_inv.apply(&dx);
                let p = [eta[0] / eps, eta[1] / eps];
                Ok(StepEval {
                    value: dot(&eta, &dx, d) / (2.0 * eps) - constant * eps,
                    p_start: p,
                    p_end: p,
                })
            }
            StepRepr::Numeric {
                rk4_steps,
                max_iter,
                tol,
                guess,
            } => self.shoot(x0, x1, &dx, *rk4_steps, *max_iter, *tol, guess.as_ref()),
        }
    }

    pub fn value(&self, x0: &Vec2, x1: &Vec2) -> Result<f64> {
        self.eval(x0, x1).map(|e| e.value)
    }

    #[allow(clippy::too_many_arguments)]
    fn shoot(
        &self,
        x0: &Vec2,
        x1: &Vec2,
        dx: &Vec2,
        steps: usize,
        max_iter: usize,
        tol: f64,
        guess: Option<&QuadForm>,
    ) -> Result<StepEval> {
        let d = self.dim;
        let eps = self.eps();
        let h = &*self.h;
        let run = |p: &Vec2| integrate(h, &PhaseState::launch(self.t0, *x0, *p), self.t1, steps);
        let resid = |s: &PhaseState| -> (Vec2, f64) {
            let r = [s.x[0] - x1[0], if d == 2 { s.x[1] - x1[1] } else { 0.0 }];
            (r, r[0].abs().max(r[1].abs()))
        };
        let mut p = match guess {
            Some(a_inv) => {
                let e = a_inv.apply(dx);
                [e[0] / eps, e[1] / eps]
            }
            None => [dx[0] / eps, dx[1] / eps],
        };
        let mut state = run(&p)?;
        let (mut r, mut norm) = resid(&state);
        let mut iterations = 0;
        while norm > tol {
            if iterations >= max_iter {
                return Err(Error::NoTwist {
                    t0: self.t0,
                    t1: self.t1,
                    iterations,
                    residual: norm,
                });
            }
            iterations += 1;
            let mut jac = [[0.0; 2]; 2];
            for k in 0..d {
                let delta = 1e-7 * (1.0 + p[k].abs());
                let mut pk = p;
                pk[k] += delta;
                let sk = run(&pk)?;
                for i in 0..d {
                    jac[i][k] = (sk.x[i] - state.x[i]) / delta;
                }
            }
            let step = if d == 1 {
                if jac[0][0] == 0.0 {
                    return Err(Error::NoTwist {
                        t0: self.t0,
                        t1: self.t1,
                        iterations,
                        residual: norm,
                    });
                }
                [-r[0] / jac[0][0], 0.0]
            } else {
                let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
                if det == 0.0 {
                    return Err(Error::NoTwist {
                        t0: self.t0,
                        t1: self.t1,
                        iterations,
                        residual: norm,
                    });
                }
                [
                    -(jac[1][1] * r[0] - jac[0][1] * r[1]) / det,
                    -(-jac[1][0] * r[0] + jac[0][0] * r[1]) / det,
                ]
            };
            let mut lambda = 1.0;
            let mut improved = false;
            for _ in 0..30 {
                let trial = [p[0] + lambda * step[0], p[1] + lambda * step[1]];
                if let Ok(s) = run(&trial) {
                    let (rt, nt) = resid(&s);
                    if nt < norm {
                        p = trial;
                        state = s;
                        r = rt;
                        norm = nt;
                        improved = true;
                        break;
                    }
                }
                lambda *= 0.5;
            }
            if !improved {
                return Err(Error::NoTwist {
                    t0: self.t0,
                    t1: self.t1,
                    iterations,
                    residual: norm,
                });
            }
        }
        Ok(StepEval {
            value: state.action,
            p_start: p,
            p_end: state.p,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::hamiltonian::Potential;

    #[test]
    fn analytic_examples() {
        let cfg = SolverConfig::default();
        let s = step_gf(&HamiltonianSpec::free_particle(1.0), 0.0, 0.25, &cfg).unwrap();
        assert!(s.is_analytic());
        assert_eq!(s.value(&[0.0; 2], &[1.0, 0.0]).unwrap(), 2.0);
        let concave = HamiltonianSpec::quadratic(QuadForm::scalar(-1.0), Potential::Zero, 1.0);
        let s = step_gf(&concave, 0.0, 0.5, &cfg).unwrap();
        assert_eq!(s.value(&[0.0; 2], &[1.0, 0.0]).unwrap(), -1.0);
    }

    #[test]
    fn numeric_step_matches_action_along_its_characteristic() {
        let cfg = SolverConfig::default();
        let h = HamiltonianSpec::quadratic(QuadForm::scalar(1.0), Potential::cos_bump(0.1, 1.0), 1.0);
        let s = step_gf(&h, 0.0, 0.1, &cfg).unwrap();
        assert!(!s.is_analytic());
        let e = s.eval(&[0.0; 2], &[0.05, 0.0]).unwrap();
        // independent quadrature: trapezoid on a fine explicit-midpoint trajectory
        let n = 20000;
        let dt = 0.1 / n as f64;
        let (mut x, mut p, mut a) = (0.0f64, e.p_start[0], 0.0f64);
        let lag = |x: f64, p: f64| {
            let (hp, _) = h.gradient(0.0, &[x, 0.0], &[p, 0.0]);
            p * hp[0] - h.h(0.0, &[x, 0.0], &[p, 0.0])
        };
        for _ in 0..n {
            let (hp, hx) = h.gradient(0.0, &[x, 0.0], &[p, 0.0]);
            let (xm, pm) = (x + 0.5 * dt * hp[0], p - 0.5 * dt * hx[0]);
            let (hpm, hxm) = h.gradient(0.0, &[xm, 0.0], &[pm, 0.0]);
            a += dt * lag(xm, pm);
            x += dt * hpm[0];
            p -= dt * hxm[0];
        }
        assert!((x - 0.05).abs() < 1e-8, "endpoint {x}");
        assert!((a - e.value).abs() < 1e-6, "{a} vs {}", e.value);
        assert!((p - e.p_end[0]).abs() < 1e-7);
    }

    #[test]
    fn backward_free_step_flips_sign() {
        let cfg = SolverConfig::default();
        let fp = HamiltonianSpec::free_particle(1.0);
        let fwd = step_gf(&fp, 0.0, 0.5, &cfg).unwrap();
        let bwd = step_gf(&fp, 0.5, 0.0, &cfg).unwrap();
        let (a, b) = ([0.2, 0.0], [1.1, 0.0]);
        assert_eq!(fwd.value(&a, &b).unwrap(), -bwd.value(&a, &b).unwrap());
        assert_eq!(bwd.block().unwrap().m[0][0], -1.0);
    }

    #[test]
    fn constant_shift_enters_linearly() {
        let cfg = SolverConfig::default();
        let h = HamiltonianSpec::free_particle(1.0).with_shift(0.2);
        let s = step_gf(&h, 0.0, 0.5, &cfg).unwrap();
        assert!((s.value(&[0.0; 2], &[0.0; 2]).unwrap() + 0.1).abs() < 1e-15);
    }
}
