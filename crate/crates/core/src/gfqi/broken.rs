//! The broken-geodesics generating function
//! `S(x; xi, U) = sigma(xi) + sum_j S_j(X_j, X_{j+1})` with `X_0 = xi`, `X_{N+1} = x`.

use serde::Serialize;
use std::sync::Arc;

use super::step::{StepEval, StepGF};
use crate::domain::hamiltonian::{pad, HamiltonianSpec, QuadForm, Vec2};
use crate::domain::DatumSpec;
use crate::error::{Error, Result};
use crate::flow::{momentum_bound, sup_over, twist_check, TwistWindow};
use crate::settings::{SolverConfig, StepCount};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Signature {
    pub n_plus: usize,
    pub n_minus: usize,
}

/// Bounds that size the optimizer search and the quadraticity audit.
#[derive(Clone, Debug, Serialize)]
pub struct GfWindow {
    /// Bound on momenta along characteristics issued from the datum.
    pub p_max: f64,
    /// Bound on `|dH/dp|` for `|p| <= p_max`.
    pub v_max: f64,
    /// Per-step bound on `|X_{j+1} - X_j|` along those characteristics.
    pub step_reach: Vec<f64>,
    /// Per-step radius in `A^-1 dX` beyond which the step is exactly quadratic.
    pub quad_radius: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct GfSummary {
    pub n: usize,
    pub t_from: f64,
    pub t_to: f64,
    pub signature: Signature,
    pub analytic_steps: bool,
    pub window: GfWindow,
}

#[derive(Clone, Debug)]
pub struct BrokenGF {
    pub h: Arc<HamiltonianSpec>,
    /// Datum with any constant shift peeled off into `datum_offset`.
    pub datum: DatumSpec,
    pub datum_offset: f64,
    pub steps: Vec<StepGF>,
    pub window: GfWindow,
    /// `(start, period)` per axis on circles.
    pub periods: Vec<Option<(f64, f64)>>,
    dim: usize,
}

/// Generating function for the solution at time `t` launched from `d` at time 0.
pub fn build_broken_gf(h: &HamiltonianSpec, d: &DatumSpec, t: f64, steps: StepCount, cfg: &SolverConfig) -> Result<BrokenGF> {
    let mut c = cfg.clone();
    c.steps = steps;
    BrokenGF::between(Arc::new(h.clone()), d, 0.0, t, &c)
}

/// Smallest `N` (doubling from `n_start`) whose uniform partition passes the twist test.
///
/// The threshold is `delta_twist * min(1, |eps|^k)`: a short step has a proportionally small
/// endpoint derivative even when the flow twists well.
pub fn choose_step_count(h: &HamiltonianSpec, t_from: f64, t_to: f64, cfg: &SolverConfig) -> Result<usize> {
    if h.is_pure_quadratic() {
        // exact linear flow: dx/dP = eps A is invertible for every eps != 0
        return Ok(cfg.n_start);
    }
    let window = TwistWindow::for_problem(h);
    let samples = if h.dim() == 1 { 21 } else { 9 };
    let mut n = cfg.n_start.max(1);
    while n <= cfg.n_max {
        let eps = (t_to - t_from).abs() / (n + 1) as f64;
        let threshold = cfg.delta_twist * eps.min(1.0).powi(h.dim() as i32);
        let checks = if h.is_autonomous() { 1 } else { n + 1 };
        let lo = t_from.min(t_to);
        let mut ok = true;
        for j in 0..checks {
            let s = lo + j as f64 * eps;
            let r = twist_check(h, s, s + eps, samples, &window, threshold)?;
            if !r.pass {
                ok = false;
                break;
            }
        }
        if ok {
            return Ok(n);
        }
        n *= 2;
    }
    Err(Error::Construction { n_max: cfg.n_max })
}

impl BrokenGF {
    /// Chain from `t_from` to `t_to` (either order) for the datum `d` given at `t_from`.
    pub fn between(h: Arc<HamiltonianSpec>, d: &DatumSpec, t_from: f64, t_to: f64, cfg: &SolverConfig) -> Result<Self> {
        if !d.is_c1() {
            return Err(Error::Contract(format!(
                "{} is C0; mollify it before building a generating function",
                d.describe()
            )));
        }
        if t_from == t_to {
            return Err(Error::Contract("generating function needs t_from != t_to".into()));
        }
        for t in [t_from, t_to] {
            if t < -1e-12 || t > h.horizon + 1e-12 {
                return Err(Error::Contract(format!(
                    "instant {t} outside [0, {}]",
                    h.horizon
                )));
            }
        }
        let dim = h.dim();
        let a = h.quadratic_part().ok_or_else(|| {
            Error::Unsupported("Hamiltonian has no quadratic form at infinity".into())
        })?;
        let n = match cfg.steps {
            StepCount::Fixed(n) => n,
            StepCount::Auto => choose_step_count(&h, t_from, t_to, cfg)?,
        };
        let eps = (t_to - t_from) / (n + 1) as f64;
        let steps = (0..=n)
            .map(|j| {
                let t0 = t_from + j as f64 * eps;
                let t1 = if j == n { t_to } else { t_from + (j + 1) as f64 * eps };
                StepGF::new(h.clone(), t0, t1, cfg)
            })
            .collect::<Result<Vec<_>>>()?;
        let periods = d.periods(dim);
        let natural = d.natural_box(dim);
        let x_box: Vec<(f64, f64)> = (0..dim)
            .map(|k| match periods[k] {
                Some((lo, p)) => (lo, lo + p),
                None => natural[k],
            })
            .collect();
        let r_v = h.support_radius();
        let ts = (t_from.min(t_to), t_from.max(t_to));
        let p_max = momentum_bound(&h, d, &x_box, ts);
        let v_max = if h.is_pure_quadratic() {
            a.norm() * p_max * 2f64.sqrt()
        } else {
            sup_over(&h, ts, &x_box, p_max, |hp, _| hp[0].hypot(hp[1]))
        };
        let window = GfWindow {
            p_max,
            v_max,
            step_reach: steps.iter().map(|s| s.eps().abs() * v_max).collect(),
            quad_radius: steps.iter().map(|s| s.eps().abs() * r_v).collect(),
        };
        let (base, datum_offset) = d.peel_shift();
        Ok(BrokenGF {
            h,
            datum: base.clone(),
            datum_offset,
            steps,
            window,
            periods,
            dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of interior chain points `N`.
    pub fn n(&self) -> usize {
        self.steps.len() - 1
    }

    pub fn t_from(&self) -> f64 {
        self.steps[0].t0
    }

    pub fn t_to(&self) -> f64 {
        self.steps[self.steps.len() - 1].t1
    }

    /// Number of scalar parameters `(xi, U)`.
    pub fn param_count(&self) -> usize {
        self.steps.len() * self.dim
    }

    /// Block-diagonal form at infinity, one `sign(eps) A` per step.
    pub fn blocks(&self) -> Vec<QuadForm> {
        self.steps
            .iter()
            .map(|s| s.block().expect("built chains have a quadratic form"))
            .collect()
    }

    pub fn signature(&self) -> Signature {
        let mut sig = Signature {
            n_plus: 0,
            n_minus: 0,
        };
        for b in self.blocks() {
            let (p, m) = b.signature();
            sig.n_plus += p;
            sig.n_minus += m;
        }
        sig
    }

    pub fn summary(&self) -> GfSummary {
        GfSummary {
            n: self.n(),
            t_from: self.t_from(),
            t_to: self.t_to(),
            signature: self.signature(),
            analytic_steps: self.steps.iter().all(|s| s.is_analytic()),
            window: self.window.clone(),
        }
    }

    /// Nodes `X_0 = xi, X_1..X_N, X_{N+1} = x` from a flat parameter vector.
    pub fn nodes(&self, x: &Vec2, params: &[f64]) -> Vec<Vec2> {
        let k = self.dim;
        let mut out: Vec<Vec2> = params.chunks(k).map(pad).collect();
        out.push(*x);
        out
    }

    /// Checked evaluation of `S(x; xi, U)`.
    pub fn value(&self, x: &[f64], params: &[f64]) -> Result<f64> {
        if x.len() != self.dim || params.len() != self.param_count() {
            return Err(Error::Contract(format!(
                "expected x of dimension {} and {} parameters, got {} and {}",
                self.dim,
                self.param_count(),
                x.len(),
                params.len()
            )));
        }
        self.value_nodes(&self.nodes(&pad(x), params))
    }

    pub fn value_nodes(&self, nodes: &[Vec2]) -> Result<f64> {
        Ok(self.value_nodes_core(nodes)? + self.datum_offset)
    }

    /// `S` without the peeled datum constant.
    pub fn value_nodes_core(&self, nodes: &[Vec2]) -> Result<f64> {
        let mut s = self.datum.value(&nodes[0])?;
        for (j, step) in self.steps.iter().enumerate() {
            s += step.value(&nodes[j], &nodes[j + 1])?;
        }
        Ok(s)
    }

    /// Value and gradient with respect to every node (the last entry is `dS/dx`).
    pub fn value_grad_nodes(&self, nodes: &[Vec2]) -> Result<(f64, Vec<Vec2>)> {
        let (v, g) = self.value_grad_nodes_core(nodes)?;
        Ok((v + self.datum_offset, g))
    }

    /// As [`Self::value_grad_nodes`] without the peeled datum constant.
    pub fn value_grad_nodes_core(&self, nodes: &[Vec2]) -> Result<(f64, Vec<Vec2>)> {
        let n = self.steps.len();
        let mut grad = vec![[0.0; 2]; n + 1];
        let mut s = self.datum.value(&nodes[0])?;
        grad[0] = self.datum.gradient(&nodes[0])?;
        for (j, step) in self.steps.iter().enumerate() {
            let StepEval {
                value,
                p_start,
                p_end,
            } = step.eval(&nodes[j], &nodes[j + 1])?;
            s += value;
            for i in 0..self.dim {
                grad[j][i] -= p_start[i];
                grad[j + 1][i] += p_end[i];
            }
        }
        Ok((s, grad))
    }

    /// Concatenate `self` over `[a, b]` with `next` over `[b, c]`; the junction becomes a parameter.
    pub fn compose(&self, next: &BrokenGF) -> Result<BrokenGF> {
        if self.dim != next.dim {
            return Err(Error::Contract("dimension mismatch in composition".into()));
        }
        if (self.t_to() - next.t_from()).abs() > 1e-12 {
            return Err(Error::Contract(format!(
                "chains do not meet: {} vs {}",
                self.t_to(),
                next.t_from()
            )));
        }
        let mut steps = self.steps.clone();
        steps.extend(next.steps.iter().cloned());
        let mut window = self.window.clone();
        window.p_max = window.p_max.max(next.window.p_max);
        window.v_max = window.v_max.max(next.window.v_max);
        window.step_reach = steps.iter().map(|s| s.eps().abs() * window.v_max).collect();
        window.quad_radius.extend(next.window.quad_radius.iter().copied());
        Ok(BrokenGF {
            h: self.h.clone(),
            datum: self.datum.clone(),
            datum_offset: self.datum_offset,
            steps,
            window,
            periods: self.periods.clone(),
            dim: self.dim,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::characteristics_from_datum;

    #[test]
    fn stationary_points_are_characteristics() {
        let h = HamiltonianSpec::free_particle(1.0);
        let g = build_broken_gf(&h, &DatumSpec::cos(), 0.5, StepCount::Fixed(1), &SolverConfig::default()).unwrap();
        for &x0 in &[0.3, 1.2, 2.9, 4.4] {
            let end = characteristics_from_datum(&h, &DatumSpec::cos(), &[x0], 0.5).unwrap();
            let mid = characteristics_from_datum(&h, &DatumSpec::cos(), &[x0], 0.25).unwrap();
            let nodes = vec![[x0, 0.0], mid.x, end.x];
            let (_, grad) = g.value_grad_nodes(&nodes).unwrap();
            assert!(grad[0][0].abs() < 1e-6 && grad[1][0].abs() < 1e-6, "{grad:?}");
            assert!((grad[2][0] - end.p[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_time_limit_of_straight_chain() {
        let h = HamiltonianSpec::free_particle(1.0);
        let g = build_broken_gf(&h, &DatumSpec::cos(), 1e-9, StepCount::Fixed(3), &SolverConfig::default()).unwrap();
        let x = 0.7;
        assert_eq!(g.value(&[x], &[x; 4]).unwrap(), x.cos());
    }

    #[test]
    fn concave_signature() {
        let h = HamiltonianSpec::quadratic(QuadForm::scalar(-1.0), crate::domain::Potential::Zero, 1.0);
        let g = build_broken_gf(&h, &DatumSpec::cos(), 0.5, StepCount::Fixed(4), &SolverConfig::default()).unwrap();
        assert_eq!(g.signature(), Signature { n_plus: 0, n_minus: 5 });
    }

    #[test]
    fn c0_datum_is_rejected() {
        let h = HamiltonianSpec::free_particle(1.0);
        assert!(build_broken_gf(&h, &DatumSpec::shifted_abs_sine(0.0), 0.5, StepCount::Auto, &SolverConfig::default()).is_err());
    }
}
