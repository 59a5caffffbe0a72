//! Maxmin/minmax bounds for separable convex-concave Hamiltonians with coupled data.
//!
//! With pure quadratic factors the interior chain parameters are eliminated in closed
//! form, leaving `F(xi) = sigma(xi) + (x_p - xi_p)^2/(2 t a_p) + (x_m - xi_m)^2/(2 t a_m) - c t`
//! over the two endpoint parameters.

use serde::Serialize;

use crate::domain::hamiltonian::Vec2;
use crate::error::{Error, Result};
use crate::gfqi::BrokenGF;
use crate::optim::golden_min;

/// Inner scan points before golden refinement.
const INNER_SCAN: usize = 64;
const OUTER_SCAN: usize = 48;
const GOLDEN_TOL: f64 = 1e-10;

#[derive(Clone, Debug, Serialize)]
pub struct HopfBounds {
    pub lower: f64,
    pub upper: f64,
    /// `(xi_plus, xi_minus)` of the maxmin and minmax saddles.
    pub lower_at: (f64, f64),
    pub upper_at: (f64, f64),
}

/// Reduced two-parameter problem for one chain.
#[derive(Clone, Debug)]
pub struct HopfProblem {
    g: BrokenGF,
    /// Axis carrying the positive block.
    plus: usize,
    /// `t a_k` per axis (signed).
    ta: [f64; 2],
    constant: f64,
    radius: [f64; 2],
}

impl HopfProblem {
    pub fn new(g: &BrokenGF) -> Result<Self> {
        if g.dim() != 2 {
            return Err(Error::Contract("Hopf bounds need a two-dimensional chain".into()));
        }
        let (h1, h2) = g.h.split().ok_or_else(|| {
            Error::Unsupported("Hopf bounds need a separable Hamiltonian".into())
        })?;
        if !(h1.is_pure_quadratic() && h2.is_pure_quadratic()) {
            return Err(Error::Unsupported(
                "Hopf bounds are implemented for purely quadratic factors".into(),
            ));
        }
        let tau = g.t_to() - g.t_from();
        let a = [
            h1.quadratic_part().unwrap().m[0][0],
            h2.quadratic_part().unwrap().m[0][0],
        ];
        let ta = [tau * a[0], tau * a[1]];
        if ta[0] * ta[1] >= 0.0 {
            return Err(Error::Contract("Hopf bounds need one positive and one negative block".into()));
        }
        let plus = if ta[0] > 0.0 { 0 } else { 1 };
        let slope = g.datum.slope_bound(2);
        let radius = [
            1.1 * ta[0].abs() * slope + 1e-9,
            1.1 * ta[1].abs() * slope + 1e-9,
        ];
        Ok(HopfProblem {
            g: g.clone(),
            plus,
            ta,
            constant: g.h.h(0.0, &[0.0; 2], &[0.0; 2]) * tau,
            radius,
        })
    }

    /// `F(x; xi)` without the peeled datum constant.
    pub fn f(&self, x: &Vec2, xi: &Vec2) -> Result<f64> {
        let mut v = self.g.datum.value(xi)? - self.constant;
        for k in 0..2 {
            let d = x[k] - xi[k];
            v += d * d / (2.0 * self.ta[k]);
        }
        Ok(v)
    }

    fn point(&self, xp: f64, xm: f64) -> Vec2 {
        if self.plus == 0 {
            [xp, xm]
        } else {
            [xm, xp]
        }
    }

    /// `min over xi_p` (sign 1) or `max over xi_m` (sign -1) with the other coordinate fixed.
    fn inner(&self, x: &Vec2, fixed: f64, sign: f64) -> Result<(f64, f64)> {
        let axis = if sign > 0.0 { self.plus } else { 1 - self.plus };
        let (c, r) = (x[axis], self.radius[axis]);
        let eval = |s: f64| -> Result<f64> {
            let xi = if sign > 0.0 { self.point(s, fixed) } else { self.point(fixed, s) };
            Ok(sign * self.f(x, &xi)?)
        };
        scan_refine(eval, c - r, c + r, INNER_SCAN)
    }

    /// Maxmin and minmax values at `x`, clipped so that `lower <= upper` always holds.
    pub fn bounds(&self, x: &Vec2) -> Result<HopfBounds> {
        let off = self.g.datum_offset;
        let minus = 1 - self.plus;
        let (cm, rm) = (x[minus], self.radius[minus]);
        let (cp, rp) = (x[self.plus], self.radius[self.plus]);
        // lower = max_m min_p F
        let (xm_star, neg_lower) = scan_refine(
            |m| Ok(-self.inner(x, m, 1.0)?.1),
            cm - rm,
            cm + rm,
            OUTER_SCAN,
        )?;
        let mut lower = -neg_lower;
        let xp_at_lower = self.inner(x, xm_star, 1.0)?.0;
        // upper = min_p max_m F
        let (xp_star, upper_val) = scan_refine(
            |p| Ok(-self.inner(x, p, -1.0)?.1),
            cp - rp,
            cp + rp,
            OUTER_SCAN,
        )?;
        let mut upper = upper_val;
        let xm_at_upper = self.inner(x, xp_star, -1.0)?.0;
        let witness = self.f(x, &self.point(xp_star, xm_star))?;
        lower = lower.min(witness);
        upper = upper.max(witness);
        Ok(HopfBounds {
            lower: lower + off,
            upper: upper + off,
            lower_at: (xp_at_lower, xm_star),
            upper_at: (xp_star, xm_at_upper),
        })
    }
}

/// Minimum of `f` on `[a, b]`: uniform scan, then golden refinement of the two best
/// local minima.
fn scan_refine<F>(mut f: F, a: f64, b: f64, n: usize) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let xs: Vec<f64> = (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect();
    let vs: Vec<f64> = xs.iter().map(|&x| f(x)).collect::<Result<_>>()?;
    let mut mins: Vec<usize> = (0..=n)
        .filter(|&i| (i == 0 || vs[i] <= vs[i - 1]) && (i == n || vs[i] <= vs[i + 1]))
        .collect();
    mins.sort_by(|&i, &j| vs[i].total_cmp(&vs[j]));
    let mut best = (xs[mins[0]], vs[mins[0]]);
    let mut err = None;
    for &i in mins.iter().take(2) {
        let lo = xs[i.saturating_sub(1)];
        let hi = xs[(i + 1).min(n)];
        let (x, v) = golden_min(
            |s| match f(s) {
                Ok(v) => v,
                Err(e) => {
                    err.get_or_insert(e);
                    f64::INFINITY
                }
            },
            lo,
            hi,
            GOLDEN_TOL * (1.0 + hi.abs()),
        );
        if v < best.1 {
            best = (x, v);
        }
    }
    if let Some(e) = err {
        return Err(e);
    }
    Ok(best)
}

/// Maxmin and minmax bounds of the chain at `x`.
pub fn hopf_bounds(g: &BrokenGF, x: &[f64]) -> Result<HopfBounds> {
    if x.len() != 2 {
        return Err(Error::Contract(format!("Hopf bounds at a point of dimension {}", x.len())));
    }
    HopfProblem::new(g)?.bounds(&[x[0], x[1]])
}
