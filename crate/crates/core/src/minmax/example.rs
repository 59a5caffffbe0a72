//! Closed-form minmax solution of the cubic example near `x = 0`.
//!
//! Locally the generating function is
//! `S(t, x; xi) = xi^2/2 + t xi - 3/4 (xi - x + t)^{4/3} + t^2/2`, whose minimum sits at
//! `xi = v - t` with `v - v^3 = x`.

use serde::Serialize;

use crate::domain::{cubic_root, ExampleBranch};
use crate::error::{Error, Result};

/// Region where the local three-branch description is used.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExampleWindow {
    pub t_loc: f64,
    pub x_half_width: f64,
}

impl Default for ExampleWindow {
    fn default() -> Self {
        ExampleWindow {
            t_loc: 2.0,
            x_half_width: 0.5,
        }
    }
}

impl ExampleWindow {
    pub fn check(&self, t: f64, x: f64) -> Result<()> {
        if !(t >= self.t_loc && x.abs() <= self.x_half_width) {
            return Err(Error::Domain(format!(
                "({t}, {x}) outside the local example window t >= {}, |x| <= {}",
                self.t_loc, self.x_half_width
            )));
        }
        Ok(())
    }
}

/// `S(t, x; xi)` with the real cube root.
pub fn example_gf(t: f64, x: f64, xi: f64) -> f64 {
    let c = (xi - x + t).cbrt();
    0.5 * xi * xi + t * xi - 0.75 * (c * c * c * c) + 0.5 * t * t
}

/// `dS/dxi = xi + t - (xi - x + t)^{1/3}`.
pub fn example_gf_dxi(t: f64, x: f64, xi: f64) -> f64 {
    xi + t - (xi - x + t).cbrt()
}

/// `dS/dx = (xi - x + t)^{1/3}`.
pub fn example_gf_dx(t: f64, x: f64, xi: f64) -> f64 {
    (xi - x + t).cbrt()
}

/// Minimizing parameters of `S(t, x; .)`: one for `x != 0`, two at `x = 0`.
pub fn example_minimizers(t: f64, x: f64) -> Result<Vec<f64>> {
    if x < 0.0 {
        Ok(vec![cubic_root(x, ExampleBranch::VPlus)? - t])
    } else if x > 0.0 {
        Ok(vec![cubic_root(x, ExampleBranch::VMinus)? - t])
    } else {
        Ok(vec![1.0 - t, -1.0 - t])
    }
}

/// The minmax solution `u(t, x)` inside the default window.
pub fn example_solution(t: f64, x: f64) -> Result<f64> {
    example_solution_in(&ExampleWindow::default(), t, x)
}

pub fn example_solution_in(w: &ExampleWindow, t: f64, x: f64) -> Result<f64> {
    w.check(t, x)?;
    Ok(example_minimizers(t, x)?
        .into_iter()
        .map(|xi| example_gf(t, x, xi))
        .fold(f64::INFINITY, f64::min))
}

/// Super- and subdifferential of the example solution at `(t, 0)`.
#[derive(Clone, Debug, Serialize)]
pub struct ExampleDifferentials {
    pub t: f64,
    /// One-sided time quotients; their common value is the time slope.
    pub time_slopes: (f64, f64),
    /// Left and right space quotients.
    pub left_slope: f64,
    pub right_slope: f64,
    /// `[right, left]` when `right <= left`.
    pub superdifferential: Option<(f64, f64)>,
    /// `[left, right]` when `left <= right`; `None` is the empty set.
    pub subdifferential: Option<(f64, f64)>,
    /// `dS/dx` on the two minimizing branches.
    pub branch_slopes: (f64, f64),
    /// Quotients agree with the branch slopes within the quotient error.
    pub consistent: bool,
}

/// Estimates the differentials at `(t, 0)` from one-sided difference quotients of
/// [`example_solution`] and checks them against the branch slopes.
pub fn example_superdifferential(t: f64) -> Result<ExampleDifferentials> {
    let w = ExampleWindow::default();
    w.check(t, 0.0)?;
    let h = 1e-7;
    let u0 = example_solution(t, 0.0)?;
    let left = (u0 - example_solution(t, -h)?) / h;
    let right = (example_solution(t, h)? - u0) / h;
    let back = if t - h >= w.t_loc { (u0 - example_solution(t - h, 0.0)?) / h } else { 0.0 };
    let fwd = (example_solution(t + h, 0.0)? - u0) / h;
    let branch_slopes = (example_gf_dx(t, 0.0, 1.0 - t), example_gf_dx(t, 0.0, -1.0 - t));
    let quotient_err = 1e-6;
    let consistent = (left - branch_slopes.0).abs() <= quotient_err
        && (right - branch_slopes.1).abs() <= quotient_err
        && back.abs() <= quotient_err
        && fwd.abs() <= quotient_err;
    Ok(ExampleDifferentials {
        t,
        time_slopes: (back, fwd),
        left_slope: left,
        right_slope: right,
        superdifferential: (right <= left).then_some((right, left)),
        subdifferential: (left <= right).then_some((left, right)),
        branch_slopes,
        consistent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_at_origin_is_minus_quarter() {
        for k in 0..=12 {
            let t = 2.0 + 0.25 * k as f64;
            assert_eq!(example_solution(t, 0.0).unwrap(), -0.25);
            assert_eq!(example_gf(t, 0.0, 1.0 - t), -0.25);
            assert_eq!(example_gf(t, 0.0, -1.0 - t), -0.25);
        }
    }

    #[test]
    fn minimizers_are_critical() {
        for &t in &[2.0, 3.5, 5.0] {
            for &x in &[-0.4, -0.1, 0.0, 0.2, 0.37] {
                for xi in example_minimizers(t, x).unwrap() {
                    assert!(example_gf_dxi(t, x, xi).abs() < 1e-12, "t={t} x={x}");
                }
            }
        }
        assert_eq!(example_gf_dxi(3.0, 0.0, -2.0), 0.0);
    }

    #[test]
    fn selected_branch_is_the_lowest_critical_value() {
        for &x in &[-0.3, -0.05, 0.05, 0.3] {
            let t = 2.5;
            let u = example_solution(t, x).unwrap();
            for b in [ExampleBranch::VPlus, ExampleBranch::VMinus, ExampleBranch::Middle] {
                if let Ok(v) = cubic_root(x, b) {
                    assert!(u <= example_gf(t, x, v - t) + 1e-14);
                }
            }
        }
    }

    #[test]
    fn differentials_at_origin() {
        let d = example_superdifferential(3.0).unwrap();
        assert!((d.left_slope - 1.0).abs() < 1e-6 && (d.right_slope + 1.0).abs() < 1e-6);
        let (lo, hi) = d.superdifferential.unwrap();
        assert!((lo + 1.0).abs() < 1e-6 && (hi - 1.0).abs() < 1e-6);
        assert!(d.subdifferential.is_none());
        assert!(d.consistent);
        assert_eq!(d.branch_slopes, (1.0, -1.0));
    }

    #[test]
    fn outside_window_is_a_domain_error() {
        assert!(matches!(example_solution(1.0, 0.0), Err(Error::Domain(_))));
        assert!(matches!(example_solution(3.0, 0.8), Err(Error::Domain(_))));
    }
}
