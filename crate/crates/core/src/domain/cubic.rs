//! Real roots of `v - v^3 = x` and the smooth datum built from them.

use crate::error::{Error, Result};

/// Largest `|x|` for which `v - v^3 = x` has three real roots: `2 / (3 sqrt 3)`.
pub fn fold_value() -> f64 {
    2.0 / (3.0 * 3f64.sqrt())
}

/// Root selector for `v - v^3 = x`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExampleBranch {
    /// Largest real root; positive for `x < fold_value()`.
    VPlus,
    /// Smallest real root; negative for `x > -fold_value()`.
    VMinus,
    /// Middle root; exists only for `|x| <= fold_value()`.
    Middle,
}

pub fn g(v: f64) -> f64 {
    v - v * v * v
}

/// Root of `v - v^3 = x` on `branch`, by Cardano or the trigonometric form, then Newton.
pub fn cubic_root(x: f64, branch: ExampleBranch) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("cubic root at non-finite x = {x}")));
    }
    let fold = fold_value();
    let mut v = if x.abs() > fold {
        // one real root: v^3 - v + x = 0
        if branch == ExampleBranch::Middle {
            return Err(Error::Domain(format!(
                "middle root requires |x| <= {fold:.6}, got {x}"
            )));
        }
        let disc = (0.25 * x * x - 1.0 / 27.0).sqrt();
        let root = (-0.5 * x + disc).cbrt() + (-0.5 * x - disc).cbrt();
        let admissible = match branch {
            ExampleBranch::VPlus => x < 0.0,
            _ => x > 0.0,
        };
        if !admissible {
            return Err(Error::Domain(format!(
                "branch {branch:?} does not exist at x = {x}"
            )));
        }
        root
    } else {
        let arg = (-1.5 * 3f64.sqrt() * x).clamp(-1.0, 1.0);
        let phi = arg.acos() / 3.0;
        let k = match branch {
            ExampleBranch::VPlus => 0.0,
            ExampleBranch::Middle => 1.0,
            ExampleBranch::VMinus => 2.0,
        };
        2.0 / 3f64.sqrt() * (phi - 2.0 * std::f64::consts::PI * k / 3.0).cos()
    };
    for _ in 0..8 {
        let d = 1.0 - 3.0 * v * v;
        if d == 0.0 {
            break;
        }
        let step = (g(v) - x) / d;
        v -= step;
        if step.abs() <= 1e-16 * (1.0 + v.abs()) {
            break;
        }
    }
    Ok(v)
}

/// `F(v) = v^2/2 - 3 v^4/4`, the datum value along a branch where `sigma' = v`.
pub fn branch_value(v: f64) -> f64 {
    0.5 * v * v - 0.75 * v * v * v * v
}

/// Initial datum whose derivative is `v+(x)` left of `-eps`, `v-(x)` right of `eps`,
/// joined on `[-eps, eps]` by the smoothstep blend of the two branch slopes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CubicDatum {
    pub eps: f64,
    vp: f64,
    vm: f64,
    right_offset: f64,
}

impl CubicDatum {
    pub fn new(eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < fold_value()) {
            return Err(Error::Contract(format!(
                "joint half-width must lie in (0, {:.6}), got {eps}",
                fold_value()
            )));
        }
        let vp = cubic_root(-eps, ExampleBranch::VPlus)?;
        let vm = cubic_root(eps, ExampleBranch::VMinus)?;
        let mut d = CubicDatum {
            eps,
            vp,
            vm,
            right_offset: 0.0,
        };
        d.right_offset = branch_value(vp) + d.joint_integral(eps) - branch_value(vm);
        Ok(d)
    }

    fn joint_integral(&self, x: f64) -> f64 {
        let s = (x + self.eps) / (2.0 * self.eps);
        2.0 * self.eps * (self.vp * s + (self.vm - self.vp) * (s * s * s - 0.5 * s * s * s * s))
    }

    pub fn value(&self, x: f64) -> f64 {
        if x < -self.eps {
            branch_value(cubic_root(x, ExampleBranch::VPlus).unwrap_or(f64::NAN))
        } else if x > self.eps {
            branch_value(cubic_root(x, ExampleBranch::VMinus).unwrap_or(f64::NAN)) + self.right_offset
        } else {
            branch_value(self.vp) + self.joint_integral(x)
        }
    }

    pub fn slope(&self, x: f64) -> f64 {
        if x < -self.eps {
            cubic_root(x, ExampleBranch::VPlus).unwrap_or(f64::NAN)
        } else if x > self.eps {
            cubic_root(x, ExampleBranch::VMinus).unwrap_or(f64::NAN)
        } else {
            let s = (x + self.eps) / (2.0 * self.eps);
            self.vp + (self.vm - self.vp) * (3.0 * s * s - 2.0 * s * s * s)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roots_satisfy_the_cubic() {
        for i in -300..=300 {
            let x = i as f64 * 0.01;
            for b in [ExampleBranch::VPlus, ExampleBranch::VMinus, ExampleBranch::Middle] {
                if let Ok(v) = cubic_root(x, b) {
                    assert!((g(v) - x).abs() <= 1e-12, "x={x} {b:?} v={v}");
                }
            }
            if x < 0.0 {
                assert!(cubic_root(x, ExampleBranch::VPlus).unwrap() > 1.0);
            }
            if x > 0.0 {
                assert!(cubic_root(x, ExampleBranch::VMinus).unwrap() < -1.0);
            }
        }
        assert_eq!(cubic_root(0.0, ExampleBranch::VPlus).unwrap(), 1.0);
        assert!(cubic_root(0.5, ExampleBranch::Middle).is_err());
    }

    #[test]
    fn datum_is_continuous_and_symmetric() {
        let d = CubicDatum::new(0.1).unwrap();
        for &x in &[-0.1, 0.1] {
            let (a, b) = (d.value(x - 1e-9), d.value(x + 1e-9));
            assert!((a - b).abs() < 1e-7, "{x}: {a} {b}");
            let (a, b) = (d.slope(x - 1e-9), d.slope(x + 1e-9));
            assert!((a - b).abs() < 1e-6);
        }
        assert!(d.right_offset.abs() < 1e-14);
        for &x in &[0.05, 0.7, 2.5] {
            assert!((d.value(x) - d.value(-x)).abs() < 1e-13);
        }
        let h = 1e-6;
        for &x in &[-2.0, -0.05, 0.03, 1.3] {
            let fd = (d.value(x + h) - d.value(x - h)) / (2.0 * h);
            assert!((fd - d.slope(x)).abs() < 1e-6, "x={x}");
        }
    }
}
