//! Hamiltonians `H(t, x, p)` on the 1-D/2-D torus or the line.
//!
//! Four families are supported: a nondegenerate quadratic form plus a
//! perturbation with compact momentum support, a sum of a convex and a
//! concave 1-D Hamiltonian acting on separate coordinates, the fixed cubic
//! `p - p^3 - x`, and arbitrary 1-D scalar functions tagged with their
//! convexity.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

pub type Vec2 = [f64; 2];

/// Central finite-difference step used for user-supplied functions.
pub const FD_STEP: f64 = 1e-5;

/// Number of momenta sampled beyond the declared support radius per `(t, x)` sample.
pub const SUPPORT_PROBES: usize = 64;

/// Symmetric `k x k` matrix, `k` in {1, 2}.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadForm {
    pub dim: usize,
    pub m: [[f64; 2]; 2],
}

impl QuadForm {
    pub fn scalar(a: f64) -> Self {
        QuadForm {
            dim: 1,
            m: [[a, 0.0], [0.0, 0.0]],
        }
    }

    pub fn diag(a: f64, b: f64) -> Self {
        QuadForm {
            dim: 2,
            m: [[a, 0.0], [0.0, b]],
        }
    }

    pub fn sym2(a: f64, b: f64, d: f64) -> Self {
        QuadForm {
            dim: 2,
            m: [[a, b], [b, d]],
        }
    }

    pub fn det(&self) -> f64 {
        match self.dim {
            1 => self.m[0][0],
            _ => self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0],
        }
    }

    pub fn is_symmetric(&self) -> bool {
        self.dim == 1 || (self.m[0][1] - self.m[1][0]).abs() <= 1e-14 * (1.0 + self.m[0][1].abs())
    }

    pub fn apply(&self, v: &Vec2) -> Vec2 {
        match self.dim {
            1 => [self.m[0][0] * v[0], 0.0],
            _ => [
                self.m[0][0] * v[0] + self.m[0][1] * v[1],
                self.m[1][0] * v[0] + self.m[1][1] * v[1],
            ],
        }
    }

    pub fn inverse(&self) -> Option<QuadForm> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        Some(match self.dim {
            1 => QuadForm::scalar(1.0 / d),
            _ => QuadForm {
                dim: 2,
                m: [
                    [self.m[1][1] / d, -self.m[0][1] / d],
                    [-self.m[1][0] / d, self.m[0][0] / d],
                ],
            },
        })
    }

    pub fn form(&self, v: &Vec2) -> f64 {
        let w = self.apply(v);
        dot(&w, v, self.dim)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        match self.dim {
            1 => vec![self.m[0][0]],
            _ => {
                let tr = self.m[0][0] + self.m[1][1];
                let det = self.det();
                let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
                vec![0.5 * tr - disc, 0.5 * tr + disc]
            }
        }
    }

    /// Numbers of positive and negative eigenvalues.
    pub fn signature(&self) -> (usize, usize) {
        let ev = self.eigenvalues();
        (
            ev.iter().filter(|&&e| e > 0.0).count(),
            ev.iter().filter(|&&e| e < 0.0).count(),
        )
    }

    pub fn scaled(&self, s: f64) -> QuadForm {
        let mut m = self.m;
        for row in m.iter_mut() {
            for v in row.iter_mut() {
                *v *= s;
            }
        }
        QuadForm { dim: self.dim, m }
    }

    pub fn norm(&self) -> f64 {
        self.eigenvalues().iter().fold(0.0f64, |a, e| a.max(e.abs()))
    }
}

pub fn dot(a: &Vec2, b: &Vec2, dim: usize) -> f64 {
    (0..dim).map(|i| a[i] * b[i]).sum()
}

pub fn norm(a: &Vec2, dim: usize) -> f64 {
    dot(a, a, dim).sqrt()
}

pub type PotentialFn = Arc<dyn Fn(f64, &Vec2, &Vec2) -> f64 + Send + Sync>;
pub type ScalarFn3 = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

/// Perturbation `V(t, x, p)` vanishing for `|p| > radius`.
#[derive(Clone)]
pub enum Potential {
    Zero,
    /// `amp * cos(omega t) * cos(k . x) * bump(|p| / radius)`.
    CosBump {
        amp: f64,
        wave: Vec2,
        radius: f64,
        omega: f64,
    },
    /// User-supplied potential; derivatives by central differences.
    Custom { f: PotentialFn, radius: f64 },
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Potential::Zero => write!(f, "Zero"),
            Potential::CosBump {
                amp,
                wave,
                radius,
                omega,
            } => f
                .debug_struct("CosBump")
                .field("amp", amp)
                .field("wave", wave)
                .field("radius", radius)
                .field("omega", omega)
                .finish(),
            Potential::Custom { radius, .. } => write!(f, "Custom {{ radius: {radius} }}"),
        }
    }
}

/// `exp(1 - 1/(1 - r2))` for `r2 < 1`, zero otherwise; equals 1 at the origin.
pub fn bump(r2: f64) -> f64 {
    if r2 >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - r2)).exp()
    }
}

impl Potential {
    pub fn cos_bump(amp: f64, radius: f64) -> Self {
        Potential::CosBump {
            amp,
            wave: [1.0, 0.0],
            radius,
            omega: 0.0,
        }
    }

    pub fn radius(&self) -> f64 {
        match self {
            Potential::Zero => 0.0,
            Potential::CosBump { radius, .. } | Potential::Custom { radius, .. } => *radius,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Potential::Zero)
            || matches!(self, Potential::CosBump { amp, .. } if *amp == 0.0)
    }

    pub fn is_autonomous(&self) -> bool {
        match self {
            Potential::Zero => true,
            Potential::CosBump { omega, .. } => *omega == 0.0,
            Potential::Custom { .. } => false,
        }
    }

    pub fn value(&self, t: f64, x: &Vec2, p: &Vec2, dim: usize) -> f64 {
        match self {
            Potential::Zero => 0.0,
            Potential::CosBump {
                amp,
                wave,
                radius,
                omega,
            } => {
                let r2 = dot(p, p, dim) / (radius * radius);
                if r2 >= 1.0 {
                    return 0.0;
                }
                amp * (omega * t).cos() * dot(wave, x, dim).cos() * bump(r2)
            }
            Potential::Custom { f, .. } => f(t, x, p),
        }
    }

    /// `(dV/dp, dV/dx)`.
    pub fn gradient(&self, t: f64, x: &Vec2, p: &Vec2, dim: usize) -> (Vec2, Vec2) {
        match self {
            Potential::Zero => ([0.0; 2], [0.0; 2]),
            Potential::CosBump {
                amp,
                wave,
                radius,
                omega,
            } => {
                let r2 = dot(p, p, dim) / (radius * radius);
                if r2 >= 1.0 {
                    return ([0.0; 2], [0.0; 2]);
                }
                let b = bump(r2);
                let phase = dot(wave, x, dim);
                let c = amp * (omega * t).cos();
                let db = -b / ((1.0 - r2) * (1.0 - r2)) * 2.0 / (radius * radius);
                let mut gp = [0.0; 2];
                let mut gx = [0.0; 2];
                for i in 0..dim {
                    gp[i] = c * phase.cos() * db * p[i];
                    gx[i] = -c * phase.sin() * wave[i] * b;
                }
                (gp, gx)
            }
            Potential::Custom { f, .. } => {
                let mut gp = [0.0; 2];
                let mut gx = [0.0; 2];
                for i in 0..dim {
                    let (mut pp, mut pm) = (*p, *p);
                    pp[i] += FD_STEP;
                    pm[i] -= FD_STEP;
                    gp[i] = (f(t, x, &pp) - f(t, x, &pm)) / (2.0 * FD_STEP);
                    let (mut xp, mut xm) = (*x, *x);
                    xp[i] += FD_STEP;
                    xm[i] -= FD_STEP;
                    gx[i] = (f(t, &xp, p) - f(t, &xm, p)) / (2.0 * FD_STEP);
                }
                (gp, gx)
            }
        }
    }
}

/// 1-D scalar Hamiltonian `h(t, x, p)`.
#[derive(Clone)]
pub enum ScalarFn {
    /// `sum_i coeffs[i] p^i + x_slope * x`.
    Poly { coeffs: Vec<f64>, x_slope: f64 },
    Closure(ScalarFn3),
}

impl fmt::Debug for ScalarFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarFn::Poly { coeffs, x_slope } => f
                .debug_struct("Poly")
                .field("coeffs", coeffs)
                .field("x_slope", x_slope)
                .finish(),
            ScalarFn::Closure(_) => write!(f, "Closure"),
        }
    }
}

impl ScalarFn {
    pub fn eval(&self, t: f64, x: f64, p: f64) -> f64 {
        match self {
            ScalarFn::Poly { coeffs, x_slope } => {
                coeffs.iter().rev().fold(0.0, |acc, c| acc * p + c) + x_slope * x
            }
            ScalarFn::Closure(f) => f(t, x, p),
        }
    }

    pub fn is_autonomous(&self) -> bool {
        matches!(self, ScalarFn::Poly { .. })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Convexity {
    Convex,
    Concave,
    None,
}

#[derive(Clone, Debug)]
pub enum HamiltonianKind {
    /// `1/2 <A p, p> + V(t, x, p)`.
    QuadraticPlusCompact { a: QuadForm, v: Potential },
    /// `H1(t, x1, p1) + H2(t, x2, p2)` with `H1` convex and `H2` concave.
    SeparableConvexConcave {
        h1: Box<HamiltonianSpec>,
        h2: Box<HamiltonianSpec>,
    },
    /// `p - p^3 - x` on the line.
    CubicExample,
    Custom1D { h: ScalarFn, convexity: Convexity },
}

/// A Hamiltonian together with its time horizon `T` and an additive constant.
#[derive(Clone, Debug)]
pub struct HamiltonianSpec {
    pub kind: HamiltonianKind,
    pub horizon: f64,
    /// Constant added to `H`; it shifts solutions by `-shift * t` and leaves the flow unchanged.
    pub shift: f64,
}

/// Working half-width of the line window for the cubic example.
pub const CUBIC_X_MAX: f64 = 3.0;

impl HamiltonianSpec {
    pub fn new(kind: HamiltonianKind, horizon: f64) -> Self {
        HamiltonianSpec {
            kind,
            horizon,
            shift: 0.0,
        }
    }

    pub fn free_particle(horizon: f64) -> Self {
        Self::quadratic(QuadForm::scalar(1.0), Potential::Zero, horizon)
    }

    pub fn quadratic(a: QuadForm, v: Potential, horizon: f64) -> Self {
        Self::new(HamiltonianKind::QuadraticPlusCompact { a, v }, horizon)
    }

    pub fn separable(h1: HamiltonianSpec, h2: HamiltonianSpec, horizon: f64) -> Self {
        Self::new(
            HamiltonianKind::SeparableConvexConcave {
                h1: Box::new(h1),
                h2: Box::new(h2),
            },
            horizon,
        )
    }

    pub fn cubic_example(horizon: f64) -> Self {
        Self::new(HamiltonianKind::CubicExample, horizon)
    }

    pub fn custom_1d(h: ScalarFn, convexity: Convexity, horizon: f64) -> Self {
        Self::new(HamiltonianKind::Custom1D { h, convexity }, horizon)
    }

    pub fn with_shift(mut self, shift: f64) -> Self {
        self.shift = shift;
        self
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            HamiltonianKind::QuadraticPlusCompact { a, .. } => a.dim,
            HamiltonianKind::SeparableConvexConcave { .. } => 2,
            HamiltonianKind::CubicExample | HamiltonianKind::Custom1D { .. } => 1,
        }
    }

    pub fn is_autonomous(&self) -> bool {
        match &self.kind {
            HamiltonianKind::QuadraticPlusCompact { v, .. } => v.is_autonomous(),
            HamiltonianKind::SeparableConvexConcave { h1, h2 } => {
                h1.is_autonomous() && h2.is_autonomous()
            }
            HamiltonianKind::CubicExample => true,
            HamiltonianKind::Custom1D { h, .. } => h.is_autonomous(),
        }
    }

    /// `H(t, x, p)` without dimension checks.
    pub fn h(&self, t: f64, x: &Vec2, p: &Vec2) -> f64 {
        self.shift
            + match &self.kind {
                HamiltonianKind::QuadraticPlusCompact { a, v } => {
                    0.5 * a.form(p) + v.value(t, x, p, a.dim)
                }
                HamiltonianKind::SeparableConvexConcave { h1, h2 } => {
                    h1.h(t, &[x[0], 0.0], &[p[0], 0.0]) + h2.h(t, &[x[1], 0.0], &[p[1], 0.0])
                }
                HamiltonianKind::CubicExample => p[0] - p[0] * p[0] * p[0] - x[0],
                HamiltonianKind::Custom1D { h, .. } => h.eval(t, x[0], p[0]),
            }
    }

    /// `(dH/dp, dH/dx)`.
    pub fn gradient(&self, t: f64, x: &Vec2, p: &Vec2) -> (Vec2, Vec2) {
        match &self.kind {
            HamiltonianKind::QuadraticPlusCompact { a, v } => {
                let (vp, vx) = v.gradient(t, x, p, a.dim);
                let ap = a.apply(p);
                ([ap[0] + vp[0], ap[1] + vp[1]], vx)
            }
            HamiltonianKind::SeparableConvexConcave { h1, h2 } => {
                let (p1, x1) = h1.gradient(t, &[x[0], 0.0], &[p[0], 0.0]);
                let (p2, x2) = h2.gradient(t, &[x[1], 0.0], &[p[1], 0.0]);
                ([p1[0], p2[0]], [x1[0], x2[0]])
            }
            HamiltonianKind::CubicExample => ([1.0 - 3.0 * p[0] * p[0], 0.0], [-1.0, 0.0]),
            HamiltonianKind::Custom1D { h, .. } => {
                let dp = (h.eval(t, x[0], p[0] + FD_STEP) - h.eval(t, x[0], p[0] - FD_STEP))
                    / (2.0 * FD_STEP);
                let dx = (h.eval(t, x[0] + FD_STEP, p[0]) - h.eval(t, x[0] - FD_STEP, p[0]))
                    / (2.0 * FD_STEP);
                ([dp, 0.0], [dx, 0.0])
            }
        }
    }

    fn check_dims(&self, x: &[f64], p: &[f64]) -> Result<()> {
        let k = self.dim();
        if x.len() != k || p.len() != k {
            return Err(Error::Contract(format!(
                "Hamiltonian of dimension {k} evaluated at x of length {} and p of length {}",
                x.len(),
                p.len()
            )));
        }
        Ok(())
    }

    /// Checked evaluation of `H(t, x, p)`.
    pub fn eval(&self, t: f64, x: &[f64], p: &[f64]) -> Result<f64> {
        self.check_dims(x, p)?;
        Ok(self.h(t, &pad(x), &pad(p)))
    }

    /// Hamilton's vector field: `(dx/dt, dp/dt) = (dH/dp, -dH/dx)`.
    pub fn vector_field(&self, t: f64, x: &[f64], p: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_dims(x, p)?;
        let k = self.dim();
        let (hp, hx) = self.gradient(t, &pad(x), &pad(p));
        Ok((hp[..k].to_vec(), hx[..k].iter().map(|v| -v).collect()))
    }

    /// Support radius of the compact perturbation, if this family has one.
    pub fn support_radius(&self) -> f64 {
        match &self.kind {
            HamiltonianKind::QuadraticPlusCompact { v, .. } => v.radius(),
            HamiltonianKind::SeparableConvexConcave { h1, h2 } => {
                h1.support_radius().max(h2.support_radius())
            }
            _ => 0.0,
        }
    }

    /// True when the flow is that of a pure quadratic form (steps are known in closed form).
    pub fn is_pure_quadratic(&self) -> bool {
        match &self.kind {
            HamiltonianKind::QuadraticPlusCompact { v, .. } => v.is_zero(),
            HamiltonianKind::SeparableConvexConcave { h1, h2 } => {
                h1.is_pure_quadratic() && h2.is_pure_quadratic()
            }
            _ => false,
        }
    }

    /// Quadratic form governing the generating functions at infinity.
    ///
    /// For tagged custom Hamiltonians this is `h_pp` at `(0, 0, 0)` with the sign forced
    /// to the declared convexity; untagged custom and the cubic example have none.
    pub fn quadratic_part(&self) -> Option<QuadForm> {
        match &self.kind {
            HamiltonianKind::QuadraticPlusCompact { a, .. } => Some(*a),
            HamiltonianKind::SeparableConvexConcave { h1, h2 } => {
                let a1 = h1.quadratic_part()?;
                let a2 = h2.quadratic_part()?;
                Some(QuadForm::diag(a1.m[0][0], a2.m[0][0]))
            }
            HamiltonianKind::CubicExample => None,
            HamiltonianKind::Custom1D { h, convexity } => {
                let c = h.eval(0.0, 0.0, 0.0);
                let hpp = (h.eval(0.0, 0.0, 1e-3) - 2.0 * c + h.eval(0.0, 0.0, -1e-3)) / 1e-6;
                let mag = hpp.abs().max(1e-3);
                match convexity {
                    Convexity::Convex => Some(QuadForm::scalar(mag)),
                    Convexity::Concave => Some(QuadForm::scalar(-mag)),
                    Convexity::None => None,
                }
            }
        }
    }

    /// The two 1-D factors of a separable Hamiltonian, the shift assigned to the first.
    pub fn split(&self) -> Option<(HamiltonianSpec, HamiltonianSpec)> {
        match &self.kind {
            HamiltonianKind::SeparableConvexConcave { h1, h2 } => {
                let mut a = (**h1).clone();
                a.shift += self.shift;
                a.horizon = self.horizon;
                let mut b = (**h2).clone();
                b.horizon = self.horizon;
                Some((a, b))
            }
            HamiltonianKind::QuadraticPlusCompact { a, v } if a.dim == 2 && v.is_zero() => {
                if a.m[0][1] != 0.0 {
                    return None;
                }
                let h1 = HamiltonianSpec::quadratic(
                    QuadForm::scalar(a.m[0][0]),
                    Potential::Zero,
                    self.horizon,
                )
                .with_shift(self.shift);
                let h2 = HamiltonianSpec::quadratic(
                    QuadForm::scalar(a.m[1][1]),
                    Potential::Zero,
                    self.horizon,
                );
                Some((h1, h2))
            }
            _ => None,
        }
    }

    /// Second momentum derivative (1-D) by central differences.
    pub fn hpp_1d(&self, t: f64, x: f64, p: f64) -> f64 {
        let d = 1e-4;
        (self.h(t, &[x, 0.0], &[p + d, 0.0]) - 2.0 * self.h(t, &[x, 0.0], &[p, 0.0])
            + self.h(t, &[x, 0.0], &[p - d, 0.0]))
            / (d * d)
    }

    /// Check the structural invariants by sampling.
    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::Contract(format!(
                "time horizon must be positive, got {}",
                self.horizon
            )));
        }
        match &self.kind {
            HamiltonianKind::QuadraticPlusCompact { a, v } => {
                if a.dim == 0 || a.dim > 2 {
                    return Err(Error::Contract(format!("unsupported dimension {}", a.dim)));
                }
                if !a.is_symmetric() {
                    return Err(Error::Contract("A must be symmetric".into()));
                }
                if a.det().abs() < 1e-12 {
                    return Err(Error::Contract("A must be nondegenerate".into()));
                }
                if !v.is_zero() {
                    self.check_support(a.dim, v)?;
                }
            }
            HamiltonianKind::SeparableConvexConcave { h1, h2 } => {
                for (h, name) in [(h1, "H1"), (h2, "H2")] {
                    if h.dim() != 1 {
                        return Err(Error::Contract(format!("{name} must be one-dimensional")));
                    }
                    if matches!(h.kind, HamiltonianKind::SeparableConvexConcave { .. }) {
                        return Err(Error::Contract(format!("{name} must not be separable")));
                    }
                    h.validate()?;
                }
                check_curvature(h1, 1.0, "H1")?;
                check_curvature(h2, -1.0, "H2")?;
            }
            HamiltonianKind::CubicExample => {}
            HamiltonianKind::Custom1D { h, convexity } => {
                let probe = h.eval(0.0, 0.0, 0.0);
                if !probe.is_finite() {
                    return Err(Error::Contract("custom Hamiltonian is not finite at 0".into()));
                }
                if *convexity != Convexity::None {
                    let s = if *convexity == Convexity::Convex { 1.0 } else { -1.0 };
                    check_curvature(self, s, "custom Hamiltonian")?;
                }
            }
        }
        Ok(())
    }

    fn check_support(&self, dim: usize, v: &Potential) -> Result<()> {
        let r = v.radius();
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::Contract(format!(
                "support radius must be positive, got {r}"
            )));
        }
        let n_t = 4;
        let n_x: usize = 8;
        for it in 0..n_t {
            let t = self.horizon * it as f64 / (n_t - 1) as f64;
            for ix in 0..n_x.pow(dim as u32) {
                let mut x = [0.0; 2];
                x[0] = std::f64::consts::TAU * (ix % n_x) as f64 / n_x as f64;
                if dim == 2 {
                    x[1] = std::f64::consts::TAU * (ix / n_x) as f64 / n_x as f64;
                }
                for k in 0..SUPPORT_PROBES {
                    let radius = r * (1.0 + 1e-6 + 2.0 * k as f64 / SUPPORT_PROBES as f64);
                    let angle = std::f64::consts::TAU * k as f64 / SUPPORT_PROBES as f64;
                    let p = if dim == 1 {
                        [if k % 2 == 0 { radius } else { -radius }, 0.0]
                    } else {
                        [radius * angle.cos(), radius * angle.sin()]
                    };
                    let val = v.value(t, &x, &p, dim);
                    if val != 0.0 {
                        return Err(Error::Contract(format!(
                            "V(t={t}, x={x:?}, p={p:?}) = {val} is nonzero beyond the declared radius {r}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

fn check_curvature(h: &HamiltonianSpec, sign: f64, name: &str) -> Result<()> {
    const C_MIN: f64 = 1e-8;
    let p_max = h.support_radius().max(2.0) + 1.0;
    for it in 0..3 {
        let t = h.horizon * it as f64 / 2.0;
        for ix in 0..8 {
            let x = std::f64::consts::TAU * ix as f64 / 8.0;
            for ip in 0..=32 {
                let p = -p_max + 2.0 * p_max * ip as f64 / 32.0;
                let c = sign * h.hpp_1d(t, x, p);
                if c.is_nan() || c < C_MIN {
                    return Err(Error::Contract(format!(
                        "{name} fails the {} test at (t={t}, x={x}, p={p})",
                        if sign > 0.0 { "convexity" } else { "concavity" }
                    )));
                }
            }
        }
    }
    Ok(())
}

pub fn pad(v: &[f64]) -> Vec2 {
    let mut out = [0.0; 2];
    for (o, x) in out.iter_mut().zip(v) {
        *o = *x;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_example_at_inflection_momentum() {
        let h = HamiltonianSpec::cubic_example(5.0);
        let p = 1.0 / 3f64.sqrt();
        let v = h.eval(0.0, &[0.0], &[p]).unwrap();
        assert!((v - 2.0 / (3.0 * 3f64.sqrt())).abs() < 1e-15);
        assert!((v - 0.384900).abs() < 1e-6);
    }

    #[test]
    fn free_particle_energy() {
        let h = HamiltonianSpec::free_particle(1.0);
        assert_eq!(h.eval(0.3, &[1.0], &[2.0]).unwrap(), 2.0);
    }

    #[test]
    fn separable_symmetric_cancellation() {
        let h1 = HamiltonianSpec::free_particle(1.0);
        let h2 = HamiltonianSpec::quadratic(QuadForm::scalar(-1.0), Potential::Zero, 1.0);
        let h = HamiltonianSpec::separable(h1, h2, 1.0);
        h.validate().unwrap();
        assert_eq!(h.eval(0.0, &[0.2, 0.7], &[1.0, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn dimension_mismatch_is_a_contract_error() {
        let h = HamiltonianSpec::free_particle(1.0);
        assert!(matches!(
            h.eval(0.0, &[0.0, 1.0], &[1.0]),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn vector_field_of_cubic_example() {
        let h = HamiltonianSpec::cubic_example(1.0);
        let (dx, dp) = h.vector_field(0.0, &[0.0], &[0.0]).unwrap();
        assert_eq!((dx[0], dp[0]), (1.0, 1.0));
        let (dx, dp) = h.vector_field(0.0, &[0.0], &[1.0]).unwrap();
        assert_eq!((dx[0], dp[0]), (-2.0, 1.0));
        let (dx, dp) = HamiltonianSpec::free_particle(1.0)
            .vector_field(0.0, &[0.4], &[3.0])
            .unwrap();
        assert_eq!((dx[0], dp[0]), (3.0, 0.0));
    }

    #[test]
    fn quadratic_beyond_support() {
        let h = HamiltonianSpec::quadratic(
            QuadForm::scalar(1.0),
            Potential::cos_bump(0.1, 1.0),
            1.0,
        );
        h.validate().unwrap();
        for &p in &[1.0 + 1e-9, 1.5, -3.0] {
            for &x in &[0.0, 1.0, 4.0] {
                assert_eq!(h.eval(0.2, &[x], &[p]).unwrap(), 0.5 * p * p);
            }
        }
        assert!(h.eval(0.0, &[0.0], &[0.0]).unwrap() > 0.09);
    }

    #[test]
    fn analytic_gradient_matches_differences() {
        let h = HamiltonianSpec::quadratic(
            QuadForm::sym2(1.0, 0.2, 0.7),
            Potential::CosBump {
                amp: 0.3,
                wave: [1.0, 2.0],
                radius: 1.5,
                omega: 0.7,
            },
            1.0,
        );
        h.validate().unwrap();
        let (x, p, t) = ([0.3, -1.2], [0.4, -0.5], 0.35);
        let (gp, gx) = h.gradient(t, &x, &p);
        let d = 1e-6;
        for i in 0..2 {
            let (mut pp, mut pm) = (p, p);
            pp[i] += d;
            pm[i] -= d;
            let fd = (h.h(t, &x, &pp) - h.h(t, &x, &pm)) / (2.0 * d);
            assert!((fd - gp[i]).abs() < 1e-8, "dp{i}: {fd} vs {}", gp[i]);
            let (mut xp, mut xm) = (x, x);
            xp[i] += d;
            xm[i] -= d;
            let fd = (h.h(t, &xp, &p) - h.h(t, &xm, &p)) / (2.0 * d);
            assert!((fd - gx[i]).abs() < 1e-8, "dx{i}: {fd} vs {}", gx[i]);
        }
    }

    #[test]
    fn leaky_potential_is_rejected() {
        let leaky = Potential::Custom {
            f: Arc::new(|_, _, p: &Vec2| 0.01 * p[0]),
            radius: 1.0,
        };
        let h = HamiltonianSpec::quadratic(QuadForm::scalar(1.0), leaky, 1.0);
        assert!(h.validate().is_err());
        let degenerate = HamiltonianSpec::quadratic(QuadForm::scalar(0.0), Potential::Zero, 1.0);
        assert!(degenerate.validate().is_err());
    }

    #[test]
    fn separable_requires_convex_then_concave() {
        let convex = HamiltonianSpec::free_particle(1.0);
        let h = HamiltonianSpec::separable(convex.clone(), convex, 1.0);
        assert!(h.validate().is_err());
    }

    #[test]
    fn signature_of_forms() {
        assert_eq!(QuadForm::diag(1.0, -2.0).signature(), (1, 1));
        assert_eq!(QuadForm::sym2(2.0, 1.0, 2.0).signature(), (2, 0));
        assert_eq!(QuadForm::scalar(-1.0).signature(), (0, 1));
    }
}
