//! Initial data `sigma(x)`.
//!
//! Builtins are evaluated in closed form. Grid data is either interpolated
//! linearly (a `C0` table) or by cubic Hermite pieces with stored slopes (a
//! `C1` surrogate). Only `C1` data may be fed to generating-function
//! construction; `C0` data goes through mollification first.

use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use super::cubic::CubicDatum;
use super::grid::{Axis, SpaceGrid};
use super::hamiltonian::{pad, Vec2};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Smoothness {
    C1,
    C0,
}

/// Closed-form catalog entries.
#[derive(Clone, Debug, PartialEq)]
pub enum Builtin {
    /// `amp * cos(k . x + phase)`.
    Cos { amp: f64, wave: Vec2, phase: f64 },
    /// `amp * sin(k . x + phase)`.
    Sin { amp: f64, wave: Vec2, phase: f64 },
    /// `amp * |sin(k . x - shift)|`, Lipschitz with constant `amp |k|`.
    ShiftedAbsSine { amp: f64, wave: Vec2, shift: f64 },
    /// Linear through `(xs[i], ys[i])` in the first coordinate; wraps with `period` if set.
    PiecewiseLinear {
        xs: Vec<f64>,
        ys: Vec<f64>,
        period: Option<f64>,
    },
    Constant(f64),
    /// Line datum of the cubic example with joint half-width `eps`.
    CubicBranch(CubicDatum),
}

pub type DatumFn = Arc<dyn Fn(&Vec2) -> f64 + Send + Sync>;
pub type DatumGradFn = Arc<dyn Fn(&Vec2) -> Vec2 + Send + Sync>;

#[derive(Clone)]
pub enum DatumSpec {
    Builtin(Builtin),
    /// Linear (1-D) or bilinear (2-D) interpolation of grid values.
    Table { grid: SpaceGrid, values: Vec<f64> },
    /// 1-D cubic Hermite interpolation of values and slopes.
    Hermite {
        axis: Axis,
        values: Vec<f64>,
        slopes: Vec<f64>,
    },
    /// 2-D tensor cubic Hermite with zero twist.
    Hermite2 {
        grid: SpaceGrid,
        values: Vec<f64>,
        dx: Vec<f64>,
        dy: Vec<f64>,
    },
    /// `sigma1(x1) + sigma2(x2)`, each factor a 1-D datum.
    Separable(Box<DatumSpec>, Box<DatumSpec>),
    /// `base + c`.
    Shifted(Box<DatumSpec>, f64),
    /// User function; `C1` exactly when a gradient is supplied.
    Custom {
        f: DatumFn,
        grad: Option<DatumGradFn>,
        name: String,
    },
}

impl fmt::Debug for DatumSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.describe())
    }
}

impl DatumSpec {
    pub fn cos() -> Self {
        DatumSpec::Builtin(Builtin::Cos {
            amp: 1.0,
            wave: [1.0, 0.0],
            phase: 0.0,
        })
    }

    pub fn sin() -> Self {
        DatumSpec::Builtin(Builtin::Sin {
            amp: 1.0,
            wave: [1.0, 0.0],
            phase: 0.0,
        })
    }

    pub fn constant(c: f64) -> Self {
        DatumSpec::Builtin(Builtin::Constant(c))
    }

    pub fn shifted_abs_sine(shift: f64) -> Self {
        DatumSpec::Builtin(Builtin::ShiftedAbsSine {
            amp: 1.0,
            wave: [1.0, 0.0],
            shift,
        })
    }

    pub fn cubic_branch(eps: f64) -> Result<Self> {
        Ok(DatumSpec::Builtin(Builtin::CubicBranch(CubicDatum::new(eps)?)))
    }

    /// Periodic hat of height `height` centred at `center` with half-width `width`.
    pub fn hat(center: f64, width: f64, height: f64) -> Self {
        DatumSpec::Builtin(Builtin::PiecewiseLinear {
            xs: vec![0.0, center - width, center, center + width, TAU],
            ys: vec![0.0, 0.0, height, 0.0, 0.0],
            period: Some(TAU),
        })
    }

    pub fn separable(a: DatumSpec, b: DatumSpec) -> Self {
        DatumSpec::Separable(Box::new(a), Box::new(b))
    }

    /// Adds `c`; nested shifts collapse so the base stays identical.
    /// User-supplied datum; it is `C1` exactly when `grad` is given.
    pub fn custom(
        name: &str,
        f: impl Fn(&Vec2) -> f64 + Send + Sync + 'static,
        grad: Option<impl Fn(&Vec2) -> Vec2 + Send + Sync + 'static>,
    ) -> Self {
        DatumSpec::Custom {
            f: Arc::new(f),
            grad: grad.map(|g| Arc::new(g) as DatumGradFn),
            name: name.to_string(),
        }
    }

    pub fn shifted(self, c: f64) -> Self {
        match self {
            DatumSpec::Shifted(base, c0) => DatumSpec::Shifted(base, c0 + c),
            other => DatumSpec::Shifted(Box::new(other), c),
        }
    }

    /// Splits off an outer constant shift.
    pub fn peel_shift(&self) -> (&DatumSpec, f64) {
        match self {
            DatumSpec::Shifted(base, c) => (base, *c),
            other => (other, 0.0),
        }
    }

    pub fn table(grid: SpaceGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Contract(format!(
                "table has {} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Contract(format!("table value {i} is not finite")));
        }
        Ok(DatumSpec::Table { grid, values })
    }

    /// `C1` surrogate of grid values by monotone cubic interpolation.
    pub fn monotone_cubic(grid: &SpaceGrid, values: &[f64]) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Contract(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Contract("grid data must be finite".into()));
        }
        match grid.dim() {
            1 => {
                let axis = grid.axis(0).clone();
                let slopes = monotone_slopes(values, axis.spacing(), axis.periodic);
                Ok(DatumSpec::Hermite {
                    axis,
                    values: values.to_vec(),
                    slopes,
                })
            }
            _ => {
                let (a0, a1) = (grid.axis(0), grid.axis(1));
                let (n0, n1) = (a0.n, a1.n);
                let mut dx = vec![0.0; values.len()];
                let mut dy = vec![0.0; values.len()];
                for j in 0..n1 {
                    let line: Vec<f64> = (0..n0).map(|i| values[i * n1 + j]).collect();
                    let s = monotone_slopes(&line, a0.spacing(), a0.periodic);
                    for i in 0..n0 {
                        dx[i * n1 + j] = s[i];
                    }
                }
                for i in 0..n0 {
                    let s = monotone_slopes(&values[i * n1..(i + 1) * n1], a1.spacing(), a1.periodic);
                    dy[i * n1..(i + 1) * n1].copy_from_slice(&s);
                }
                Ok(DatumSpec::Hermite2 {
                    grid: grid.clone(),
                    values: values.to_vec(),
                    dx,
                    dy,
                })
            }
        }
    }

    pub fn smoothness(&self) -> Smoothness {
        match self {
            DatumSpec::Builtin(b) => match b {
                Builtin::ShiftedAbsSine { .. } | Builtin::PiecewiseLinear { .. } => Smoothness::C0,
                _ => Smoothness::C1,
            },
            DatumSpec::Table { .. } => Smoothness::C0,
            DatumSpec::Hermite { .. } | DatumSpec::Hermite2 { .. } => Smoothness::C1,
            DatumSpec::Separable(a, b) => {
                if a.smoothness() == Smoothness::C1 && b.smoothness() == Smoothness::C1 {
                    Smoothness::C1
                } else {
                    Smoothness::C0
                }
            }
            DatumSpec::Shifted(base, _) => base.smoothness(),
            DatumSpec::Custom { grad, .. } => {
                if grad.is_some() {
                    Smoothness::C1
                } else {
                    Smoothness::C0
                }
            }
        }
    }

    pub fn is_c1(&self) -> bool {
        self.smoothness() == Smoothness::C1
    }

    /// The two factors when the datum is declared separable.
    pub fn factors(&self) -> Option<(DatumSpec, DatumSpec)> {
        match self {
            DatumSpec::Separable(a, b) => Some(((**a).clone(), (**b).clone())),
            DatumSpec::Shifted(base, c) => {
                let (a, b) = base.factors()?;
                Some((a.shifted(*c), b))
            }
            _ => None,
        }
    }

    /// Checked evaluation; `x` has one or two coordinates.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.is_empty() || x.len() > 2 {
            return Err(Error::Contract(format!(
                "datum evaluated at a point of dimension {}",
                x.len()
            )));
        }
        self.value(&pad(x))
    }

    /// `sigma(x)` for a padded point.
    pub fn value(&self, x: &Vec2) -> Result<f64> {
        match self {
            DatumSpec::Builtin(b) => builtin_value(b, x),
            DatumSpec::Table { grid, values } => table_value(grid, values, x),
            DatumSpec::Hermite {
                axis,
                values,
                slopes,
            } => hermite_1d(axis, values, slopes, x[0]).map(|(v, _)| v),
            DatumSpec::Hermite2 {
                grid,
                values,
                dx,
                dy,
            } => hermite_2d(grid, values, dx, dy, x).map(|(v, _)| v),
            DatumSpec::Separable(a, b) => Ok(a.value(&[x[0], 0.0])? + b.value(&[x[1], 0.0])?),
            DatumSpec::Shifted(base, c) => Ok(base.value(x)? + c),
            DatumSpec::Custom { f, .. } => Ok(f(x)),
        }
    }

    /// `grad sigma(x)`; a contract error for `C0` data.
    pub fn gradient(&self, x: &Vec2) -> Result<Vec2> {
        match self {
            DatumSpec::Builtin(b) => builtin_gradient(b, x),
            DatumSpec::Table { .. } => Err(c0_error("table")),
            DatumSpec::Hermite {
                axis,
                values,
                slopes,
            } => hermite_1d(axis, values, slopes, x[0]).map(|(_, d)| [d, 0.0]),
            DatumSpec::Hermite2 {
                grid,
                values,
                dx,
                dy,
            } => hermite_2d(grid, values, dx, dy, x).map(|(_, d)| d),
            DatumSpec::Separable(a, b) => {
                Ok([a.gradient(&[x[0], 0.0])?[0], b.gradient(&[x[1], 0.0])?[0]])
            }
            DatumSpec::Shifted(base, _) => base.gradient(x),
            DatumSpec::Custom { grad, name, .. } => match grad {
                Some(g) => Ok(g(x)),
                None => Err(c0_error(name)),
            },
        }
    }

    /// Values at every grid node.
    pub fn sample(&self, grid: &SpaceGrid) -> Result<Vec<f64>> {
        (0..grid.len()).map(|i| self.value(&grid.point(i))).collect()
    }

    /// The box over which the datum is naturally defined (one period on circles).
    pub fn natural_box(&self, dim: usize) -> Vec<(f64, f64)> {
        match self {
            DatumSpec::Table { grid, .. } | DatumSpec::Hermite2 { grid, .. } => grid
                .axes()
                .iter()
                .map(|a| (a.lo, a.hi))
                .collect(),
            DatumSpec::Hermite { axis, .. } => vec![(axis.lo, axis.hi)],
            DatumSpec::Builtin(Builtin::CubicBranch(_)) => {
                vec![(-super::hamiltonian::CUBIC_X_MAX, super::hamiltonian::CUBIC_X_MAX)]
            }
            DatumSpec::Builtin(Builtin::PiecewiseLinear { xs, period, .. }) if period.is_none() => {
                vec![(xs[0], xs[xs.len() - 1]); dim]
            }
            DatumSpec::Separable(a, b) => vec![a.natural_box(1)[0], b.natural_box(1)[0]],
            DatumSpec::Shifted(base, _) => base.natural_box(dim),
            _ => vec![(0.0, TAU); dim],
        }
    }

    /// Per-axis `(start, period)` for data on circles; `None` on line axes.
    pub fn periods(&self, dim: usize) -> Vec<Option<(f64, f64)>> {
        let of_axis = |a: &Axis| a.periodic.then(|| (a.lo, a.hi - a.lo));
        match self {
            DatumSpec::Table { grid, .. } | DatumSpec::Hermite2 { grid, .. } => {
                grid.axes().iter().map(of_axis).collect()
            }
            DatumSpec::Hermite { axis, .. } => vec![of_axis(axis)],
            DatumSpec::Builtin(Builtin::CubicBranch(_)) => vec![None; dim],
            DatumSpec::Builtin(Builtin::PiecewiseLinear { xs, period, .. }) => {
                vec![period.map(|p| (xs[0], p)); dim]
            }
            DatumSpec::Separable(a, b) => vec![a.periods(1)[0], b.periods(1)[0]],
            DatumSpec::Shifted(base, _) => base.periods(dim),
            _ => vec![Some((0.0, TAU)); dim],
        }
    }

    /// Upper bound for `sup |grad sigma|` over the natural box (sampled, 5% margin).
    pub fn slope_bound(&self, dim: usize) -> f64 {
        if let Some(b) = self.analytic_slope_bound() {
            return b;
        }
        if let DatumSpec::Separable(a, b) = self {
            return a.slope_bound(1).hypot(b.slope_bound(1));
        }
        let bx = self.natural_box(dim);
        let n: usize = if dim == 1 { 2048 } else { 96 };
        let mut best = 0.0f64;
        let step = |k: usize| (bx[k].1 - bx[k].0) / n as f64;
        let total = n.pow(dim as u32);
        for idx in 0..total {
            let i = [idx % n, idx / n];
            let mut x = [0.0; 2];
            for k in 0..dim {
                x[k] = bx[k].0 + (i[k] as f64 + 0.5) * step(k);
            }
            if self.is_c1() {
                if let Ok(g) = self.gradient(&x) {
                    best = best.max(g[0].hypot(g[1]));
                }
            } else {
                let mut g = [0.0; 2];
                for k in 0..dim {
                    let h = 0.25 * step(k);
                    let (mut xp, mut xm) = (x, x);
                    xp[k] += h;
                    xm[k] -= h;
                    if let (Ok(a), Ok(b)) = (self.value(&xp), self.value(&xm)) {
                        g[k] = (a - b) / (2.0 * h);
                    }
                }
                best = best.max(g[0].hypot(g[1]));
            }
        }
        best * 1.05
    }

    fn analytic_slope_bound(&self) -> Option<f64> {
        match self {
            DatumSpec::Builtin(b) => match b {
                Builtin::Cos { amp, wave, .. }
                | Builtin::Sin { amp, wave, .. }
                | Builtin::ShiftedAbsSine { amp, wave, .. } => Some(amp.abs() * wave[0].hypot(wave[1])),
                Builtin::Constant(_) => Some(0.0),
                Builtin::PiecewiseLinear { xs, ys, .. } => Some(
                    xs.windows(2)
                        .zip(ys.windows(2))
                        .map(|(x, y)| ((y[1] - y[0]) / (x[1] - x[0])).abs())
                        .fold(0.0, f64::max),
                ),
                Builtin::CubicBranch(_) => None,
            },
            DatumSpec::Shifted(base, _) => base.analytic_slope_bound(),
            _ => None,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            DatumSpec::Builtin(b) => match b {
                Builtin::Cos { amp, wave, phase } => {
                    format!("cos(amp={amp}, wave={wave:?}, phase={phase})")
                }
                Builtin::Sin { amp, wave, phase } => {
                    format!("sin(amp={amp}, wave={wave:?}, phase={phase})")
                }
                Builtin::ShiftedAbsSine { amp, wave, shift } => {
                    format!("shifted-abs-sine(amp={amp}, wave={wave:?}, shift={shift})")
                }
                Builtin::PiecewiseLinear { xs, .. } => format!("piecewise-linear({} knots)", xs.len()),
                Builtin::Constant(c) => format!("constant({c})"),
                Builtin::CubicBranch(d) => format!("cubic-branch(eps={})", d.eps),
            },
            DatumSpec::Table { grid, .. } => format!("table({} points)", grid.len()),
            DatumSpec::Hermite { axis, .. } => format!("hermite({} points)", axis.n),
            DatumSpec::Hermite2 { grid, .. } => format!("hermite2({} points)", grid.len()),
            DatumSpec::Separable(a, b) => format!("separable({}, {})", a.describe(), b.describe()),
            DatumSpec::Shifted(base, c) => format!("{} + {c}", base.describe()),
            DatumSpec::Custom { name, .. } => format!("custom({name})"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DatumSpec::Builtin(Builtin::PiecewiseLinear { xs, ys, period }) => {
                if xs.len() < 2 || xs.len() != ys.len() {
                    return Err(Error::Contract(
                        "piecewise-linear datum needs at least two knots with matching values".into(),
                    ));
                }
                if xs.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::Contract("knots must be strictly increasing".into()));
                }
                if let Some(p) = period {
                    if xs[xs.len() - 1] - xs[0] > p + 1e-12 {
                        return Err(Error::Contract("knots span more than one period".into()));
                    }
                }
                if ys.iter().any(|y| !y.is_finite()) {
                    return Err(Error::Contract("knot values must be finite".into()));
                }
                Ok(())
            }
            DatumSpec::Table { grid, values } => {
                Self::table(grid.clone(), values.clone()).map(|_| ())
            }
            DatumSpec::Hermite {
                axis,
                values,
                slopes,
            } => {
                axis.validate()?;
                if values.len() != axis.n || slopes.len() != axis.n {
                    return Err(Error::Contract("Hermite data length mismatch".into()));
                }
                Ok(())
            }
            DatumSpec::Separable(a, b) => {
                a.validate()?;
                b.validate()
            }
            DatumSpec::Shifted(base, c) => {
                if !c.is_finite() {
                    return Err(Error::Contract("shift must be finite".into()));
                }
                base.validate()
            }
            _ => Ok(()),
        }
    }
}

fn c0_error(what: &str) -> Error {
    Error::Contract(format!(
        "{what} datum is C0 and has no derivative; mollify it first"
    ))
}

fn wave_phase(wave: &Vec2, x: &Vec2) -> f64 {
    wave[0] * x[0] + wave[1] * x[1]
}

fn builtin_value(b: &Builtin, x: &Vec2) -> Result<f64> {
    Ok(match b {
        Builtin::Cos { amp, wave, phase } => amp * (wave_phase(wave, x) + phase).cos(),
        Builtin::Sin { amp, wave, phase } => amp * (wave_phase(wave, x) + phase).sin(),
        Builtin::ShiftedAbsSine { amp, wave, shift } => amp * (wave_phase(wave, x) - shift).sin().abs(),
        Builtin::PiecewiseLinear { xs, ys, period } => piecewise_linear(xs, ys, *period, x[0])?,
        Builtin::Constant(c) => *c,
        Builtin::CubicBranch(d) => d.value(x[0]),
    })
}

fn builtin_gradient(b: &Builtin, x: &Vec2) -> Result<Vec2> {
    match b {
        Builtin::Cos { amp, wave, phase } => {
            let s = -amp * (wave_phase(wave, x) + phase).sin();
            Ok([s * wave[0], s * wave[1]])
        }
        Builtin::Sin { amp, wave, phase } => {
            let c = amp * (wave_phase(wave, x) + phase).cos();
            Ok([c * wave[0], c * wave[1]])
        }
        Builtin::Constant(_) => Ok([0.0; 2]),
        Builtin::CubicBranch(d) => Ok([d.slope(x[0]), 0.0]),
        Builtin::ShiftedAbsSine { .. } => Err(c0_error("shifted-abs-sine")),
        Builtin::PiecewiseLinear { .. } => Err(c0_error("piecewise-linear")),
    }
}

fn piecewise_linear(xs: &[f64], ys: &[f64], period: Option<f64>, x: f64) -> Result<f64> {
    let n = xs.len();
    let x = match period {
        Some(p) => super::grid::reduce_periodic(x, xs[0], p),
        None => {
            if x < xs[0] - 1e-12 || x > xs[n - 1] + 1e-12 {
                return Err(Error::Domain(format!(
                    "x = {x} outside the knot range [{}, {}]",
                    xs[0],
                    xs[n - 1]
                )));
            }
            x.clamp(xs[0], xs[n - 1])
        }
    };
    if x >= xs[n - 1] {
        // periodic wrap between the last knot and the first knot plus one period
        return Ok(match period {
            Some(p) => {
                let span = xs[0] + p - xs[n - 1];
                if span <= 0.0 {
                    ys[n - 1]
                } else {
                    ys[n - 1] + (ys[0] - ys[n - 1]) * (x - xs[n - 1]) / span
                }
            }
            None => ys[n - 1],
        });
    }
    let k = xs.partition_point(|&k| k <= x).clamp(1, n - 1);
    let w = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
    Ok(ys[k - 1] + w * (ys[k] - ys[k - 1]))
}

/// Cell index and local fraction in `[0, 1]` along `axis`.
fn locate(axis: &Axis, x: f64) -> Result<(usize, usize, f64)> {
    let r = axis.reduce(x)?;
    let h = axis.spacing();
    let f = (r - axis.lo) / h;
    let last = if axis.periodic { axis.n - 1 } else { axis.n - 2 };
    let i = (f.floor() as usize).min(last);
    let w = (f - i as f64).clamp(0.0, 1.0);
    let j = if axis.periodic { (i + 1) % axis.n } else { i + 1 };
    Ok((i, j, w))
}

fn table_value(grid: &SpaceGrid, values: &[f64], x: &Vec2) -> Result<f64> {
    let (i0, j0, w0) = locate(grid.axis(0), x[0])?;
    if grid.dim() == 1 {
        return Ok(values[i0] * (1.0 - w0) + values[j0] * w0);
    }
    let (i1, j1, w1) = locate(grid.axis(1), x[1])?;
    let n1 = grid.axis(1).n;
    let v = |a: usize, b: usize| values[a * n1 + b];
    Ok((1.0 - w0) * ((1.0 - w1) * v(i0, i1) + w1 * v(i0, j1))
        + w0 * ((1.0 - w1) * v(j0, i1) + w1 * v(j0, j1)))
}

/// Cubic Hermite basis at `s` in `[0, 1]`: values and derivatives (w.r.t. `s`).
fn hermite_basis(s: f64) -> ([f64; 4], [f64; 4]) {
    let s2 = s * s;
    let s3 = s2 * s;
    (
        [
            2.0 * s3 - 3.0 * s2 + 1.0,
            s3 - 2.0 * s2 + s,
            -2.0 * s3 + 3.0 * s2,
            s3 - s2,
        ],
        [
            6.0 * s2 - 6.0 * s,
            3.0 * s2 - 4.0 * s + 1.0,
            -6.0 * s2 + 6.0 * s,
            3.0 * s2 - 2.0 * s,
        ],
    )
}

fn hermite_1d(axis: &Axis, values: &[f64], slopes: &[f64], x: f64) -> Result<(f64, f64)> {
    let (i, j, s) = locate(axis, x)?;
    let h = axis.spacing();
    let (b, db) = hermite_basis(s);
    let v = b[0] * values[i] + b[1] * h * slopes[i] + b[2] * values[j] + b[3] * h * slopes[j];
    let d = (db[0] * values[i] + db[1] * h * slopes[i] + db[2] * values[j] + db[3] * h * slopes[j]) / h;
    Ok((v, d))
}

fn hermite_2d(
    grid: &SpaceGrid,
    values: &[f64],
    dx: &[f64],
    dy: &[f64],
    x: &Vec2,
) -> Result<(f64, Vec2)> {
    let (a0, a1) = (grid.axis(0), grid.axis(1));
    let (i0, j0, s) = locate(a0, x[0])?;
    let (i1, j1, r) = locate(a1, x[1])?;
    let (h0, h1) = (a0.spacing(), a1.spacing());
    let n1 = a1.n;
    let (bs, dbs) = hermite_basis(s);
    let (br, dbr) = hermite_basis(r);
    let mut v = 0.0;
    let mut g = [0.0; 2];
    for (ci, node0, w0, dw0, t0) in [(0, i0, bs[0], dbs[0], bs[1]), (1, j0, bs[2], dbs[2], bs[3])] {
        let dt0 = if ci == 0 { dbs[1] } else { dbs[3] };
        for (cj, node1, w1, dw1, t1) in [(0, i1, br[0], dbr[0], br[1]), (1, j1, br[2], dbr[2], br[3])] {
            let dt1 = if cj == 0 { dbr[1] } else { dbr[3] };
            let k = node0 * n1 + node1;
            let (f, fx, fy) = (values[k], dx[k] * h0, dy[k] * h1);
            v += w0 * w1 * f + t0 * w1 * fx + w0 * t1 * fy;
            g[0] += (dw0 * w1 * f + dt0 * w1 * fx + dw0 * t1 * fy) / h0;
            g[1] += (w0 * dw1 * f + t0 * dw1 * fx + w0 * dt1 * fy) / h1;
        }
    }
    Ok((v, g))
}

/// Fritsch-Carlson slopes: the interpolant is monotone wherever the data is.
pub fn monotone_slopes(values: &[f64], h: f64, periodic: bool) -> Vec<f64> {
    let n = values.len();
    let m = if periodic { n } else { n - 1 };
    let delta: Vec<f64> = (0..m)
        .map(|i| (values[(i + 1) % n] - values[i]) / h)
        .collect();
    let mut d = vec![0.0; n];
    for i in 0..n {
        let (left, right) = if periodic {
            (Some(delta[(i + n - 1) % n]), Some(delta[i]))
        } else {
            (
                if i > 0 { Some(delta[i - 1]) } else { None },
                if i < m { Some(delta[i]) } else { None },
            )
        };
        d[i] = match (left, right) {
            (Some(a), Some(b)) => {
                if a * b <= 0.0 {
                    0.0
                } else {
                    // harmonic mean keeps the Fritsch-Carlson bound |d| <= 3 min(|a|, |b|)
                    2.0 * a * b / (a + b)
                }
            }
            (Some(a), None) | (None, Some(a)) => a,
            (None, None) => 0.0,
        };
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_examples() {
        assert_eq!(DatumSpec::cos().eval(&[0.0]).unwrap(), 1.0);
        assert_eq!(DatumSpec::constant(0.3).eval(&[17.0]).unwrap(), 0.3);
        let g = SpaceGrid::torus1(8).unwrap();
        let vals: Vec<f64> = g.points().iter().map(|p| p[0].sin()).collect();
        let t = DatumSpec::table(g.clone(), vals.clone()).unwrap();
        let mid = 0.5 * g.axis(0).spacing();
        assert!((t.eval(&[mid]).unwrap() - 0.5 * (vals[0] + vals[1])).abs() < 1e-15);
    }

    #[test]
    fn c0_data_has_no_gradient() {
        assert!(DatumSpec::shifted_abs_sine(0.3).gradient(&[0.1, 0.0]).is_err());
        assert!(DatumSpec::hat(1.0, 0.5, 1.0).gradient(&[0.1, 0.0]).is_err());
        assert!(DatumSpec::cos().gradient(&[0.1, 0.0]).is_ok());
    }

    #[test]
    fn segment_tables_reject_outside_points() {
        let g = SpaceGrid::line1(-1.0, 1.0, 9).unwrap();
        let t = DatumSpec::table(g, vec![0.0; 9]).unwrap();
        assert!(matches!(t.eval(&[1.5]), Err(Error::Domain(_))));
        assert!(t.eval(&[1.0]).is_ok());
    }

    #[test]
    fn hat_shape() {
        let h = DatumSpec::hat(3.0, 1.0, 2.0);
        h.validate().unwrap();
        assert_eq!(h.eval(&[3.0]).unwrap(), 2.0);
        assert_eq!(h.eval(&[2.5]).unwrap(), 1.0);
        assert_eq!(h.eval(&[5.0]).unwrap(), 0.0);
        assert_eq!(h.eval(&[3.0 + TAU]).unwrap(), 2.0);
    }

    #[test]
    fn hermite_reproduces_cubics_and_has_consistent_slope() {
        let g = SpaceGrid::line1(0.0, 1.0, 11).unwrap();
        let f = |x: f64| x * x * x - x;
        let df = |x: f64| 3.0 * x * x - 1.0;
        let axis = g.axis(0).clone();
        let d = DatumSpec::Hermite {
            values: axis.coords().iter().map(|&x| f(x)).collect(),
            slopes: axis.coords().iter().map(|&x| df(x)).collect(),
            axis,
        };
        for &x in &[0.03, 0.5, 0.77, 1.0] {
            assert!((d.eval(&[x]).unwrap() - f(x)).abs() < 1e-14);
            assert!((d.gradient(&[x, 0.0]).unwrap()[0] - df(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn monotone_cubic_tracks_smooth_data() {
        let g = SpaceGrid::torus2(32).unwrap();
        let s = DatumSpec::Builtin(Builtin::Cos {
            amp: 1.0,
            wave: [1.0, 1.0],
            phase: 0.0,
        });
        let d = DatumSpec::monotone_cubic(&g, &s.sample(&g).unwrap()).unwrap();
        let p = [0.37, 2.2];
        assert!((d.value(&p).unwrap() - s.value(&p).unwrap()).abs() < 5e-3);
        let gd = d.gradient(&p).unwrap();
        let gs = s.gradient(&p).unwrap();
        assert!((gd[0] - gs[0]).abs() < 5e-2 && (gd[1] - gs[1]).abs() < 5e-2);
        let e = 1e-6;
        let fd = (d.value(&[p[0] + e, p[1]]).unwrap() - d.value(&[p[0] - e, p[1]]).unwrap()) / (2.0 * e);
        assert!((fd - gd[0]).abs() < 1e-6);
    }

    #[test]
    fn shift_peels_back_to_the_same_base() {
        let d = DatumSpec::cos().shifted(0.25).shifted(0.5);
        let (base, c) = d.peel_shift();
        assert_eq!(c, 0.75);
        assert!(matches!(base, DatumSpec::Builtin(Builtin::Cos { .. })));
    }

    #[test]
    fn slope_bounds() {
        assert_eq!(DatumSpec::cos().slope_bound(1), 1.0);
        assert!((DatumSpec::hat(3.0, 1.0, 2.0).slope_bound(1) - 2.0).abs() < 1e-12);
        let sep = DatumSpec::separable(DatumSpec::cos(), DatumSpec::cos());
        assert!((sep.slope_bound(2) - 2f64.sqrt()).abs() < 1e-12);
    }
}
