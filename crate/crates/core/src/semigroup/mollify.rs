//! Mollification of `C0` data and the `C0` extension of the solution operator.

use serde::Serialize;

use super::report::{Experiment, ResidualReport};
use crate::domain::hamiltonian::bump;
use crate::domain::{Axis, Builtin, DatumSpec, HamiltonianSpec, SolutionField, SpaceGrid};
use crate::error::{Error, Result};
use crate::minmax::solve_field;
use crate::settings::SolverConfig;

/// Quadrature nodes across the kernel support.
const KERNEL_POINTS: usize = 96;

/// Normalized kernel weights and derivative weights at the midpoints of `[-eps, eps]`.
fn kernel(eps: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let dy = 2.0 * eps / KERNEL_POINTS as f64;
    let ys: Vec<f64> = (0..KERNEL_POINTS).map(|i| -eps + (i as f64 + 0.5) * dy).collect();
    let phi: Vec<f64> = ys.iter().map(|y| bump((y / eps).powi(2))).collect();
    let mass: f64 = phi.iter().sum();
    let w: Vec<f64> = phi.iter().map(|p| p / mass).collect();
    // d/dy exp(1 - 1/(1 - s^2)), s = y / eps
    let dw: Vec<f64> = ys
        .iter()
        .zip(&phi)
        .map(|(y, p)| {
            let s = y / eps;
            let q = 1.0 - s * s;
            p * (-2.0 * s / (q * q)) / eps / mass
        })
        .collect();
    (ys, w, dw)
}

fn is_constant(d: &DatumSpec) -> bool {
    match d {
        DatumSpec::Builtin(Builtin::Constant(_)) => true,
        DatumSpec::Shifted(base, _) => is_constant(base),
        _ => false,
    }
}

/// Convolution of `d` with a periodized smooth bump of half-width `eps`.
///
/// The result is a cubic Hermite datum whose nodal values and slopes are the convolution
/// and its exact derivative. Separable 2-D data is mollified factor by factor; coupled
/// 2-D data is not supported. Constants are returned unchanged.
pub fn mollify(d: &DatumSpec, eps: f64) -> Result<DatumSpec> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Contract(format!("mollifier width must be positive, got {eps}")));
    }
    if is_constant(d) {
        return Ok(d.clone());
    }
    if let DatumSpec::Shifted(base, c) = d {
        return Ok(mollify(base, eps)?.shifted(*c));
    }
    if let DatumSpec::Separable(a, b) = d {
        return Ok(DatumSpec::separable(mollify(a, eps)?, mollify(b, eps)?));
    }
    let (lo, period) = d.periods(1)[0].ok_or_else(|| {
        Error::Unsupported(format!("{} is not periodic; mollification needs a circle", d.describe()))
    })?;
    if eps >= 0.5 * period {
        return Err(Error::Contract(format!("width {eps} exceeds half the period")));
    }
    let n = ((8.0 * period / eps).ceil() as usize).clamp(512, 16384);
    let axis = Axis {
        lo,
        hi: lo + period,
        n,
        periodic: true,
    };
    let (ys, w, dw) = kernel(eps);
    let mut values = Vec::with_capacity(n);
    let mut slopes = Vec::with_capacity(n);
    for i in 0..n {
        let x = axis.coord(i);
        let mut v = 0.0;
        let mut s = 0.0;
        for k in 0..ys.len() {
            let f = d.value(&[x - ys[k], 0.0])?;
            v += w[k] * f;
            s += dw[k] * f;
        }
        values.push(v);
        slopes.push(s);
    }
    Ok(DatumSpec::Hermite { axis, values, slopes })
}

/// `sup |a - b|` sampled on `grid` refined fourfold.
pub fn datum_distance(a: &DatumSpec, b: &DatumSpec, grid: &SpaceGrid) -> Result<f64> {
    let fine = grid.refined(4);
    let mut best = 0.0f64;
    for x in fine.points() {
        best = best.max((a.value(&x)? - b.value(&x)?).abs());
    }
    Ok(best)
}

#[derive(Clone, Debug, Serialize)]
pub struct C0Solution {
    #[serde(skip)]
    pub field: SolutionField,
    pub report: ResidualReport,
    /// `sup |sigma_n - sigma|` for each width.
    pub mollifier_deviation: Vec<f64>,
}

/// Solves for `mollify(d, eps_n)` along a strictly decreasing schedule and audits the
/// sequence: consecutive solution distances must stay below the consecutive datum
/// distances plus the solver tolerance and must decrease.
pub fn c0_solve(
    h: &HamiltonianSpec,
    d: &DatumSpec,
    schedule: &[f64],
    grid: &SpaceGrid,
    times: &[f64],
    cfg: &SolverConfig,
) -> Result<C0Solution> {
    if schedule.len() < 2 {
        return Err(Error::Contract("schedule needs at least two widths".into()));
    }
    if schedule.windows(2).any(|w| !(w[1] < w[0])) || schedule.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::Contract("schedule must be positive and strictly decreasing".into()));
    }
    let mut data = Vec::with_capacity(schedule.len());
    let mut fields = Vec::with_capacity(schedule.len());
    let mut deviation = Vec::with_capacity(schedule.len());
    for &eps in schedule {
        let dn = mollify(d, eps)?;
        deviation.push(datum_distance(&dn, d, grid)?);
        fields.push(solve_field(h, &dn, grid, times, cfg)?);
        data.push(dn);
    }
    let mut solution_dist = Vec::new();
    let mut datum_dist = Vec::new();
    let mut worst = (f64::NEG_INFINITY, Vec::new());
    for k in 0..schedule.len() - 1 {
        let (a, b) = (&fields[k], &fields[k + 1]);
        let mut best = (0.0f64, 0usize);
        for (sa, sb) in a.values.iter().zip(&b.values) {
            for (i, (x, y)) in sa.iter().zip(sb).enumerate() {
                if (x - y).abs() > best.0 {
                    best = ((x - y).abs(), i);
                }
            }
        }
        solution_dist.push(best.0);
        if best.0 > worst.0 {
            worst = (best.0, grid.point(best.1)[..grid.dim()].to_vec());
        }
        datum_dist.push(datum_distance(&data[k], &data[k + 1], grid)?);
    }
    let excess = solution_dist
        .iter()
        .zip(&datum_dist)
        .map(|(s, d)| s - d)
        .fold(f64::NEG_INFINITY, f64::max);
    let decreasing = solution_dist.windows(2).all(|w| w[1] < w[0]);
    let tol = cfg.tol_solver;
    let mut report = ResidualReport::new(Experiment::C0Cauchy, times.to_vec(), excess.max(0.0), 0.0, tol, worst.1);
    report.pass = report.pass && decreasing;
    report.details.insert("decreasing".into(), if decreasing { 1.0 } else { 0.0 });
    report.series.insert("widths".into(), schedule.to_vec());
    report.series.insert("solution_distance".into(), solution_dist);
    report.series.insert("datum_distance".into(), datum_dist);
    report.series.insert("mollifier_deviation".into(), deviation.clone());
    let mut field = fields.pop().expect("schedule is nonempty");
    field.meta.notes.push(format!("C0 extension over widths {schedule:?}"));
    if !report.pass {
        field.meta.notes.push("Cauchy diagnostic failed".into());
    }
    Ok(C0Solution {
        field,
        report,
        mollifier_deviation: deviation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_is_unchanged() {
        let d = DatumSpec::constant(0.7);
        let m = mollify(&d, 0.1).unwrap();
        let grid = SpaceGrid::torus1(64).unwrap();
        assert!(m.sample(&grid).unwrap().iter().all(|v| *v == 0.7));
    }

    #[test]
    fn smooth_datum_deviation_shrinks() {
        let grid = SpaceGrid::torus1(128).unwrap();
        let d = DatumSpec::cos();
        let devs: Vec<f64> = [0.2, 0.1, 0.05]
            .iter()
            .map(|&e| datum_distance(&mollify(&d, e).unwrap(), &d, &grid).unwrap())
            .collect();
        assert!(devs[1] < devs[0] && devs[2] < devs[1], "{devs:?}");
    }

    #[test]
    fn abs_sine_deviation_within_lipschitz_bound() {
        let grid = SpaceGrid::torus1(256).unwrap();
        let d = DatumSpec::shifted_abs_sine(0.3);
        let m = mollify(&d, 0.1).unwrap();
        assert!(m.is_c1());
        let dev = datum_distance(&m, &d, &grid).unwrap();
        assert!(dev <= 0.1, "{dev}");
        assert!(dev > 0.0);
    }

    #[test]
    fn mollified_slopes_match_values() {
        let d = DatumSpec::shifted_abs_sine(0.0);
        let m = mollify(&d, 0.2).unwrap();
        for &x in &[0.05, 1.0, 3.1, 3.2, 5.0] {
            let h = 1e-6;
            let fd = (m.value(&[x + h, 0.0]).unwrap() - m.value(&[x - h, 0.0]).unwrap()) / (2.0 * h);
            let g = m.gradient(&[x, 0.0]).unwrap()[0];
            assert!((fd - g).abs() < 1e-5, "x={x}: {fd} vs {g}");
        }
    }
}
