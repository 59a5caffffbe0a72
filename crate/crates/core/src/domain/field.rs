use serde::Serialize;
use std::collections::BTreeMap;

use super::grid::SpaceGrid;
use super::hamiltonian::HamiltonianSpec;
use crate::error::{Error, Result};

/// How a field was produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Minmax,
    Viscosity,
    AnalyticExample,
    HopfLower,
    HopfUpper,
}

impl Method {
    pub fn tag(self) -> &'static str {
        match self {
            Method::Minmax => "minmax",
            Method::Viscosity => "viscosity",
            Method::AnalyticExample => "analytic-example",
            Method::HopfLower => "hopf-lower",
            Method::HopfUpper => "hopf-upper",
        }
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct FieldMeta {
    /// Broken-geodesics step count per instant, when applicable.
    pub steps: Vec<usize>,
    pub tolerances: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

/// `u(t, x)` sampled at a list of instants on one spatial grid.
#[derive(Clone, Debug)]
pub struct SolutionField {
    pub grid: SpaceGrid,
    pub times: Vec<f64>,
    /// One slice per instant, each in grid order.
    pub values: Vec<Vec<f64>>,
    pub method: Method,
    pub meta: FieldMeta,
}

#[derive(Clone, Debug, Serialize)]
pub struct LipschitzReport {
    pub measured: f64,
    pub bound: f64,
    pub momentum_range: f64,
    pub pass: bool,
}

impl SolutionField {
    pub fn new(grid: SpaceGrid, times: Vec<f64>, values: Vec<Vec<f64>>, method: Method) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::Contract(format!(
                "{} instants but {} slices",
                times.len(),
                values.len()
            )));
        }
        if times.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Contract("instants must be ordered".into()));
        }
        for (k, slice) in values.iter().enumerate() {
            if slice.len() != grid.len() {
                return Err(Error::Contract(format!(
                    "slice {k} has {} values for {} grid points",
                    slice.len(),
                    grid.len()
                )));
            }
            if let Some(i) = slice.iter().position(|v| !v.is_finite()) {
                return Err(Error::Contract(format!(
                    "non-finite value at t = {}, x = {:?}",
                    times[k],
                    grid.point(i)
                )));
            }
        }
        Ok(SolutionField {
            grid,
            times,
            values,
            method,
            meta: FieldMeta::default(),
        })
    }

    pub fn slice_at(&self, t: f64) -> Option<&[f64]> {
        self.times
            .iter()
            .position(|&s| (s - t).abs() <= 1e-12)
            .map(|k| self.values[k].as_slice())
    }

    pub fn last(&self) -> &[f64] {
        self.values.last().map(|v| v.as_slice()).unwrap_or(&[])
    }

    /// Largest one-sided spatial difference quotient over all slices.
    pub fn max_space_slope(&self) -> f64 {
        let mut best = 0.0f64;
        for slice in &self.values {
            for i in 0..self.grid.len() {
                let m = self.grid.multi_index(i);
                for (k, axis) in self.grid.axes().iter().enumerate() {
                    if let Some(j) = axis.neighbor(m[k], 1) {
                        let mut mj = m;
                        mj[k] = j;
                        let q = (slice[self.grid.flat_index(mj)] - slice[i]) / axis.spacing();
                        best = best.max(q.abs());
                    }
                }
            }
        }
        best
    }

    /// Time-Lipschitz audit: the largest difference quotient between consecutive slices
    /// must not exceed `sup |H|` over the visited momenta by more than 10%.
    pub fn lipschitz_audit(&self, h: &HamiltonianSpec) -> LipschitzReport {
        let mut measured = 0.0f64;
        for k in 1..self.times.len() {
            let dt = self.times[k] - self.times[k - 1];
            if dt <= 0.0 {
                continue;
            }
            let d = sup_distance(&self.values[k], &self.values[k - 1]);
            measured = measured.max(d / dt);
        }
        let p_range = self.max_space_slope();
        let t_max = self.times.last().copied().unwrap_or(0.0);
        let bound = sup_abs_h(h, &self.grid, t_max, p_range);
        LipschitzReport {
            measured,
            bound,
            momentum_range: p_range,
            pass: measured <= 1.1 * bound + 1e-12,
        }
    }
}

/// `sup |H(t, x, p)|` over grid nodes, `t` in `[0, t_max]` and `|p_i| <= p_range`.
pub fn sup_abs_h(h: &HamiltonianSpec, grid: &SpaceGrid, t_max: f64, p_range: f64) -> f64 {
    let dim = grid.dim();
    let np: usize = 33;
    let stride = (grid.len() / 256).max(1);
    let mut best = 0.0f64;
    for it in 0..5 {
        let t = t_max * it as f64 / 4.0;
        for i in (0..grid.len()).step_by(stride) {
            let x = grid.point(i);
            for ip in 0..np.pow(dim as u32) {
                let mut p = [0.0; 2];
                p[0] = -p_range + 2.0 * p_range * (ip % np) as f64 / (np - 1) as f64;
                if dim == 2 {
                    p[1] = -p_range + 2.0 * p_range * (ip / np) as f64 / (np - 1) as f64;
                }
                best = best.max(h.h(t, &x, &p).abs());
            }
        }
    }
    best
}

pub fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// `sup f - inf f`.
pub fn oscillation(f: &[f64]) -> f64 {
    let (lo, hi) = f
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if f.is_empty() {
        0.0
    } else {
        hi - lo
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite_slices() {
        let g = SpaceGrid::torus1(8).unwrap();
        let mut v = vec![0.0; 8];
        v[3] = f64::NAN;
        assert!(SolutionField::new(g, vec![0.0], vec![v], Method::Minmax).is_err());
    }

    #[test]
    fn transport_field_is_lipschitz_in_time() {
        let g = SpaceGrid::torus1(64).unwrap();
        let times = vec![0.0, 0.25, 0.5];
        let values = times
            .iter()
            .map(|&t| g.points().iter().map(|p| (p[0] - t).cos()).collect())
            .collect();
        let f = SolutionField::new(g, times, values, Method::AnalyticExample).unwrap();
        let h = HamiltonianSpec::custom_1d(
            super::super::hamiltonian::ScalarFn::Poly {
                coeffs: vec![0.0, 1.0],
                x_slope: 0.0,
            },
            super::super::hamiltonian::Convexity::None,
            1.0,
        );
        let r = f.lipschitz_audit(&h);
        assert!(r.pass, "{r:?}");
        assert!(r.measured > 0.9);
    }

    #[test]
    fn oscillation_ignores_constants() {
        assert_eq!(oscillation(&[0.2, 0.2, 0.2]), 0.0);
        assert_eq!(oscillation(&[-1.0, 0.5, 2.0]), 3.0);
    }
}
