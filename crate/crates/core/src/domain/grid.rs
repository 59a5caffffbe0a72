use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Minimum number of points per axis.
pub const MIN_POINTS: usize = 8;

/// One axis of a [`SpaceGrid`]: either a circle of length `hi - lo` or a closed segment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    pub periodic: bool,
}

impl Axis {
    pub fn circle(n: usize) -> Self {
        Axis {
            lo: 0.0,
            hi: 2.0 * PI,
            n,
            periodic: true,
        }
    }

    pub fn segment(lo: f64, hi: f64, n: usize) -> Self {
        Axis {
            lo,
            hi,
            n,
            periodic: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < MIN_POINTS {
            return Err(Error::Contract(format!(
                "axis needs at least {MIN_POINTS} points, got {}",
                self.n
            )));
        }
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) {
            return Err(Error::Contract(format!(
                "axis bounds must satisfy lo < hi, got [{}, {}]",
                self.lo, self.hi
            )));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        if self.periodic {
            (self.hi - self.lo) / self.n as f64
        } else {
            (self.hi - self.lo) / (self.n - 1) as f64
        }
    }

    pub fn period(&self) -> Option<f64> {
        self.periodic.then(|| self.hi - self.lo)
    }

    pub fn coord(&self, i: usize) -> f64 {
        self.lo + i as f64 * self.spacing()
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.coord(i)).collect()
    }

    /// Reduce `x` into `[lo, hi)` on periodic axes; on segments check membership.
    pub fn reduce(&self, x: f64) -> Result<f64> {
        if self.periodic {
            Ok(reduce_periodic(x, self.lo, self.hi - self.lo))
        } else if x < self.lo - 1e-12 || x > self.hi + 1e-12 {
            Err(Error::Domain(format!(
                "x = {x} outside [{}, {}]",
                self.lo, self.hi
            )))
        } else {
            Ok(x.clamp(self.lo, self.hi))
        }
    }

    /// Index of `i` shifted by `off`, wrapping on circles; `None` past a segment end.
    pub fn neighbor(&self, i: usize, off: isize) -> Option<usize> {
        let j = i as isize + off;
        if self.periodic {
            Some(j.rem_euclid(self.n as isize) as usize)
        } else if j < 0 || j >= self.n as isize {
            None
        } else {
            Some(j as usize)
        }
    }
}

pub fn reduce_periodic(x: f64, lo: f64, period: f64) -> f64 {
    let r = (x - lo).rem_euclid(period);
    // rem_euclid can return `period` itself for tiny negative inputs
    if r >= period {
        lo
    } else {
        lo + r
    }
}

/// Tensor grid on the 1-D or 2-D flat torus, a segment, or a mix.
///
/// Points are stored row-major: for 2-D grids the flat index is `i0 * n1 + i1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceGrid {
    axes: Vec<Axis>,
}

impl SpaceGrid {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() || axes.len() > 2 {
            return Err(Error::Contract(format!(
                "grid dimension must be 1 or 2, got {}",
                axes.len()
            )));
        }
        for a in &axes {
            a.validate()?;
        }
        Ok(SpaceGrid { axes })
    }

    /// The circle `[0, 2π)` with `n` points.
    pub fn torus1(n: usize) -> Result<Self> {
        Self::new(vec![Axis::circle(n)])
    }

    pub fn torus2(n: usize) -> Result<Self> {
        Self::new(vec![Axis::circle(n), Axis::circle(n)])
    }

    pub fn line1(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Self::new(vec![Axis::segment(lo, hi, n)])
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn axis(&self, k: usize) -> &Axis {
        &self.axes[k]
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.n).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn multi_index(&self, flat: usize) -> [usize; 2] {
        match self.axes.len() {
            1 => [flat, 0],
            _ => [flat / self.axes[1].n, flat % self.axes[1].n],
        }
    }

    pub fn flat_index(&self, idx: [usize; 2]) -> usize {
        match self.axes.len() {
            1 => idx[0],
            _ => idx[0] * self.axes[1].n + idx[1],
        }
    }

    /// Coordinates of the flat point `flat`; unused components are zero.
    pub fn point(&self, flat: usize) -> [f64; 2] {
        let m = self.multi_index(flat);
        let mut p = [0.0; 2];
        for (k, a) in self.axes.iter().enumerate() {
            p[k] = a.coord(m[k]);
        }
        p
    }

    pub fn points(&self) -> Vec<[f64; 2]> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Same bounds, `factor` times the resolution per axis (segments keep their endpoints).
    pub fn refined(&self, factor: usize) -> Self {
        let axes = self
            .axes
            .iter()
            .map(|a| Axis {
                n: if a.periodic {
                    a.n * factor
                } else {
                    (a.n - 1) * factor + 1
                },
                ..a.clone()
            })
            .collect();
        SpaceGrid { axes }
    }

    /// Nearest grid index to `x`, if `x` lies (up to rounding) on a grid node.
    pub fn node_of(&self, x: &[f64]) -> Option<usize> {
        let mut idx = [0usize; 2];
        for (k, a) in self.axes.iter().enumerate() {
            let r = a.reduce(x[k]).ok()?;
            let f = (r - a.lo) / a.spacing();
            let i = f.round();
            if (f - i).abs() > 1e-9 {
                return None;
            }
            let i = i as usize;
            idx[k] = if a.periodic { i % a.n } else { i.min(a.n - 1) };
        }
        Some(self.flat_index(idx))
    }
}
