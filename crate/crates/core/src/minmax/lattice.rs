//! Global min (or max) of a broken-geodesics generating function over `(xi, U)`.
//!
//! A dynamic program over a periodic lattice (a discrete Lax-Oleinik iteration) locates
//! the basin of the global optimum for every evaluation point at once; each candidate
//! chain is then polished by BFGS using the momenta carried by the steps as gradients.

use rayon::prelude::*;
use serde::Serialize;

use crate::domain::hamiltonian::Vec2;
use crate::error::{Error, Result};
use crate::gfqi::BrokenGF;
use crate::optim::{bfgs, BfgsOptions};
use crate::settings::SolverConfig;

/// Extra lattice cells beyond the characteristic reach on each side of a step.
const WINDOW_PAD: usize = 2;
/// Reach inflation applied before the padding.
const WINDOW_SLACK: f64 = 1.2;
/// Per-axis lattice cap in two dimensions.
const LATTICE_CAP_2D: usize = 160;

#[derive(Clone, Debug, Serialize)]
pub struct LatticeAxis {
    pub lo: f64,
    pub period: f64,
    pub m: usize,
    pub h: f64,
    /// Offsets per step run over `-w..=w`.
    pub w: usize,
}

impl LatticeAxis {
    fn wrap(&self, i: i64) -> usize {
        i.rem_euclid(self.m as i64) as usize
    }

    fn pos(&self, i: i64) -> f64 {
        self.lo + i as f64 * self.h
    }
}

/// One optimized evaluation.
#[derive(Clone, Debug, Serialize)]
pub struct ChainOptimum {
    pub value: f64,
    /// Value of the best lattice chain; `sign * value <= sign * certificate`.
    pub certificate: f64,
    /// Polished nodes `xi, X_1, .., X_N` on the covering space.
    pub nodes: Vec<Vec2>,
    pub candidates: usize,
}

/// Lattice solver for one chain and one direction (`sign = 1` min, `-1` max).
pub struct ChainSolver {
    g: BrokenGF,
    sign: f64,
    axes: Vec<LatticeAxis>,
    offsets: Vec<[i64; 2]>,
    /// `W_N` on the lattice.
    last: Vec<f64>,
    /// Best offset index per node for steps `0..N`.
    back: Vec<Vec<u32>>,
    margin: f64,
    candidates: usize,
    bfgs: BfgsOptions,
}

impl ChainSolver {
    pub fn new(g: BrokenGF, sign: f64, cfg: &SolverConfig) -> Result<Self> {
        let dim = g.dim();
        let n = g.n();
        let eps = g.steps.iter().map(|s| s.eps().abs()).fold(0.0, f64::max);
        let total = (g.t_to() - g.t_from()).abs();
        let reach = WINDOW_SLACK * eps * g.window.v_max;
        let target = (2.0 * total * g.window.v_max / (cfg.density.max(3) - 1) as f64).max(1e-12);
        let cap = if dim == 1 {
            cfg.lattice_cap
        } else {
            cfg.lattice_cap.min(LATTICE_CAP_2D)
        };
        let mut axes = Vec::with_capacity(dim);
        for k in 0..dim {
            let (lo, period) = g.periods[k].ok_or_else(|| {
                Error::Unsupported("minmax lattice needs periodic axes".into())
            })?;
            let m = ((period / target).ceil() as usize).clamp(16, cap.max(16));
            let h = period / m as f64;
            let w = (reach / h).ceil() as usize + WINDOW_PAD;
            if 2 * w + 1 > m {
                return Err(Error::Unsupported(format!(
                    "step reach {reach:.3} exceeds the period; increase the step count"
                )));
            }
            axes.push(LatticeAxis { lo, period, m, h, w });
        }
        let w2 = if dim == 2 { axes[1].w as i64 } else { 0 };
        let w1 = axes[0].w as i64;
        let offsets: Vec<[i64; 2]> = (-w2..=w2)
            .flat_map(|o2| (-w1..=w1).map(move |o1| [o1, o2]))
            .collect();
        let size: usize = axes.iter().map(|a| a.m).product();
        let node = |b: usize| -> [i64; 2] {
            let m0 = axes[0].m;
            [(b % m0) as i64, (b / m0) as i64]
        };
        let flat = |i: [i64; 2]| -> usize {
            let mut f = axes[0].wrap(i[0]);
            if dim == 2 {
                f += axes[0].m * axes[1].wrap(i[1]);
            }
            f
        };
        let point = |i: [i64; 2]| -> Vec2 {
            let mut p = [0.0; 2];
            for k in 0..dim {
                p[k] = axes[k].pos(i[k]);
            }
            p
        };
        let mut cur: Vec<f64> = (0..size)
            .into_par_iter()
            .map(|b| Ok(sign * g.datum.value(&point(node(b)))?))
            .collect::<Result<_>>()?;
        let mut back = Vec::with_capacity(n);
        let mut table: Option<(usize, Vec<f64>)> = None;
        let reusable = g.h.is_autonomous();
        for j in 0..n {
            let step = &g.steps[j];
            let same = match &table {
                Some((i, _)) => reusable && (g.steps[*i].eps() - step.eps()).abs() <= 1e-14 * step.eps().abs(),
                None => false,
            };
            if !same {
                let tab: Vec<f64> = if step.is_analytic() {
                    // translation invariant: one row serves every node
                    offsets
                        .iter()
                        .map(|o| Ok(sign * step.value(&point(*o), &point([0, 0]))?))
                        .collect::<Result<_>>()?
                } else {
                    (0..size)
                        .into_par_iter()
                        .flat_map_iter(|b| {
                            let i = node(b);
                            let to = point(i);
                            offsets.iter().map(move |o| {
                                let from = point([i[0] + o[0], i[1] + o[1]]);
                                match step.value(&from, &to) {
                                    Ok(v) => sign * v,
                                    Err(_) => f64::INFINITY,
                                }
                            })
                        })
                        .collect()
                };
                table = Some((j, tab));
            }
            let tab = &table.as_ref().unwrap().1;
            let q = offsets.len();
            let analytic = step.is_analytic();
            let (next, arg): (Vec<f64>, Vec<u32>) = (0..size)
                .into_par_iter()
                .map(|b| {
                    let i = node(b);
                    let row = if analytic { 0 } else { b * q };
                    let mut best = f64::INFINITY;
                    let mut arg = 0u32;
                    for (k, o) in offsets.iter().enumerate() {
                        let v = cur[flat([i[0] + o[0], i[1] + o[1]])] + tab[row + k];
                        if v < best {
                            best = v;
                            arg = k as u32;
                        }
                    }
                    (best, arg)
                })
                .unzip();
            if next.iter().all(|v| !v.is_finite()) {
                return Err(Error::NoTwist {
                    t0: step.t0,
                    t1: step.t1,
                    iterations: 0,
                    residual: f64::INFINITY,
                });
            }
            cur = next;
            back.push(arg);
        }
        let lam = g.h
            .quadratic_part()
            .map(|a| a.eigenvalues().iter().fold(f64::INFINITY, |m, e| m.min(e.abs())))
            .unwrap_or(1.0);
        let hmax = axes.iter().map(|a| a.h).fold(0.0, f64::max);
        let margin = (n + 2) as f64 * hmax * hmax / (eps * lam) + 1e-3;
        Ok(ChainSolver {
            g,
            sign,
            axes,
            offsets,
            last: cur,
            back,
            margin,
            candidates: cfg.candidates.max(1),
            bfgs: BfgsOptions::default(),
        })
    }

    pub fn gf(&self) -> &BrokenGF {
        &self.g
    }

    pub fn sign(&self) -> f64 {
        self.sign
    }

    pub fn axes(&self) -> &[LatticeAxis] {
        &self.axes
    }

    fn flat(&self, i: [i64; 2]) -> usize {
        let mut f = self.axes[0].wrap(i[0]);
        if self.g.dim() == 2 {
            f += self.axes[0].m * self.axes[1].wrap(i[1]);
        }
        f
    }

    fn point(&self, i: [i64; 2]) -> Vec2 {
        let mut p = [0.0; 2];
        for k in 0..self.g.dim() {
            p[k] = self.axes[k].pos(i[k]);
        }
        p
    }

    /// Optimum of `S(x; .)` in the solver's direction.
    pub fn eval(&self, x: &Vec2) -> Result<ChainOptimum> {
        let g = &self.g;
        let dim = g.dim();
        let n = g.n();
        let last = &g.steps[n];
        // lifts of lattice nodes within one window of x
        let mut ranges = [(0i64, 0i64); 2];
        for k in 0..dim {
            let a = &self.axes[k];
            let c = (x[k] - a.lo) / a.h;
            ranges[k] = ((c - a.w as f64).ceil() as i64, (c + a.w as f64).floor() as i64);
        }
        let n0 = (ranges[0].1 - ranges[0].0 + 1) as usize;
        let n1 = if dim == 2 {
            (ranges[1].1 - ranges[1].0 + 1) as usize
        } else {
            1
        };
        let lift = |r: usize| -> [i64; 2] { [ranges[0].0 + (r % n0) as i64, ranges[1].0 + (r / n0) as i64] };
        let costs: Vec<f64> = (0..n0 * n1)
            .map(|r| {
                let i = lift(r);
                match last.value(&self.point(i), x) {
                    Ok(v) => self.last[self.flat(i)] + self.sign * v,
                    Err(_) => f64::INFINITY,
                }
            })
            .collect();
        // local minima over the box
        let mut minima: Vec<(f64, usize)> = Vec::new();
        for r in 0..n0 * n1 {
            let c = costs[r];
            if !c.is_finite() {
                continue;
            }
            let (r0, r1) = (r % n0, r / n0);
            let mut is_min = true;
            let mut check = |rr: usize| {
                if costs[rr] < c {
                    is_min = false;
                }
            };
            if r0 > 0 {
                check(r - 1);
            }
            if r0 + 1 < n0 {
                check(r + 1);
            }
            if r1 > 0 {
                check(r - n0);
            }
            if r1 + 1 < n1 {
                check(r + n0);
            }
            if is_min {
                minima.push((c, r));
            }
        }
        if minima.is_empty() {
            return Err(Error::WindowTooSmall {
                location: x[..dim].to_vec(),
                detail: "no finite lattice chain reaches the point".into(),
            });
        }
        minima.sort_by(|a, b| a.0.total_cmp(&b.0));
        let best_cost = minima[0].0;
        let chosen: Vec<usize> = minima
            .iter()
            .take(self.candidates)
            .filter(|(c, _)| *c <= best_cost + self.margin)
            .map(|(_, r)| *r)
            .collect();
        let mut best: Option<(f64, Vec<Vec2>)> = None;
        for &r in &chosen {
            let mut lifts = vec![[0i64; 2]; n + 1];
            lifts[n] = lift(r);
            for j in (0..n).rev() {
                let o = self.offsets[self.back[j][self.flat(lifts[j + 1])] as usize];
                lifts[j] = [lifts[j + 1][0] + o[0], lifts[j + 1][1] + o[1]];
            }
            let start: Vec<f64> = lifts
                .iter()
                .flat_map(|i| self.point(*i)[..dim].to_vec())
                .collect();
            let objective = |v: &[f64]| -> Result<(f64, Vec<f64>)> {
                let mut nodes: Vec<Vec2> = v
                    .chunks(dim)
                    .map(|c| if dim == 1 { [c[0], 0.0] } else { [c[0], c[1]] })
                    .collect();
                nodes.push(*x);
                let (s, grad) = g.value_grad_nodes_core(&nodes)?;
                let gv = grad[..=n]
                    .iter()
                    .flat_map(|gk| gk[..dim].iter().map(|c| self.sign * c).collect::<Vec<_>>())
                    .collect();
                Ok((self.sign * s, gv))
            };
            let res = bfgs(objective, &start, &self.bfgs)?;
            let mut nodes: Vec<Vec2> = res
                .x
                .chunks(dim)
                .map(|c| if dim == 1 { [c[0], 0.0] } else { [c[0], c[1]] })
                .collect();
            if best.as_ref().is_none_or(|(f, _)| res.f < *f) {
                nodes.push(*x);
                self.check_window(x, &nodes)?;
                nodes.pop();
                best = Some((res.f, nodes));
            }
        }
        let (f, nodes) = best.expect("at least one candidate");
        Ok(ChainOptimum {
            value: self.sign * f.min(best_cost) + g.datum_offset,
            certificate: self.sign * best_cost + g.datum_offset,
            nodes,
            candidates: chosen.len(),
        })
    }

    fn check_window(&self, x: &Vec2, nodes: &[Vec2]) -> Result<()> {
        for j in 0..nodes.len() - 1 {
            for k in 0..self.g.dim() {
                let a = &self.axes[k];
                let d = (nodes[j + 1][k] - nodes[j][k]).abs();
                if d >= (a.w as f64 - 0.5) * a.h {
                    return Err(Error::WindowTooSmall {
                        location: x[..self.g.dim()].to_vec(),
                        detail: format!(
                            "step {j} moves {d:.4} along axis {k}, window {:.4}",
                            a.w as f64 * a.h
                        ),
                    });
                }
            }
        }
        Ok(())
    }

    /// Evaluates many points in parallel.
    pub fn eval_many(&self, xs: &[Vec2]) -> Vec<Result<ChainOptimum>> {
        xs.par_iter().map(|x| self.eval(x)).collect()
    }
}
