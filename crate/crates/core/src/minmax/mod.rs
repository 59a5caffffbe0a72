//! Critical-value selection from broken-geodesics generating functions.

pub mod example;
pub mod hopf;
pub mod lattice;

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::domain::hamiltonian::{pad, Vec2};
use crate::domain::{DatumSpec, FieldMeta, HamiltonianSpec, Method, SolutionField, SpaceGrid};
use crate::error::{Error, Result};
use crate::gfqi::BrokenGF;
use crate::settings::{SolverConfig, StepCount};

pub use example::{
    example_gf, example_minimizers, example_solution, example_solution_in, example_superdifferential, ExampleDifferentials,
    ExampleWindow,
};
pub use hopf::{hopf_bounds, HopfBounds, HopfProblem};
pub use lattice::{ChainOptimum, ChainSolver, LatticeAxis};

/// Which critical value the signature of the block form selects.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignatureMode {
    /// Positive definite: global minimum.
    AllPlus,
    /// Negative definite: global maximum.
    AllMinus,
    /// Separable Hamiltonian and datum: min over the `plus` axis chain plus max over `minus`.
    BlockSeparable { plus: usize, minus: usize },
    /// Separable Hamiltonian, coupled datum: only maxmin/minmax bounds are available.
    Bounds { plus: usize, minus: usize },
}

impl SignatureMode {
    pub fn tag(&self) -> &'static str {
        match self {
            SignatureMode::AllPlus => "min",
            SignatureMode::AllMinus => "max",
            SignatureMode::BlockSeparable { .. } => "block-separable",
            SignatureMode::Bounds { .. } => "bounds",
        }
    }
}

/// The mode dictated by the signature of `g`.
pub fn mode_for(g: &BrokenGF) -> Result<SignatureMode> {
    let sig = g.signature();
    if sig.n_minus == 0 {
        return Ok(SignatureMode::AllPlus);
    }
    if sig.n_plus == 0 {
        return Ok(SignatureMode::AllMinus);
    }
    if g.h.split().is_none() {
        return Err(Error::Unsupported(
            "mixed signature with a non-separable Hamiltonian".into(),
        ));
    }
    let block = g.blocks()[0];
    let plus = if block.m[0][0] > 0.0 { 0 } else { 1 };
    let minus = 1 - plus;
    Ok(if g.datum.factors().is_some() {
        SignatureMode::BlockSeparable { plus, minus }
    } else {
        SignatureMode::Bounds { plus, minus }
    })
}

fn factor_chains(g: &BrokenGF, cfg: &SolverConfig) -> Result<(BrokenGF, BrokenGF)> {
    let (h1, h2) = g.h.split().expect("mode checked");
    let (d1, d2) = g.datum.factors().expect("mode checked");
    let c = cfg.clone().with_steps(g.n());
    let g1 = BrokenGF::between(Arc::new(h1), &d1, g.t_from(), g.t_to(), &c)?;
    let g2 = BrokenGF::between(Arc::new(h2), &d2, g.t_from(), g.t_to(), &c)?;
    Ok((g1, g2))
}

fn direction(g: &BrokenGF) -> f64 {
    if g.signature().n_minus == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Reusable evaluator for one chain.
pub enum Evaluator {
    Single(ChainSolver),
    Split {
        a: ChainSolver,
        b: ChainSolver,
        offset: f64,
    },
}

impl Evaluator {
    pub fn new(g: &BrokenGF, mode: SignatureMode, cfg: &SolverConfig) -> Result<Self> {
        let expected = mode_for(g)?;
        if expected != mode {
            return Err(Error::Contract(format!(
                "mode {} does not match the chain signature ({})",
                mode.tag(),
                expected.tag()
            )));
        }
        match mode {
            SignatureMode::AllPlus => Ok(Evaluator::Single(ChainSolver::new(g.clone(), 1.0, cfg)?)),
            SignatureMode::AllMinus => Ok(Evaluator::Single(ChainSolver::new(g.clone(), -1.0, cfg)?)),
            SignatureMode::BlockSeparable { .. } => {
                let (g1, g2) = factor_chains(g, cfg)?;
                let (s1, s2) = (direction(&g1), direction(&g2));
                Ok(Evaluator::Split {
                    a: ChainSolver::new(g1, s1, cfg)?,
                    b: ChainSolver::new(g2, s2, cfg)?,
                    offset: g.datum_offset,
                })
            }
            SignatureMode::Bounds { .. } => Err(Error::Unsupported(
                "coupled datum under a mixed signature: only Hopf bounds are available".into(),
            )),
        }
    }

    pub fn eval(&self, x: &Vec2) -> Result<f64> {
        match self {
            Evaluator::Single(s) => Ok(s.eval(x)?.value),
            Evaluator::Split { a, b, offset } => {
                Ok(a.eval(&[x[0], 0.0])?.value + b.eval(&[x[1], 0.0])?.value + offset)
            }
        }
    }

    /// Values at many points; separable chains are solved once per distinct coordinate.
    pub fn eval_points(&self, xs: &[Vec2]) -> Vec<Result<f64>> {
        match self {
            Evaluator::Single(s) => s.eval_many(xs).into_iter().map(|r| r.map(|o| o.value)).collect(),
            Evaluator::Split { a, b, offset } => {
                let axis_values = |solver: &ChainSolver, k: usize| -> BTreeMap<u64, Result<f64>> {
                    let mut coords: Vec<f64> = xs.iter().map(|x| x[k]).collect();
                    coords.sort_by(f64::total_cmp);
                    coords.dedup();
                    let vals: Vec<Result<f64>> = coords
                        .par_iter()
                        .map(|&c| solver.eval(&[c, 0.0]).map(|o| o.value))
                        .collect();
                    coords.iter().map(|c| c.to_bits()).zip(vals).collect()
                };
                let va = axis_values(a, 0);
                let vb = axis_values(b, 1);
                xs.iter()
                    .map(|x| {
                        let u = clone_result(&va[&x[0].to_bits()])?;
                        let w = clone_result(&vb[&x[1].to_bits()])?;
                        Ok(u + w + offset)
                    })
                    .collect()
            }
        }
    }
}

fn clone_result(r: &Result<f64>) -> Result<f64> {
    match r {
        Ok(v) => Ok(*v),
        Err(e) => Err(Error::Contract(e.to_string())),
    }
}

/// The critical value of `S(x; .)` selected by `mode`.
pub fn minmax_value(g: &BrokenGF, x: &[f64], mode: SignatureMode, cfg: &SolverConfig) -> Result<f64> {
    if x.len() != g.dim() {
        return Err(Error::Contract(format!(
            "point of dimension {} for a chain of dimension {}",
            x.len(),
            g.dim()
        )));
    }
    Evaluator::new(g, mode, cfg)?.eval(&pad(x))
}

/// Collects per-point failures into one sweep error.
pub fn gather(points: &[Vec2], dim: usize, results: Vec<Result<f64>>) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(results.len());
    let mut failures = 0;
    let mut first = None;
    for (x, r) in points.iter().zip(results) {
        match r {
            Ok(v) => out.push(v),
            Err(e) => {
                failures += 1;
                if first.is_none() {
                    first = Some((x[..dim].to_vec(), e));
                }
            }
        }
    }
    match first {
        None => Ok(out),
        Some((first_location, first)) => Err(Error::Sweep {
            count: failures,
            first_location,
            first: Box::new(first),
        }),
    }
}

/// Step count used for the chain `[t_from, t_to]` under `cfg`.
pub fn steps_for(h: &HamiltonianSpec, t_from: f64, t_to: f64, cfg: &SolverConfig) -> Result<usize> {
    match cfg.steps {
        StepCount::Fixed(n) => Ok(n),
        StepCount::Auto => crate::gfqi::choose_step_count(h, t_from, t_to, cfg),
    }
}

/// Values of the variational solution at time `t_to` for a datum given at `t_from`.
pub fn solve_slice(
    h: &Arc<HamiltonianSpec>,
    d: &DatumSpec,
    t_from: f64,
    t_to: f64,
    points: &[Vec2],
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, usize)> {
    let dim = h.dim();
    if t_from == t_to {
        let v = points.iter().map(|x| d.value(x)).collect::<Result<Vec<_>>>()?;
        return Ok((v, 0));
    }
    let g = BrokenGF::between(h.clone(), d, t_from, t_to, cfg).map_err(|e| e.at(t_to))?;
    let mode = mode_for(&g).map_err(|e| e.at(t_to))?;
    let ev = Evaluator::new(&g, mode, cfg).map_err(|e| e.at(t_to))?;
    let vals = gather(points, dim, ev.eval_points(points)).map_err(|e| e.at(t_to))?;
    Ok((vals, g.n()))
}

/// Minmax field of `u_t + H = 0`, `u(0) = d`, on `grid` at each of `times`.
pub fn solve_field(
    h: &HamiltonianSpec,
    d: &DatumSpec,
    grid: &SpaceGrid,
    times: &[f64],
    cfg: &SolverConfig,
) -> Result<SolutionField> {
    check_problem(h, d, grid, times)?;
    if !d.is_c1() {
        return Err(Error::Contract(format!(
            "{} is C0; use the C0 extension",
            d.describe()
        )));
    }
    let h = Arc::new(h.clone());
    let points = grid.points();
    let mut values = Vec::with_capacity(times.len());
    let mut steps = Vec::with_capacity(times.len());
    for &t in times {
        let (v, n) = solve_slice(&h, d, 0.0, t, &points, cfg)?;
        values.push(v);
        steps.push(n);
    }
    let mut field = SolutionField::new(grid.clone(), times.to_vec(), values, Method::Minmax)?;
    field.meta = solver_meta(cfg, steps);
    Ok(field)
}

pub fn solver_meta(cfg: &SolverConfig, steps: Vec<usize>) -> FieldMeta {
    let mut meta = FieldMeta {
        steps,
        ..Default::default()
    };
    meta.tolerances.insert("minmax".into(), cfg.tol_minmax);
    meta.tolerances.insert("solver".into(), cfg.tol_solver);
    meta
}

fn check_problem(h: &HamiltonianSpec, d: &DatumSpec, grid: &SpaceGrid, times: &[f64]) -> Result<()> {
    if grid.dim() != h.dim() {
        return Err(Error::Contract(format!(
            "grid of dimension {} for a Hamiltonian of dimension {}",
            grid.dim(),
            h.dim()
        )));
    }
    if times.is_empty() {
        return Err(Error::Contract("no instants requested".into()));
    }
    for &t in times {
        if !(0.0..=h.horizon).contains(&t) {
            return Err(Error::Contract(format!("instant {t} outside [0, {}]", h.horizon)));
        }
    }
    let _ = d;
    Ok(())
}

/// Lower and upper Hopf fields for a separable Hamiltonian with a coupled datum.
pub fn solve_bounds_field(
    h: &HamiltonianSpec,
    d: &DatumSpec,
    grid: &SpaceGrid,
    times: &[f64],
    cfg: &SolverConfig,
) -> Result<(SolutionField, SolutionField)> {
    check_problem(h, d, grid, times)?;
    let h = Arc::new(h.clone());
    let points = grid.points();
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    let mut steps = Vec::new();
    for &t in times {
        if t == 0.0 {
            let v = d.sample(grid)?;
            lower.push(v.clone());
            upper.push(v);
            steps.push(0);
            continue;
        }
        let g = BrokenGF::between(h.clone(), d, 0.0, t, cfg).map_err(|e| e.at(t))?;
        let pb = HopfProblem::new(&g).map_err(|e| e.at(t))?;
        let res: Vec<Result<HopfBounds>> = points.par_iter().map(|x| pb.bounds(x)).collect();
        let lo = gather(&points, 2, res.iter().map(|r| r.as_ref().map(|b| b.lower).map_err(|e| Error::Contract(e.to_string()))).collect())
            .map_err(|e| e.at(t))?;
        let hi = res.into_iter().map(|r| r.map(|b| b.upper)).collect::<Result<Vec<_>>>()?;
        lower.push(lo);
        upper.push(hi);
        steps.push(g.n());
    }
    let mut lf = SolutionField::new(grid.clone(), times.to_vec(), lower, Method::HopfLower)?;
    let mut uf = SolutionField::new(grid.clone(), times.to_vec(), upper, Method::HopfUpper)?;
    lf.meta = solver_meta(cfg, steps.clone());
    uf.meta = solver_meta(cfg, steps);
    Ok((lf, uf))
}
