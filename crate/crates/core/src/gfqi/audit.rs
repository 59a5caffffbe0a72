//! Numerical audits of a built generating function.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::broken::BrokenGF;
use crate::domain::hamiltonian::{dot, Vec2};
use crate::error::Result;

/// Central-difference step for the gradient audit.
pub const REL_FD_STEP: f64 = 1e-4;

#[derive(Clone, Debug, Serialize)]
pub struct RelReport {
    pub samples: usize,
    /// Largest gap between the assembled gradient and central differences of `S`.
    pub max_error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Checks `P_j = -dS_j/dX_j` and `P_{j+1} = dS_j/dX_{j+1}` by central differences at
/// `samples` random endpoint pairs per step, drawn inside the reachable window.
pub fn rel_check(g: &BrokenGF, samples: usize, seed: u64) -> Result<RelReport> {
    let analytic = g.steps.iter().all(|s| s.is_analytic());
    let tolerance = if analytic { 1e-10 } else { 1e-4 };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = g.dim();
    let mut max_error = 0.0f64;
    for (j, step) in g.steps.iter().enumerate() {
        let r = g.window.step_reach[j];
        for _ in 0..samples {
            let mut x0 = [0.0; 2];
            let mut x1 = [0.0; 2];
            for k in 0..dim {
                x0[k] = rng.gen_range(0.0..std::f64::consts::TAU);
                x1[k] = x0[k] + rng.gen_range(-r..=r);
            }
            let e = step.eval(&x0, &x1)?;
            for k in 0..dim {
                let (mut a, mut b) = (x0, x0);
                a[k] += REL_FD_STEP;
                b[k] -= REL_FD_STEP;
                let d0 = (step.value(&a, &x1)? - step.value(&b, &x1)?) / (2.0 * REL_FD_STEP);
                let (mut a, mut b) = (x1, x1);
                a[k] += REL_FD_STEP;
                b[k] -= REL_FD_STEP;
                let d1 = (step.value(&x0, &a)? - step.value(&x0, &b)?) / (2.0 * REL_FD_STEP);
                max_error = max_error
                    .max((d0 + e.p_start[k]).abs() / (1.0 + d0.abs()))
                    .max((d1 - e.p_end[k]).abs() / (1.0 + d1.abs()));
            }
        }
    }
    Ok(RelReport {
        samples: samples * g.steps.len(),
        max_error,
        tolerance,
        pass: max_error <= tolerance,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct QuadraticityReport {
    pub samples: usize,
    /// Largest `|S_j - <A^-1 dX, dX>/(2 eps) + shift eps|` found outside the radius
    /// (relative to `1 + |model|` for analytic chains).
    pub max_deviation: f64,
    pub tolerance: f64,
    /// Step index, start node and `A^-1 dX` of the worst sample.
    pub worst: Option<(usize, Vec2, Vec2)>,
    pub pass: bool,
}

/// Samples each step where `|A^-1 dX| > radius_factor * |eps| R_V` and compares it with its
/// quadratic model. Outside that set every step, hence `S - sigma`, is exactly quadratic.
pub fn quadraticity_audit(g: &BrokenGF, radius_factor: f64, samples: usize, seed: u64) -> Result<QuadraticityReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = g.dim();
    let analytic = g.steps.iter().all(|s| s.is_analytic());
    let tolerance = if analytic { 1e-10 } else { 1e-6 };
    let mut max_deviation = 0.0f64;
    let mut worst = None;
    for (j, step) in g.steps.iter().enumerate() {
        let a = step.hamiltonian().quadratic_part().expect("chain has a quadratic form");
        let eps = step.eps();
        let r0 = (radius_factor * g.window.quad_radius[j]).max(1e-3 * eps.abs());
        for _ in 0..samples {
            let mut x0 = [0.0; 2];
            let mut dir = [0.0; 2];
            for k in 0..dim {
                x0[k] = rng.gen_range(0.0..std::f64::consts::TAU);
                dir[k] = rng.gen_range(-1.0..1.0);
            }
            let len = dot(&dir, &dir, dim).sqrt().max(1e-9);
            // eta = A^-1 dX and p = eta / eps on the straight characteristic
            let mag = r0 * rng.gen_range(1.05..3.0);
            let eta = [dir[0] / len * mag, dir[1] / len * mag];
            let dx = a.apply(&eta);
            let x1 = [x0[0] + dx[0], x0[1] + dx[1]];
            let s = step.value(&x0, &x1)?;
            let model = dot(&eta, &dx, dim) / (2.0 * eps) - step.hamiltonian().shift * eps;
            let dev = (s - model).abs() / if analytic { 1.0 + model.abs() } else { 1.0 };
            if dev > max_deviation {
                max_deviation = dev;
                worst = Some((j, x0, eta));
            }
        }
    }
    Ok(QuadraticityReport {
        samples: samples * g.steps.len(),
        max_deviation,
        tolerance,
        worst,
        pass: max_deviation <= tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::hamiltonian::{Potential, QuadForm};
    use crate::domain::{DatumSpec, HamiltonianSpec};
    use crate::gfqi::build_broken_gf;
    use crate::settings::{SolverConfig, StepCount};

    #[test]
    fn rel_holds_for_free_and_perturbed_chains() {
        let cfg = SolverConfig::default();
        let free = build_broken_gf(&HamiltonianSpec::free_particle(1.0), &DatumSpec::cos(), 0.5, StepCount::Fixed(3), &cfg).unwrap();
        assert!(rel_check(&free, 20, 1).unwrap().pass);
        let h = HamiltonianSpec::quadratic(QuadForm::scalar(1.0), Potential::cos_bump(0.1, 2.0), 1.0);
        let g = build_broken_gf(&h, &DatumSpec::cos(), 0.5, StepCount::Fixed(4), &cfg).unwrap();
        let r = rel_check(&g, 5, 2).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn perturbed_steps_are_quadratic_far_out() {
        let cfg = SolverConfig::default();
        let h = HamiltonianSpec::quadratic(QuadForm::scalar(1.0), Potential::cos_bump(0.1, 2.0), 1.0);
        let g = build_broken_gf(&h, &DatumSpec::cos(), 0.5, StepCount::Fixed(4), &cfg).unwrap();
        let r = quadraticity_audit(&g, 1.0, 10, 3).unwrap();
        assert!(r.pass, "{r:?}");
        // inside the support the perturbation is visible
        let inside = quadraticity_audit(&g, 0.05, 10, 3).unwrap();
        assert!(inside.max_deviation > 1e-6);
    }
}
