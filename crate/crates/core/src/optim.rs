//! Local optimizers used to polish lattice candidates.

use crate::error::Result;

#[derive(Clone, Copy, Debug)]
pub struct BfgsOptions {
    pub max_iter: usize,
    /// Stop when the sup-norm of the gradient drops below this.
    pub grad_tol: f64,
    /// Stop when an accepted step changes `f` by less than this (relative to `1 + |f|`).
    pub f_tol: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        BfgsOptions {
            max_iter: 200,
            grad_tol: 1e-11,
            f_tol: 1e-16,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BfgsResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad_norm: f64,
    pub iterations: usize,
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, b| a.max(b.abs()))
}

fn dotv(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Quasi-Newton minimization with an Armijo backtracking line search.
///
/// Trial points where `f` fails are treated as infeasible and the step is shortened.
pub fn bfgs<F>(mut f: F, x0: &[f64], opts: &BfgsOptions) -> Result<BfgsResult>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let (mut fx, mut g) = f(&x)?;
    if n == 0 {
        return Ok(BfgsResult {
            x,
            f: fx,
            grad_norm: 0.0,
            iterations: 0,
        });
    }
    // inverse Hessian approximation, row-major
    let mut hinv = vec![0.0; n * n];
    let reset = |hinv: &mut Vec<f64>, scale: f64| {
        hinv.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..n {
            hinv[i * n + i] = scale;
        }
    };
    reset(&mut hinv, 1.0);
    let mut first = true;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        if sup(&g) <= opts.grad_tol {
            break;
        }
        iterations += 1;
        let mut d: Vec<f64> = (0..n)
            .map(|i| -(0..n).map(|j| hinv[i * n + j] * g[j]).sum::<f64>())
            .collect();
        let mut slope = dotv(&d, &g);
        if slope >= 0.0 {
            reset(&mut hinv, 1.0);
            d = g.iter().map(|v| -v).collect();
            slope = dotv(&d, &g);
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + step * b).collect();
            if let Ok((ft, gt)) = f(&trial) {
                if ft.is_finite() && ft <= fx + 1e-4 * step * slope {
                    accepted = Some((trial, ft, gt));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((xn, fn_, gn)) = accepted else {
            break;
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dotv(&s, &y);
        let df = (fx - fn_).abs();
        x = xn;
        g = gn;
        let f_prev = fx;
        fx = fn_;
        if sy > 1e-300 {
            if first {
                // scale the initial inverse Hessian by the observed curvature
                reset(&mut hinv, sy / dotv(&y, &y));
                first = false;
            }
            let hy: Vec<f64> = (0..n)
                .map(|i| (0..n).map(|j| hinv[i * n + j] * y[j]).sum())
                .collect();
            let yhy = dotv(&y, &hy);
            let rho = 1.0 / sy;
            for i in 0..n {
                for j in 0..n {
                    hinv[i * n + j] += (1.0 + yhy * rho) * rho * s[i] * s[j]
                        - rho * (hy[i] * s[j] + s[i] * hy[j]);
                }
            }
        }
        if df <= opts.f_tol * (1.0 + f_prev.abs()) && sup(&s) <= 1e-14 * (1.0 + sup(&x)) {
            break;
        }
    }
    Ok(BfgsResult {
        grad_norm: sup(&g),
        x,
        f: fx,
        iterations,
    })
}

/// Golden-section minimization of a unimodal function on `[a, b]`.
pub fn golden_min<F>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut best = if fc <= fd { (c, fc) } else { (d, fd) };
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
        if fc < best.1 {
            best = (c, fc);
        }
        if fd < best.1 {
            best = (d, fd);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bfgs_solves_rosenbrock() {
        let r = bfgs(
            |x| {
                let (a, b) = (x[0], x[1]);
                Ok((
                    (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2),
                    vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)],
                ))
            },
            &[-1.2, 1.0],
            &BfgsOptions::default(),
        )
        .unwrap();
        assert!((r.x[0] - 1.0).abs() < 1e-8 && (r.x[1] - 1.0).abs() < 1e-8, "{r:?}");
    }

    #[test]
    fn golden_finds_parabola_vertex() {
        let (x, fx) = golden_min(|x| (x - 0.3).powi(2) + 2.0, -1.0, 2.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-8);
        assert!((fx - 2.0).abs() < 1e-15);
    }
}
