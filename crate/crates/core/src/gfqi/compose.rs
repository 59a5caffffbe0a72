//! Composition of generating functions: `G(Q, x; w) = S(Q, w) + F(w, x)`.

use std::sync::Arc;

use super::step::StepGF;
use crate::domain::hamiltonian::{pad, Vec2};
use crate::error::{Error, Result};

/// A function `S(Q, x; params)` generating a relation between `Q` and `x`.
pub trait GeneratingFunction: Send + Sync {
    fn source_dim(&self) -> usize;
    fn target_dim(&self) -> usize;
    fn param_count(&self) -> usize;
    fn value(&self, q: &[f64], x: &[f64], params: &[f64]) -> Result<f64>;
}

impl GeneratingFunction for StepGF {
    fn source_dim(&self) -> usize {
        self.dim()
    }

    fn target_dim(&self) -> usize {
        self.dim()
    }

    fn param_count(&self) -> usize {
        0
    }

    fn value(&self, q: &[f64], x: &[f64], _params: &[f64]) -> Result<f64> {
        let (a, b): (Vec2, Vec2) = (pad(q), pad(x));
        StepGF::value(self, &a, &b)
    }
}

pub type GfClosure = Arc<dyn Fn(&[f64], &[f64], &[f64]) -> Result<f64> + Send + Sync>;

/// Closure-backed generating function.
#[derive(Clone)]
pub struct FnGf {
    pub source: usize,
    pub target: usize,
    pub params: usize,
    pub f: GfClosure,
}

impl GeneratingFunction for FnGf {
    fn source_dim(&self) -> usize {
        self.source
    }

    fn target_dim(&self) -> usize {
        self.target
    }

    fn param_count(&self) -> usize {
        self.params
    }

    fn value(&self, q: &[f64], x: &[f64], params: &[f64]) -> Result<f64> {
        (self.f)(q, x, params)
    }
}

/// `S(Q, w; a) + F(w, x; b)` with parameters laid out as `[w, a, b]`.
pub struct Composed<S, F> {
    pub s: S,
    pub f: F,
}

pub fn compose_gf<S, F>(s: S, f: F) -> Result<Composed<S, F>>
where
    S: GeneratingFunction,
    F: GeneratingFunction,
{
    if s.target_dim() != f.source_dim() {
        return Err(Error::Contract(format!(
            "dimension mismatch: inner variable has dimension {} on the left and {} on the right",
            s.target_dim(),
            f.source_dim()
        )));
    }
    Ok(Composed { s, f })
}

impl<S: GeneratingFunction, F: GeneratingFunction> GeneratingFunction for Composed<S, F> {
    fn source_dim(&self) -> usize {
        self.s.source_dim()
    }

    fn target_dim(&self) -> usize {
        self.f.target_dim()
    }

    fn param_count(&self) -> usize {
        self.s.target_dim() + self.s.param_count() + self.f.param_count()
    }

    fn value(&self, q: &[f64], x: &[f64], params: &[f64]) -> Result<f64> {
        if params.len() != self.param_count() {
            return Err(Error::Contract(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                params.len()
            )));
        }
        let k = self.s.target_dim();
        let (w, rest) = params.split_at(k);
        let (a, b) = rest.split_at(self.s.param_count());
        Ok(self.s.value(q, w, a)? + self.f.value(w, x, b)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::HamiltonianSpec;
    use crate::gfqi::step::step_gf;
    use crate::optim::golden_min;
    use crate::settings::SolverConfig;

    #[test]
    fn two_free_steps_compose_to_one() {
        let cfg = SolverConfig::default();
        let fp = HamiltonianSpec::free_particle(1.0);
        let eps = 0.2;
        let g = compose_gf(
            step_gf(&fp, 0.0, eps, &cfg).unwrap(),
            step_gf(&fp, eps, 2.0 * eps, &cfg).unwrap(),
        )
        .unwrap();
        assert_eq!(g.param_count(), 1);
        let (q, x) = (0.3, 1.4);
        let (w, v) = golden_min(|w| g.value(&[q], &[x], &[w]).unwrap(), -5.0, 5.0, 1e-12);
        assert!((w - 0.5 * (q + x)).abs() < 1e-8);
        assert!((v - (x - q).powi(2) / (4.0 * eps)).abs() < 1e-12);
    }

    #[test]
    fn mismatched_inner_dimension_is_rejected() {
        let cfg = SolverConfig::default();
        let fp = HamiltonianSpec::free_particle(1.0);
        let zero = FnGf {
            source: 2,
            target: 1,
            params: 0,
            f: Arc::new(|_, _, _| Ok(0.0)),
        };
        assert!(matches!(
            compose_gf(step_gf(&fp, 0.0, 0.1, &cfg).unwrap(), zero),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn step_then_its_reverse_cancels() {
        let cfg = SolverConfig::default();
        let fp = HamiltonianSpec::free_particle(1.0);
        let g = compose_gf(
            step_gf(&fp, 0.0, 0.3, &cfg).unwrap(),
            step_gf(&fp, 0.3, 0.0, &cfg).unwrap(),
        )
        .unwrap();
        for &w in &[-1.0, 0.2, 2.5] {
            assert!(g.value(&[0.7], &[0.7], &[w]).unwrap().abs() < 1e-14);
        }
    }
}
