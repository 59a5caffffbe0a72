use proptest::prelude::*;

use hj_minmax::domain::{Builtin, DatumSpec, HamiltonianSpec, Potential, QuadForm, SpaceGrid};
use hj_minmax::gfqi::build_broken_gf;
use hj_minmax::minmax::{hopf_bounds, solve_field};
use hj_minmax::semigroup::{markov_residual, nonexpansive_audit, propagate, Propagator};
use hj_minmax::settings::{SolverConfig, StepCount};
use hj_minmax::viscosity::{lf_solve, LFConfig};

fn cfg() -> SolverConfig {
    SolverConfig::default()
}

fn wave(amp: f64, phase: f64, k: f64, sine: bool) -> DatumSpec {
    let b = if sine {
        Builtin::Sin {
            amp,
            wave: [k, 0.0],
            phase,
        }
    } else {
        Builtin::Cos {
            amp,
            wave: [k, 0.0],
            phase,
        }
    };
    DatumSpec::Builtin(b)
}

/// `C1` entries of the builtin catalog with random parameters.
fn c1_datum() -> impl Strategy<Value = DatumSpec> {
    prop_oneof![
        (0.1f64..1.5, 0.0f64..6.3, 1u8..3, any::<bool>()).prop_map(|(a, ph, k, s)| wave(a, ph, k as f64, s)),
        (-2.0f64..2.0).prop_map(DatumSpec::constant),
        (0.0f64..6.3, 0.5f64..1.2).prop_map(|(c, a)| wave(a, c, 1.0, false).shifted(0.3 * a)),
    ]
}

fn perturbed(amp: f64) -> HamiltonianSpec {
    HamiltonianSpec::quadratic(QuadForm::scalar(1.0), Potential::cos_bump(amp, 2.0), 1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn adding_a_constant_to_the_datum_adds_it_to_the_solution(
        d in c1_datum(), c in -5.0f64..5.0, t in 0.05f64..1.0
    ) {
        let h = HamiltonianSpec::free_particle(1.0);
        let grid = SpaceGrid::torus1(16).unwrap();
        // nested shifts collapse into one constant, so compare against the peeled base
        let (base, s0) = d.peel_shift();
        let u = solve_field(&h, base, &grid, &[t], &cfg()).unwrap();
        let v = solve_field(&h, &d.clone().shifted(c), &grid, &[t], &cfg()).unwrap();
        for (a, b) in u.values[0].iter().zip(&v.values[0]) {
            prop_assert_eq!(*b, a + (s0 + c));
        }
    }

    #[test]
    fn identity_propagator_returns_grid_data(
        vals in proptest::collection::vec(-3.0f64..3.0, 16), t in 0.0f64..1.0
    ) {
        let h = HamiltonianSpec::free_particle(1.0);
        let grid = SpaceGrid::torus1(16).unwrap();
        let out = propagate(&Propagator::new(&h, t, t, &cfg()), &grid, &vals).unwrap();
        let err = out.iter().zip(&vals).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-10);
    }

    #[test]
    fn solution_operator_is_nonexpansive(
        d1 in c1_datum(), d2 in c1_datum(), amp in 0.0f64..0.15, t in 0.1f64..1.0
    ) {
        let grid = SpaceGrid::torus1(32).unwrap();
        let r = nonexpansive_audit(&perturbed(amp), &d1, &d2, t, &grid, &cfg()).unwrap();
        prop_assert!(r.pass, "residual {} bound {}", r.residual, r.bound);
    }

    #[test]
    fn ordered_compositions_agree(
        a in 0.0f64..1.0, b in 0.0f64..1.0, c in 0.0f64..1.0, d in c1_datum()
    ) {
        let mut ts = [a, b, c];
        ts.sort_by(f64::total_cmp);
        let grid = SpaceGrid::torus1(64).unwrap();
        let h = HamiltonianSpec::free_particle(1.0);
        let r = markov_residual(&h, &d, (ts[0], ts[1], ts[2]), &grid, &cfg()).unwrap();
        prop_assert!(r.pass, "{:?}: {}", ts, r.residual);
    }

    #[test]
    fn maxmin_never_exceeds_minmax(
        a in 0.2f64..1.0, ph in 0.0f64..6.3, t in 0.1f64..1.0,
        x1 in 0.0f64..6.3, x2 in 0.0f64..6.3
    ) {
        let h = HamiltonianSpec::separable(
            HamiltonianSpec::free_particle(1.0),
            HamiltonianSpec::quadratic(QuadForm::scalar(-1.0), Potential::Zero, 1.0),
            1.0,
        );
        let d = DatumSpec::Builtin(Builtin::Cos { amp: a, wave: [1.0, 1.0], phase: ph });
        let g = build_broken_gf(&h, &d, t, StepCount::Fixed(2), &cfg()).unwrap();
        let b = hopf_bounds(&g, &[x1, x2]).unwrap();
        prop_assert!(b.lower <= b.upper + 1e-12, "{} > {}", b.lower, b.upper);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    #[test]
    fn scheme_preserves_order(
        d in c1_datum(), lift in 0.0f64..1.0, bump in 0.0f64..0.5, ph in 0.0f64..6.3, t in 0.1f64..1.0
    ) {
        // sigma2 = sigma1 + lift + bump (1 + cos(x + ph)) >= sigma1
        let h = perturbed(0.1);
        let grid = SpaceGrid::torus1(64).unwrap();
        let top = sum(&d, lift, bump, ph);
        let c1 = LFConfig::for_problem(&h, &d, &grid, t).unwrap();
        let c2 = LFConfig::for_problem(&h, &top, &grid, t).unwrap();
        let mut lf = c1.clone();
        lf.theta = c1.theta.iter().zip(&c2.theta).map(|(a, b)| a.max(*b)).collect();
        lf.dt = c1.dt.min(c2.dt);
        let lo = lf_solve(&h, &d, &lf, &[t]).unwrap();
        let hi = lf_solve(&h, &top, &lf, &[t]).unwrap();
        for (a, b) in lo.values[0].iter().zip(&hi.values[0]) {
            prop_assert!(a <= b, "{a} > {b}");
        }
    }
}

fn sum(d: &DatumSpec, lift: f64, bump: f64, ph: f64) -> DatumSpec {
    let (f, g) = (d.clone(), d.clone());
    DatumSpec::custom(
        "ordered",
        move |x| f.value(x).unwrap() + lift + bump * (1.0 + (x[0] + ph).cos()),
        Some(move |x: &[f64; 2]| {
            let p = g.gradient(x).unwrap();
            [p[0] - bump * (x[0] + ph).sin(), p[1]]
        }),
    )
}
