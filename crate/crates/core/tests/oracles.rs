//! End-to-end values checked against oracles that do not share code with the solvers:
//! closed forms, hand-eliminated critical points and brute-force convolutions.

use std::f64::consts::{PI, TAU};

use hj_minmax::domain::{Convexity, DatumSpec, HamiltonianSpec, Potential, QuadForm, ScalarFn, SpaceGrid};
use hj_minmax::minmax::solve_field;
use hj_minmax::semigroup::{datum_distance, hamiltonian_continuity_audit, hysteresis_residual, mollify, nonexpansive_audit};
use hj_minmax::settings::SolverConfig;
use hj_minmax::viscosity::{lf_solve, splitting_report, LFConfig, SplittingConfig};

fn cfg() -> SolverConfig {
    SolverConfig::default()
}

/// `min_y f(y) + (x - y)^2 / (2 t)` on a uniform periodic sample of `f` (sign -1 gives the sup).
fn brute_convolution(xs: &[f64], f: &[f64], t: f64, sign: f64) -> Vec<f64> {
    xs.iter()
        .map(|&x| {
            let mut best = f64::INFINITY;
            for (y, fy) in xs.iter().zip(f) {
                let mut d = (x - y).rem_euclid(TAU);
                if d > PI {
                    d -= TAU;
                }
                best = best.min(sign * fy + d * d / (2.0 * t));
            }
            sign * best
        })
        .collect()
}

#[test]
fn free_particle_values_from_hand_critical_points() {
    // min_y cos y + y^2 at x = 0 is attained at y = 0; at (1, pi) the critical point is y = pi
    let h = HamiltonianSpec::free_particle(1.0);
    let grid = SpaceGrid::torus1(16).unwrap();
    let f = solve_field(&h, &DatumSpec::cos(), &grid, &[0.5, 1.0], &cfg()).unwrap();
    assert!((f.values[0][0] - 1.0).abs() <= 1e-6, "{}", f.values[0][0]);
    assert!((f.values[1][8] + 1.0).abs() <= 1e-6, "{}", f.values[1][8]);
}

#[test]
fn separable_saddle_is_min_part_plus_max_part() {
    let h = HamiltonianSpec::separable(
        HamiltonianSpec::free_particle(1.0),
        HamiltonianSpec::quadratic(QuadForm::scalar(-1.0), Potential::Zero, 1.0),
        1.0,
    );
    let d = DatumSpec::separable(DatumSpec::cos(), DatumSpec::cos());
    let grid = SpaceGrid::torus2(8).unwrap();
    let f = solve_field(&h, &d, &grid, &[0.5], &cfg()).unwrap();
    assert!((f.values[0][0] - 2.0).abs() <= 1e-6, "{}", f.values[0][0]);
}

#[test]
fn minmax_matches_brute_force_inf_convolution_on_the_grid() {
    let h = HamiltonianSpec::free_particle(2.0);
    let grid = SpaceGrid::torus1(64).unwrap();
    let t = 1.5;
    let f = solve_field(&h, &DatumSpec::cos(), &grid, &[t], &cfg()).unwrap();
    let fine: Vec<f64> = (0..64 * 256).map(|i| i as f64 * TAU / (64.0 * 256.0)).collect();
    let cos: Vec<f64> = fine.iter().map(|y| y.cos()).collect();
    let oracle = brute_convolution(&fine, &cos, t, 1.0);
    for (i, u) in f.values[0].iter().enumerate() {
        // fine sample spacing 4e-4 bounds the brute-force error by about 1e-7
        assert!((u - oracle[i * 256]).abs() < 1e-5, "i={i}: {u} vs {}", oracle[i * 256]);
    }
}

#[test]
fn scheme_agrees_with_minmax_for_convex_h() {
    let h = HamiltonianSpec::free_particle(1.0);
    let d = DatumSpec::cos();
    let grid = SpaceGrid::torus1(256).unwrap();
    let lf = lf_solve(&h, &d, &LFConfig::for_problem(&h, &d, &grid, 0.5).unwrap(), &[0.5]).unwrap();
    assert!((lf.values[0][0] - 1.0).abs() <= 0.05, "{}", lf.values[0][0]);
}

#[test]
fn scheme_transports_exactly_up_to_its_error() {
    let h = HamiltonianSpec::custom_1d(
        ScalarFn::Poly {
            coeffs: vec![0.0, 1.0],
            x_slope: 0.0,
        },
        Convexity::None,
        1.0,
    );
    let d = DatumSpec::cos();
    let grid = SpaceGrid::torus1(256).unwrap();
    let t = 0.75;
    let lf = lf_solve(&h, &d, &LFConfig::for_problem(&h, &d, &grid, t).unwrap(), &[t]).unwrap();
    let err = grid
        .points()
        .iter()
        .zip(&lf.values[0])
        .map(|(x, u)| (u - (x[0] - t).cos()).abs())
        .fold(0.0, f64::max);
    assert!(err <= 0.05, "{err}");
}

#[test]
fn cos_and_sin_stay_within_their_distance() {
    let h = HamiltonianSpec::free_particle(1.0);
    let grid = SpaceGrid::torus1(128).unwrap();
    let r = nonexpansive_audit(&h, &DatumSpec::cos(), &DatumSpec::sin(), 0.5, &grid, &cfg()).unwrap();
    assert!((r.bound - 2f64.sqrt()).abs() < 1e-3, "{}", r.bound);
    assert!(r.residual <= 2f64.sqrt() + 5e-3);
    assert!(r.pass);
}

#[test]
fn perturbed_hamiltonian_moves_the_solution_by_at_most_t_osc() {
    let h1 = HamiltonianSpec::free_particle(1.0);
    let h2 = HamiltonianSpec::quadratic(QuadForm::scalar(1.0), Potential::cos_bump(0.1, 2.0), 1.0);
    let grid = SpaceGrid::torus1(64).unwrap();
    let r = hamiltonian_continuity_audit(&h1, &h2, &DatumSpec::cos(), 0.5, &grid, &cfg()).unwrap();
    assert!(r.pass, "residual {} bound {}", r.residual, r.bound);
    assert!(r.residual > 0.0);
}

#[test]
fn hysteresis_matches_nested_convolution_oracle() {
    let h = HamiltonianSpec::free_particle(1.0);
    let grid = SpaceGrid::torus1(128).unwrap();
    let t = 0.5;
    let fine: Vec<f64> = (0..128 * 32).map(|i| i as f64 * TAU / (128.0 * 32.0)).collect();
    let oracle = |d: &DatumSpec| -> f64 {
        let f: Vec<f64> = fine.iter().map(|&x| d.value(&[x, 0.0]).unwrap()).collect();
        let there = brute_convolution(&fine, &f, t, 1.0);
        let back = brute_convolution(&fine, &there, t, -1.0);
        back.iter().zip(&f).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    };
    // cos has semiconcavity constant 1 > t: the datum is recovered
    let cos = hysteresis_residual(&h, &DatumSpec::cos(), 0.0, t, &grid, &cfg()).unwrap();
    assert!(oracle(&DatumSpec::cos()) < 1e-5);
    assert!(cos.residual <= 5e-3, "{}", cos.residual);
    // the hat's concave kink is cut off by the forward step and not restored
    let hat = DatumSpec::hat(3.0, 1.0, 1.0);
    let expected = oracle(&hat);
    let smooth = mollify(&hat, 0.02).unwrap();
    let r = hysteresis_residual(&h, &smooth, 0.0, t, &grid, &cfg()).unwrap();
    assert!(expected > 0.1, "{expected}");
    assert!((r.residual - expected).abs() <= 0.03, "{} vs {expected}", r.residual);
}

#[test]
fn mollified_abs_sine_is_within_lipschitz_times_width() {
    let grid = SpaceGrid::torus1(256).unwrap();
    let d = DatumSpec::shifted_abs_sine(0.7);
    for eps in [0.2, 0.1, 0.05] {
        let dev = datum_distance(&mollify(&d, eps).unwrap(), &d, &grid).unwrap();
        assert!(dev <= eps, "eps {eps}: {dev}");
    }
}

#[test]
fn cubic_scheme_field_is_a_subsolution_at_the_origin() {
    let r = splitting_report(3.0, &SplittingConfig::default()).unwrap();
    assert!(r.lf_check.pass, "{:?}", r.lf_check.worst_violation);
    assert!(!r.minmax_subsolution_pass);
    assert_eq!(r.minmax_value, -0.25);
}
