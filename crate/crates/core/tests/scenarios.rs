//! End-to-end scenarios on the named presets.

use std::time::Instant;

use dlpp_core::analysis::{compare, convergence_study, median, sup_error, Reference};
use dlpp_core::curve_extract::{extract_curve, MonotoneCurve};
use dlpp_core::hjb_solver::solve;
use dlpp_core::lattice_sim::map_trials;
use dlpp_core::tasep_bridge::slow_bond_estimate;
use dlpp_core::weight_field::{preset, DistributionFamily, WeightField};
use dlpp_core::Exec;

#[test]
fn fine_solves_are_fast() {
    for name in ["lambda1", "lambda2", "lambda3", "geo_q", "slow_bond(0.5)"] {
        let f = preset(name).unwrap();
        let t = Instant::now();
        let g = solve(&f, 1.0 / 1000.0, [1.0, 1.0]).unwrap();
        assert_eq!((g.n1, g.n2), (1001, 1001));
        assert!(t.elapsed().as_secs_f64() < 10.0, "{name}");
    }
}

#[test]
fn constant_field_error_decays_along_refinement() {
    let f = WeightField::constant(DistributionFamily::Exponential, 1.0);
    let rows = convergence_study(
        &f,
        &[1.0 / 125.0, 1.0 / 250.0, 1.0 / 500.0, 1.0 / 1000.0],
        [1.0, 1.0],
        Reference::ClosedForm { mu: 1.0, sigma: 1.0 },
    )
    .unwrap();
    assert!(rows.windows(2).all(|w| w[1].sup_error < w[0].sup_error));
    assert!((solve(&f, 1.0 / 500.0, [1.0, 1.0]).unwrap().get(500, 500) - 4.0).abs() <= 0.05);
}

#[test]
fn lambda1_self_convergence() {
    let rows = convergence_study(
        &preset("lambda1").unwrap(),
        &[1.0 / 125.0, 1.0 / 250.0, 1.0 / 500.0],
        [1.0, 1.0],
        Reference::Finest { h: 1.0 / 2000.0 },
    )
    .unwrap();
    assert!(rows.windows(2).all(|w| w[1].sup_error < w[0].sup_error), "{rows:?}");
}

#[test]
fn single_seed_sup_error_at_scale_1000() {
    let f = WeightField::constant(DistributionFamily::Exponential, 1.0);
    let solved = solve(&f, 1.0 / 1000.0, [1.0, 1.0]).unwrap();
    let err = map_trials(&f, 1001, 1001, 1000, 1, 3, Exec::default(), |_, _, pf| {
        sup_error(&pf.scaled_field(), &solved).unwrap()
    })
    .unwrap()[0];
    assert!(err <= 0.25, "{err}");
}

#[test]
fn comparison_improves_with_scale_for_every_preset() {
    for name in ["lambda1", "lambda2", "lambda3", "geo_q"] {
        let f = preset(name).unwrap();
        let run = |n: usize| {
            compare(&f, n, 1.0 / 400.0, [1.0, 1.0], 3, 99, Some(&[0.5, 1.0]), Exec::default())
                .unwrap()
                .report
        };
        let (small, large) = (run(100), run(400));
        assert!(large.median_sup_error < small.median_sup_error, "{name}");
        assert_eq!(large.levels.len(), 2);
        assert!(large.levels.iter().all(|l| l.sim_to_pde.is_finite() && l.pde_to_sim.is_finite()));
    }
}

#[test]
fn lambda1_curve_skirts_the_zero_square() {
    let f = preset("lambda1").unwrap();
    let g = solve(&f, 1.0 / 500.0, [1.0, 1.0]).unwrap();
    let eps = 0.01;
    let c = extract_curve(&g, &f, [0.75, 0.75], eps, 0.01).unwrap();
    for p in &c.points {
        let inside = p[0].min(p[1]) > 2.0 * eps && p[0].max(p[1]) < 0.5 - 2.0 * eps;
        assert!(!inside, "{p:?}");
    }
}

fn length_in_slow_disks(c: &MonotoneCurve) -> f64 {
    let slow = |x: [f64; 2]| {
        let d = |c: [f64; 2]| ((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2)).sqrt();
        d([1.0, 0.0]) <= 0.7 || d([0.0, 1.0]) <= 0.7
    };
    let mut total = 0.0;
    for w in c.points.windows(2) {
        let (p, q) = (w[0], w[1]);
        let len = (q[0] - p[0]) + (q[1] - p[1]);
        let cells = 200;
        for k in 0..cells {
            let t = (k as f64 + 0.5) / cells as f64;
            if slow([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]) {
                total += len / cells as f64;
            }
        }
    }
    total
}

#[test]
fn lambda3_curves_avoid_slow_disks() {
    let f = preset("lambda3").unwrap();
    let g = solve(&f, 1.0 / 500.0, [1.0, 1.0]).unwrap();
    for x0 in [[1.0, 0.5], [0.5, 1.0], [0.9, 0.6]] {
        let c = extract_curve(&g, &f, x0, 0.01, 0.01).unwrap();
        let straight = MonotoneCurve::from_points(vec![[0.0, 0.0], x0]);
        assert!(length_in_slow_disks(&c) < length_in_slow_disks(&straight), "{x0:?}");
    }
}

#[test]
fn slow_bond_kappa_non_increasing_in_rate() {
    let kappas: Vec<f64> = [0.25, 0.5, 0.75, 1.0]
        .iter()
        .map(|&r| slow_bond_estimate(r, 2000, 10, 17, Exec::default()).unwrap().kappa_hat)
        .collect();
    assert!(kappas.windows(2).all(|w| w[1] <= w[0]), "{kappas:?}");
    assert!(median(&kappas) > 3.8);
}
