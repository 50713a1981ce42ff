use proptest::prelude::*;

use dlpp_core::curve_extract::{extract_curve, step_objective};
use dlpp_core::hjb_solver::{discrete_residual, solve, solve_with, stability_barrier, SweepOrder};
use dlpp_core::lattice_sim::{last_passage, last_passage_wavefront, sample_lattice, LatticeSample};
use dlpp_core::tasep_bridge::{density_from_value, direct_sublevel_set, height_function};
use dlpp_core::weight_field::{BulkMean, PiecewisePiece, Region};
use dlpp_core::{DistributionFamily, Exec, WeightField};

fn brute_force(w: &[f64], n2: usize, m: usize, n: usize) -> f64 {
    let mut best = f64::NEG_INFINITY;
    let mut stack = vec![(0usize, 0usize, 0.0f64)];
    while let Some((i, j, acc)) = stack.pop() {
        let acc = acc + w[i * n2 + j];
        if (i, j) == (m, n) {
            best = best.max(acc);
            continue;
        }
        if i < m {
            stack.push((i + 1, j, acc));
        }
        if j < n {
            stack.push((i, j + 1, acc));
        }
    }
    best
}

fn lattice() -> impl Strategy<Value = (usize, usize, Vec<f64>)> {
    (1usize..6, 1usize..6).prop_flat_map(|(n1, n2)| {
        (Just(n1), Just(n2), prop::collection::vec(0u32..50, n1 * n2))
            .prop_map(|(a, b, w)| (a, b, w.into_iter().map(|v| v as f64 / 4.0).collect()))
    })
}

fn family() -> impl Strategy<Value = DistributionFamily> {
    prop_oneof![Just(DistributionFamily::Exponential), Just(DistributionFamily::Geometric)]
}

/// Disk of mean `inside` in a background of mean `outside`.
fn disk_field(family: DistributionFamily, c: [f64; 2], r: f64, inside: f64, outside: f64) -> WeightField {
    WeightField {
        bulk: BulkMean::Piecewise {
            pieces: vec![PiecewisePiece {
                region: Region::Disk { center: c, radius: r },
                mu: inside,
            }],
            default_mu: outside,
        },
        ..WeightField::constant(family, 0.0)
    }
    .with_family(family)
}

prop_compose! {
    fn random_field()(
        fam in family(),
        cx in 0.0..1.0f64,
        cy in 0.0..1.0f64,
        r in 0.05..0.6f64,
        inside in 0.0..3.0f64,
        outside in 0.0..3.0f64,
    ) -> WeightField {
        disk_field(fam, [cx, cy], r, inside, outside)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dp_matches_enumeration((n1, n2, w) in lattice()) {
        let pf = last_passage(&LatticeSample::from_weights(n1, n2, 1, w.clone()).unwrap());
        for m in 0..n1 {
            for n in 0..n2 {
                prop_assert_eq!(pf.get(m, n), brute_force(&w, n2, m, n));
            }
        }
    }

    #[test]
    fn wavefront_is_bit_identical((n1, n2, w) in lattice(), par in any::<bool>()) {
        let s = LatticeSample::from_weights(n1, n2, 1, w).unwrap();
        let exec = if par { Exec::Parallel } else { Exec::Sequential };
        prop_assert_eq!(last_passage(&s).values, last_passage_wavefront(&s, exec).values);
    }

    #[test]
    fn optimal_path_attains_passage_time((n1, n2, w) in lattice()) {
        let s = LatticeSample::from_weights(n1, n2, 1, w).unwrap();
        let pf = last_passage(&s);
        let path = pf.optimal_path((n1 - 1, n2 - 1)).unwrap();
        prop_assert!(path.is_up_right());
        prop_assert_eq!(path.weight(&s), pf.corner());
    }

    #[test]
    fn superadditive((n1, n2, w) in lattice(), a in 0usize..6, b in 0usize..6) {
        let (y1, y2) = (a % n1, b % n2);
        let whole = last_passage(&LatticeSample::from_weights(n1, n2, 1, w.clone()).unwrap());
        let (m1, m2) = (n1 - y1, n2 - y2);
        let sub: Vec<f64> = (y1..n1).flat_map(|i| (y2..n2).map(move |j| (i, j))).map(|(i, j)| w[i * n2 + j]).collect();
        let tail = last_passage(&LatticeSample::from_weights(m1, m2, 1, sub).unwrap());
        // the segment from y to the corner counts X(y) once
        let joined = whole.get(y1, y2) + tail.corner() - w[y1 * n2 + y2];
        prop_assert!(whole.corner() >= joined - 1e-9);
    }

    #[test]
    fn coupling_is_monotone(fam in family(), mu in 0.0..2.0f64, extra in 0.0..2.0f64, seed in any::<u64>()) {
        let lo = sample_lattice(&WeightField::constant(fam, mu), 8, 7, 8, seed).unwrap();
        let hi = sample_lattice(&WeightField::constant(fam, mu + extra), 8, 7, 8, seed).unwrap();
        for (a, b) in lo.weights.iter().zip(&hi.weights) {
            prop_assert!(a <= b);
        }
        let (la, lb) = (last_passage(&lo), last_passage(&hi));
        for (a, b) in la.values.iter().zip(&lb.values) {
            prop_assert!(a <= b);
        }
    }

    #[test]
    fn tasep_identity((n1, n2, w) in lattice(), frac in 0.0..1.2f64) {
        let pf = last_passage(&LatticeSample::from_weights(n1, n2, 1, w).unwrap());
        let t = pf.corner() * frac;
        let hp = height_function(&pf, t);
        prop_assert!(hp.has_unit_steps());
        prop_assert_eq!(hp.sublevel_set(n1, n2), direct_sublevel_set(&pf, t));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn scheme_is_monotone_in_the_mean(
        c in (0.0..1.0f64, 0.0..1.0f64),
        r in 0.05..0.6f64,
        inside in 0.0..2.0f64,
        outside in 0.0..2.0f64,
        d_in in 0.0..1.0f64,
        d_out in 0.0..1.0f64,
    ) {
        let fam = DistributionFamily::Exponential;
        let lo = solve(&disk_field(fam, [c.0, c.1], r, inside, outside), 0.02, [1.0, 1.0]).unwrap();
        let hi = solve(&disk_field(fam, [c.0, c.1], r, inside + d_in, outside + d_out), 0.02, [1.0, 1.0]).unwrap();
        for (a, b) in lo.values.iter().zip(&hi.values) {
            prop_assert!(a <= b);
        }
    }

    #[test]
    fn solution_below_barrier(field in random_field(), ex in 0.5..2.0f64, ey in 0.5..2.0f64) {
        let h = 0.02;
        let g = solve(&field, h, [ex, ey]).unwrap();
        let (mu_sup, sigma_sup) = field.sup_norms(h, [ex, ey]);
        for i in 0..g.n1 {
            for j in 0..g.n2 {
                prop_assert!(g.get(i, j) <= stability_barrier(mu_sup, sigma_sup, g.point(i, j)));
            }
        }
    }

    #[test]
    fn discrete_equation_holds_to_round_off(field in random_field()) {
        let g = solve(&field, 0.01, [1.0, 1.0]).unwrap();
        for i in 1..g.n1 {
            for j in 1..g.n2 {
                let (r, unit) = discrete_residual(&g, &field, i, j);
                prop_assert!(r.abs() <= 4.0 * unit, "({}, {}): {} vs {}", i, j, r, unit);
            }
        }
    }

    #[test]
    fn sweep_orders_agree(field in random_field(), par in any::<bool>()) {
        let exec = if par { Exec::Parallel } else { Exec::Sequential };
        let a = solve_with(&field, 0.05, [1.0, 1.5], SweepOrder::RowMajor).unwrap();
        let b = solve_with(&field, 0.05, [1.0, 1.5], SweepOrder::Wavefront(exec)).unwrap();
        prop_assert_eq!(a.values, b.values);
    }

    #[test]
    fn density_in_unit_interval(field in random_field()) {
        let g = solve(&field, 0.02, [1.0, 1.0]).unwrap();
        for r in density_from_value(&g).defined() {
            prop_assert!((0.0..=1.0).contains(&r));
        }
    }

    #[test]
    fn curves_are_monotone_and_short(
        field in random_field(),
        x in 0.0..1.0f64,
        y in 0.0..1.0f64,
        eps in 0.01..0.1f64,
    ) {
        let g = solve(&field, 0.02, [1.0, 1.0]).unwrap();
        let c = extract_curve(&g, &field, [x, y], eps, 0.05).unwrap();
        prop_assert!(c.check_monotone().is_ok());
        prop_assert_eq!(c.points[0], [0.0, 0.0]);
        prop_assert_eq!(c.endpoint(), Some([x, y]));
        let radius = x.max(y);
        prop_assert!((c.s_star.len() as f64) <= 4.0 * radius / eps + 2.0);
    }

    #[test]
    fn finer_direction_grid_never_worse(field in random_field(), x in 0.1..1.0f64, y in 0.1..1.0f64, k in 1usize..20) {
        let g = solve(&field, 0.02, [1.0, 1.0]).unwrap();
        let coarse = step_objective(&g, &field, [x, y], 0.05, 1.0 / k as f64).unwrap().1;
        let fine = step_objective(&g, &field, [x, y], 0.05, 1.0 / (2 * k) as f64).unwrap().1;
        prop_assert!(fine >= coarse);
    }
}
