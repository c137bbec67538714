use std::f64::consts::{E, PI};
use std::sync::OnceLock;

use proptest::prelude::*;

use prandtl_core::grid::{cumulative_integral, derivative, interpolate};
use prandtl_core::modulation::{
    advance_s, decompose, shape_q, three_point_derivative, vector_a, weight_w, weight_w_ds, DecomposeOptions,
    ParabolicFrame, SRule,
};
use prandtl_core::nonlocal::{kernel, KernelEvaluator};
use prandtl_core::profiles::{build_profile, g1_exact, ProfileTable};
use prandtl_core::spectral::hermite;
use prandtl_core::{Field, Grid};

fn table(k: u32) -> &'static ProfileTable {
    static T: OnceLock<Vec<ProfileTable>> = OnceLock::new();
    &T.get_or_init(|| (1..=3).map(|k| build_profile(k, 1025, 1e-10).unwrap()).collect())[k as usize - 1]
}

fn trig(c: &[f64], x: f64) -> f64 {
    c.iter().enumerate().map(|(j, a)| a * ((j + 1) as f64 * x).sin()).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn uniform_grids_are_increasing(start in -50.0..50.0f64, len in 0.1..100.0f64, n in 8usize..500) {
        let g = Grid::uniform(start, start + len, n).unwrap();
        prop_assert!(g.nodes().windows(2).all(|w| w[1] > w[0]));
        prop_assert_eq!(g.start(), start);
        prop_assert!((g.end() - (start + len)).abs() <= 1e-12 * (1.0 + start.abs() + len));
    }

    #[test]
    fn derivative_inverts_the_primitive(c in prop::collection::vec(-1.0..1.0f64, 1..4)) {
        let g = Grid::uniform(0.0, 3.0, 1201).unwrap();
        let f = Field::from_fn(&g, |x| trig(&c, x)).unwrap();
        let back = derivative(&cumulative_integral(&f), 1).unwrap();
        let err = back.values().iter().zip(f.values()).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        prop_assert!(err < 1e-3, "{}", err);
    }

    #[test]
    fn grid_operations_leave_inputs_alone(c in prop::collection::vec(-1.0..1.0f64, 1..4)) {
        let g = Grid::uniform(-1.0, 2.0, 301).unwrap();
        let f = Field::from_fn(&g, |x| trig(&c, x)).unwrap();
        let copy = f.clone();
        let _ = derivative(&f, 2).unwrap();
        let _ = cumulative_integral(&f);
        let _ = interpolate(&f, &Grid::uniform(-1.0, 2.0, 77).unwrap()).unwrap();
        prop_assert_eq!(f, copy);
    }

    #[test]
    fn interpolation_of_monotone_data_is_monotone(steps in prop::collection::vec(0.0..1.0f64, 8..30)) {
        let n = steps.len();
        let g = Grid::uniform(0.0, 1.0, n).unwrap();
        let mut acc = 0.0;
        let v: Vec<f64> = steps.iter().map(|d| { acc += d; acc }).collect();
        let f = Field::new(g, v.clone()).unwrap();
        let fine = interpolate(&f, &Grid::uniform(0.0, 1.0, 10 * n).unwrap()).unwrap();
        prop_assert!(fine.values().windows(2).all(|w| w[1] >= w[0] - 1e-14));
        prop_assert!(fine.values().iter().all(|&x| x >= v[0] - 1e-14 && x <= v[n - 1] + 1e-14));
    }

    #[test]
    fn profiles_are_even_and_monotone(k in 1u32..=3, z in 0.0..6.0f64, dz in 1e-3..1.0f64) {
        let t = table(k);
        prop_assert_eq!(t.eval(z), t.eval(-z));
        prop_assert!(t.eval(z + dz) <= t.eval(z));
        prop_assert!((0.0..=1.0).contains(&t.eval(z)));
    }

    #[test]
    fn decomposition_recovers_planted_parameters(
        dl in -1e-3..1e-3f64,
        mu in 0.8..1.25f64,
        shift in -0.1..0.1f64,
        mode in 3usize..7,
        amp in -1e-3..1e-3f64,
    ) {
        let lambda = 1.0 + dl;
        let grid = Grid::uniform(-12.0, 12.0, 2401).unwrap();
        let l2 = lambda * lambda;
        let f = Field::from_fn(&grid, |y| {
            let x = y - shift;
            l2 * g1_exact(x / (l2 * mu)) + amp * hermite(mode, x).unwrap()
        })
        .unwrap();
        let d = decompose(&ParabolicFrame::from_field(&f), (1.0, 1.0, 0.0), DecomposeOptions::default()).unwrap();
        prop_assert!(d.orthogonality.iter().all(|o| o.abs() <= 1e-10), "{:?}", d.orthogonality);
        prop_assert!((d.lambda - lambda).abs() < 1e-8, "{}", d.lambda - lambda);
        prop_assert!((d.mu - mu).abs() < 1e-8, "{}", d.mu - mu);
        prop_assert!((d.shift - shift).abs() < 1e-8, "{}", d.shift - shift);
    }

    #[test]
    fn weight_is_continuous_and_decreasing_in_s(s in E..1e4f64, z in -10.0..10.0f64) {
        prop_assume!(z != 0.0);
        prop_assert!(weight_w_ds(s, z).unwrap() <= 0.0);
        prop_assert!(weight_w(s, z).unwrap() > 0.0);
        let d = 1e-9;
        let jump = (weight_w(s, PI - d).unwrap() - weight_w(s, PI + d).unwrap()).abs();
        prop_assert!(jump <= 1e-12);
        prop_assert_eq!(weight_w(s, z).unwrap(), weight_w(s, -z).unwrap());
        prop_assert!((0.0..=1.0).contains(&shape_q(z)));
    }

    #[test]
    fn vector_field_is_comparable_to_z(z in -PI..PI) {
        let a = vector_a(z).abs();
        prop_assert!(a <= z.abs() + 1e-15 && a >= z.abs() / PI - 1e-15);
        prop_assert_eq!(vector_a(-z), -vector_a(z));
    }

    #[test]
    fn kernel_is_positive_increasing_and_within_its_tail_bound(y in 0.0..500.0f64, dy in 1e-3..1.0f64) {
        prop_assert!(kernel(y) >= 1.0);
        prop_assert!(kernel(y + dy) > kernel(y));
        let ev = KernelEvaluator::default();
        let sv = ev.series(y, 0, 0);
        prop_assert!(sv.tail_bound <= ev.tol * sv.value);
        let loose = KernelEvaluator { tol: 1e-6, ..ev }.series(y, 0, 0);
        prop_assert!((loose.value - sv.value).abs() <= loose.tail_bound + 1e-14 * sv.value);
    }

    #[test]
    fn harmonic_s_rule_is_exact_for_linear_inverse_square(t0 in 0.0..0.9f64, dt in 1e-4..0.09f64, big_t in 1.0..3.0f64) {
        let l = |t: f64| 1.0 / (big_t - t).sqrt();
        let exact = ((big_t - t0) / (big_t - t0 - dt)).ln();
        let got = advance_s(dt, l(t0), l(t0 + dt), SRule::Harmonic);
        prop_assert!((got - exact).abs() <= 1e-10 * exact.max(1.0));
    }

    #[test]
    fn three_point_derivative_is_exact_on_parabolas(
        a in -3.0..3.0f64, b in -3.0..3.0f64, c in -3.0..3.0f64,
        x0 in -1.0..1.0f64, h1 in 0.01..1.0f64, h2 in 0.01..1.0f64,
    ) {
        let p = |x: f64| a + b * x + c * x * x;
        let x = [x0, x0 + h1, x0 + h1 + h2];
        let d = three_point_derivative(x, [p(x[0]), p(x[1]), p(x[2])]);
        prop_assert!((d - (b + 2.0 * c * x[1])).abs() < 1e-9);
    }
}
