use std::f64::consts::{PI, SQRT_2};

use prandtl_core::grid::build_grid;
use prandtl_core::profiles::{
    build_profile, equation_residual, fit_asymptotics, g1_deriv, g1_exact, g1_one_minus, glue, inviscid_residual,
    profile_mass, profile_residual, self_similar_residual, stated_constants, support_half_width, GlueSpec, Segment,
};
use prandtl_core::{Error, Field, Grid};

/// `∫₀^∞ ξ^{−(1−1/(2k))}/(1+ξ) dξ` after `ξ = eˣ`: the integrand decays
/// exponentially on both sides, so a plain trapezoid sum converges
/// geometrically.
fn support_oracle(k: u32) -> f64 {
    let m = 2.0 * k as f64;
    let (lo, hi, h) = (-45.0 * m, 90.0, 1e-3);
    let n = ((hi - lo) / h) as usize;
    let f = |x: f64| (x / m).exp() / (1.0 + x.exp());
    (0..=n).map(|i| f(lo + i as f64 * h) * if i == 0 || i == n { 0.5 } else { 1.0 }).sum::<f64>() * h
}

/// `(Z(u), G(u))` with `Z(u) = ∫₀^u 2k/(1+v^{2k}) dv` by composite Simpson.
fn curve_oracle(k: u32, u: f64) -> (f64, f64) {
    let m = 2.0 * k as f64;
    let n = 20_000;
    let h = u / n as f64;
    let f = |v: f64| m / (1.0 + v.powf(m));
    let s: f64 = (0..=n)
        .map(|i| {
            let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            w * f(i as f64 * h)
        })
        .sum();
    (s * h / 3.0, 1.0 / (1.0 + u.powf(m)))
}

#[test]
fn g1_values() {
    assert_eq!(g1_exact(0.0), 1.0);
    assert!(g1_exact(PI).abs() < 1e-30);
    assert_eq!(g1_exact(3.2), 0.0);
    assert_eq!(g1_exact(-1.3), g1_exact(1.3));
    assert_eq!(g1_one_minus(4.0), 1.0);
    for z in [1e-3_f64, 0.05, 0.1] {
        let series = 1.0 - z * z / 4.0 + z.powi(4) / 48.0;
        assert!((g1_exact(z) - series).abs() <= z.powi(6) / 1000.0 + 4e-16);
        assert!((g1_one_minus(z) + g1_exact(z) - 1.0).abs() < 4e-16);
        let fd = (g1_exact(z + 1e-6) - g1_exact(z - 1e-6)) / 2e-6;
        assert!((g1_deriv(z) - fd).abs() < 1e-9);
    }
}

#[test]
fn support_half_width_matches_quadrature() {
    assert_eq!(support_half_width(1).unwrap(), PI);
    assert!((support_half_width(2).unwrap() - PI * SQRT_2).abs() < 1e-14);
    assert!((support_half_width(3).unwrap() - 2.0 * PI).abs() < 1e-14);
    for k in 1..=6 {
        let a = support_half_width(k).unwrap();
        let o = support_oracle(k);
        assert!(((a - o) / o).abs() < 1e-10, "k = {k}: {a} vs {o}");
    }
    assert!(matches!(support_half_width(0), Err(Error::Parameter(_))));
}

#[test]
fn first_profile_is_cosine_squared() {
    let t = build_profile(1, 4097, 1e-12).unwrap();
    assert_eq!(t.a_k, PI);
    assert_eq!(t.center_coeff, 0.25);
    assert!((t.edge_coeff - 0.25).abs() < 1e-15);
    assert_eq!(t.edge_exponent, 2.0);
    for (&z, &g) in t.z_samples.iter().zip(&t.g_samples) {
        assert!((g - g1_exact(z)).abs() <= 1e-8);
    }
    for (&u, &z) in t.u_samples.iter().zip(&t.z_samples) {
        assert!((z - 2.0 * u.atan()).abs() <= 1e-8 * z.max(1.0));
    }
    for i in 0..=2000 {
        let z = -3.5 + 7.0 * i as f64 / 2000.0;
        assert!((t.eval(z) - g1_exact(z)).abs() <= 1e-8, "Z = {z}");
        assert!((t.eval_deriv(z) - g1_deriv(z)).abs() <= 1e-6, "Z = {z}");
    }
}

#[test]
fn higher_profiles_match_direct_quadrature() {
    for k in [2, 3] {
        let t = build_profile(k, 1025, 1e-10).unwrap();
        let curve = t.curve();
        for u in [0.1, 0.5, 0.9, 1.3, 3.0, 10.0] {
            let (z, g) = curve_oracle(k, u);
            let p = curve.at_z(z).unwrap();
            assert!((p.g - g).abs() < 1e-10 * g.max(1e-3), "k = {k}, u = {u}: {} vs {g}", p.g);
            assert!((p.u - u).abs() < 1e-8 * u);
            if u <= 1.3 {
                assert!((t.eval(z) - g).abs() < 1e-7, "k = {k}, u = {u}: {} vs {g}", t.eval(z));
            }
        }
        assert_eq!(t.edge_exponent, 2.0 * k as f64 / (2.0 * k as f64 - 1.0));
    }
}

#[test]
fn profile_table_shape() {
    for k in 1..=4 {
        let t = build_profile(k, 257, 1e-10).unwrap();
        assert_eq!(t.z_samples[0], 0.0);
        assert_eq!(t.g_samples[0], 1.0);
        assert!(t.z_samples.windows(2).all(|w| w[1] > w[0]));
        assert!(t.g_samples.windows(2).all(|w| w[1] <= w[0]));
        assert!(t.dg_samples[1..].iter().all(|&d| d < 0.0));
        assert!(t.a_k - t.z_samples.last().unwrap() <= 1e-10 + 1e-14);
        assert!(t.g_samples.iter().all(|&g| g > 0.0 && g <= 1.0));
        for z in [0.3, 1.7, 0.99 * t.a_k] {
            assert_eq!(t.eval(-z), t.eval(z));
        }
        assert_eq!(t.eval(t.a_k * 1.01), 0.0);
    }
    assert!(build_profile(1, 63, 1e-10).is_err());
    assert!(build_profile(1, 100, 0.0).is_err());
    assert!(build_profile(0, 100, 1e-10).is_err());
}

#[test]
fn masses() {
    let t1 = build_profile(1, 4097, 1e-12).unwrap();
    assert!((profile_mass(&t1) - PI / 2.0).abs() < 1e-6);
    let t2 = build_profile(2, 4097, 1e-12).unwrap();
    assert!((profile_mass(&t2) - 0.75 * PI * SQRT_2).abs() < 1e-5);
    for k in 1..=5 {
        let t = build_profile(k, 2049, 1e-12).unwrap();
        let ratio = profile_mass(&t) / t.a_k;
        assert!(ratio > 0.5 - 1e-12 && ratio < 1.0, "k = {k}: {ratio}");
        assert!((ratio - (1.0 - 0.5 / k as f64)).abs() < 1e-4);
    }
}

#[test]
fn residual_of_tables_and_trivial_solutions() {
    let t = build_profile(1, 4097, 1e-12).unwrap();
    assert!(profile_residual(&t).unwrap() <= 1e-6);
    let g = Grid::uniform(-3.0, 3.0, 101).unwrap();
    for c in [0.0, 1.0] {
        let f = Field::from_fn(&g, |_| c).unwrap();
        assert!(equation_residual(&f, 2, 3.0).unwrap() < 1e-13);
    }
}

#[test]
fn rescaled_profiles_solve_the_same_equation() {
    let g = Grid::uniform(-1.9 * PI, 1.9 * PI, 8001).unwrap();
    for mu in [0.5, 2.0] {
        let f = Field::from_fn(&g, |z| g1_exact(z / mu)).unwrap();
        let r = equation_residual(&f, 1, 0.95 * PI * mu.min(1.9)).unwrap();
        assert!(r < 1e-5, "mu = {mu}: {r}");
    }
    // a different exponent in the drift breaks it
    let f = Field::from_fn(&g, g1_exact).unwrap();
    assert!(equation_residual(&f, 2, 0.95 * PI).unwrap() > 1e-2);
}

#[test]
fn asymptotic_fits() {
    for k in 1..=3 {
        let t = build_profile(k, 1025, 1e-10).unwrap();
        let fit = fit_asymptotics(&t).unwrap();
        assert!(fit.center_exponent_err < 0.01, "{fit:?}");
        assert!(fit.center_coeff_err < 0.02, "{fit:?}");
        assert!(fit.edge_exponent_err < 0.01, "{fit:?}");
        assert!(fit.edge_coeff_err < 0.02, "{fit:?}");
    }
}

#[test]
fn competing_constants_disagree_with_first_profile() {
    let (a, c, e) = stated_constants(1).unwrap();
    assert!((a - PI / 2.0).abs() < 1e-15);
    assert_eq!(c, 1.0);
    assert_eq!(e, 1.0);
    let t = build_profile(1, 257, 1e-10).unwrap();
    assert!((a - t.a_k).abs() > 1.0);
    assert!((c - t.center_coeff).abs() > 0.5);
    assert!((e - t.edge_coeff).abs() > 0.5);
    assert!(stated_constants(0).is_err());
}

#[test]
fn glue_single_bump() {
    let g = Grid::uniform(0.0, 2.0 * PI, 1001).unwrap();
    let spec = GlueSpec { segments: vec![Segment::Bump { k: 1, mu: 1.0 }] };
    let f = glue(&spec, &g).unwrap();
    for (&y, &v) in f.nodes().iter().zip(f.values()) {
        assert!((v - g1_exact(y - PI)).abs() < 1e-8);
    }
}

#[test]
fn glue_plateau_then_bump() {
    let g = Grid::uniform(0.0, 8.0, 1601).unwrap();
    let spec = GlueSpec { segments: vec![Segment::Plateau { value: 1.0, length: 2.0 }, Segment::Bump { k: 1, mu: 1.0 }] };
    let f = glue(&spec, &g).unwrap();
    for (&y, &v) in f.nodes().iter().zip(f.values()) {
        if y <= 2.0 {
            assert_eq!(v, 1.0);
        } else {
            assert!((v - g1_exact(y - 2.0)).abs() < 1e-8);
        }
    }
    let jumps = f.values().windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
    assert!(jumps < 0.01);
}

#[test]
fn glue_wide_bump() {
    let g = Grid::uniform(0.0, 20.0, 2001).unwrap();
    let spec = GlueSpec { segments: vec![Segment::Plateau { value: 0.0, length: 1.0 }, Segment::Bump { k: 1, mu: 2.0 }] };
    let f = glue(&spec, &g).unwrap();
    let support: Vec<f64> = f.nodes().iter().zip(f.values()).filter(|(_, &v)| v > 0.0).map(|(&y, _)| y).collect();
    let width = support.last().unwrap() - support[0];
    assert!((width - 4.0 * PI).abs() < 0.03, "width {width}");
    let peak = f.nodes()[f.argmax()];
    assert!((peak - (1.0 + 2.0 * PI)).abs() < 0.011);
}

#[test]
fn glue_rejects_mismatched_junctions() {
    let g = Grid::uniform(0.0, 10.0, 101).unwrap();
    let bad = GlueSpec {
        segments: vec![Segment::Plateau { value: 1.0, length: 1.0 }, Segment::Plateau { value: 0.0, length: 1.0 }],
    };
    assert!(matches!(glue(&bad, &g), Err(Error::Spec(_))));
    let bad = GlueSpec { segments: vec![Segment::Plateau { value: 0.5, length: 1.0 }] };
    assert!(matches!(glue(&bad, &g), Err(Error::Spec(_))));
    assert!(glue(&GlueSpec { segments: vec![] }, &g).is_err());
    let bad = GlueSpec { segments: vec![Segment::Bump { k: 1, mu: 0.0 }] };
    assert!(glue(&bad, &g).is_err());
}

#[test]
fn backward_self_similar_solution() {
    let t = build_profile(1, 4097, 1e-12).unwrap();
    let g = build_grid(40.0, 8001, 1.0, 0.0).unwrap();
    let r = self_similar_residual(&t, 1.0, 1.0, 0.5, 0.0, &g, 1e-6).unwrap();
    assert!(r <= 1e-4, "{r}");
    assert!(self_similar_residual(&t, 1.0, 1.0, 1.0, 0.0, &g, 1e-6).is_err());

    // translating time and space together leaves the residual unchanged
    let shifted = Grid::new(g.nodes().iter().map(|y| y + 3.0).collect()).unwrap();
    let r2 = self_similar_residual(&t, 1.0, 1.7, 1.2, 3.0, &shifted, 1e-6).unwrap();
    assert!((r - r2).abs() <= 1e-6, "{r} vs {r2}");

    let zero = inviscid_residual(|_, _| 0.0, 0.3, 1e-6, &g, |_| true).unwrap();
    assert_eq!(zero, 0.0);
}
