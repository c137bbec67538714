use std::f64::consts::{E, FRAC_PI_2, FRAC_PI_4, PI};

use prandtl_core::modulation::{
    advance_s, decompose, exterior_norms, exterior_norms_fn, frame_residual, local_operator_check,
    modulation_residuals, phi_beta, shape_q, to_parabolic_frame, track, trapped_verdict, vector_a, weight_w,
    weight_w_ds, DecomposeOptions, ExteriorNorms, FrameOptions, FrameResidualOptions, ModulationState,
    ParabolicFrame, SRule, Slice, TrackOptions, TrappedParams,
};
use prandtl_core::profiles::{g1_deriv, g1_exact};
use prandtl_core::quadrature::integrate_adaptive;
use prandtl_core::solver::Snapshot;
use prandtl_core::spectral::{hermite, inner_product_rho, sample_hermite};
use prandtl_core::{Error, Field, Grid};

fn planted(lambda: f64, mu: f64, shift: f64, mode: usize, amp: f64) -> ParabolicFrame {
    let grid = Grid::uniform(-12.0, 12.0, 2401).unwrap();
    let l2 = lambda * lambda;
    let f = Field::from_fn(&grid, |y| {
        let x = y - shift;
        l2 * g1_exact(x / (l2 * mu)) + amp * hermite(mode, x).unwrap()
    })
    .unwrap();
    ParabolicFrame::from_field(&f)
}

/// `ξ = λ²G_1((y − y*)/(λμ))` sampled on `[0, 60]`.
fn self_similar(lambda: f64, mu: f64, a: f64) -> Field {
    let g = Grid::uniform(0.0, 60.0, 12001).unwrap();
    let y_star = lambda * mu * (PI + a);
    Field::from_fn(&g, |y| lambda * lambda * g1_exact((y - y_star) / (lambda * mu))).unwrap()
}

fn state(t: f64, s: f64, lambda: f64, mu: f64, y_star: f64) -> ModulationState {
    ModulationState { t, s, lambda, mu, a: 0.0, y_star, newton_residual: 0.0, eps_rho: 0.0 }
}

#[test]
fn decompose_recovers_the_exact_profile() {
    let d = decompose(&planted(1.0, 1.0, 0.0, 0, 0.0), (1.0, 1.0, 0.0), DecomposeOptions::default()).unwrap();
    assert!((d.lambda - 1.0).abs() < 1e-12 && (d.mu - 1.0).abs() < 1e-12 && d.shift.abs() < 1e-12);
    assert!(d.remainder.values().iter().all(|v| v.abs() < 1e-12));
}

#[test]
fn decompose_recovers_planted_parameters() {
    let frame = planted(1.0 + 1e-3, 1.2, 0.05, 3, 1e-4);
    let d = decompose(&frame, (1.0, 1.0, 0.0), DecomposeOptions::default()).unwrap();
    assert!((d.lambda - (1.0 + 1e-3)).abs() < 1e-8, "{}", d.lambda);
    assert!((d.mu - 1.2).abs() < 1e-8, "{}", d.mu);
    assert!((d.shift - 0.05).abs() < 1e-8, "{}", d.shift);
    assert!(d.orthogonality.iter().all(|o| o.abs() <= 1e-10), "{:?}", d.orthogonality);
    // the remainder is the planted h_3 on the shifted grid
    for (&y, &e) in d.remainder.grid().nodes().iter().zip(d.remainder.values()) {
        if y.abs() <= 5.0 {
            assert!((e - 1e-4 * hermite(3, y).unwrap()).abs() < 1e-8, "Y = {y}");
        }
    }
}

#[test]
fn odd_perturbation_moves_the_center() {
    let d = decompose(&planted(1.0, 1.0, 0.0, 1, 1e-4), (1.0, 1.0, 0.0), DecomposeOptions::default()).unwrap();
    assert!(d.shift.abs() > 1e-6 && d.shift.abs() < 1e-3, "{}", d.shift);
    let h1 = sample_hermite(1, d.remainder.grid()).unwrap();
    assert!(inner_product_rho(&d.remainder, &h1, f64::NEG_INFINITY).unwrap().abs() <= 1e-10);
}

#[test]
fn decompose_fails_without_a_profile() {
    let grid = Grid::uniform(-12.0, 12.0, 2401).unwrap();
    let zero = ParabolicFrame::from_field(&Field::from_fn(&grid, |_| 0.0).unwrap());
    assert!(decompose(&zero, (1.0, 1.0, 0.0), DecomposeOptions::default()).is_err());
}

#[test]
fn parabolic_frame_rescales() {
    let (lambda, mu) = (3.0, 1.1);
    let xi = self_similar(lambda, mu, 0.2);
    let y_star = lambda * mu * (PI + 0.2);
    let frame = to_parabolic_frame(&xi, lambda, y_star, FrameOptions::default()).unwrap();
    let f = frame.f().unwrap();
    assert_eq!(frame.grid().end(), 12.0);
    for (&y, &v) in f.grid().nodes().iter().zip(f.values()) {
        let exact = g1_exact(y / (lambda * lambda * mu));
        assert!((v - exact).abs() < 1e-8, "Y = {y}");
        if y == 0.0 {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }
    // the lower end is clipped at the wall
    assert!((frame.grid().start() + (lambda * y_star).min(12.0)).abs() < 1e-12);

    assert!(matches!(to_parabolic_frame(&xi, lambda, 70.0, FrameOptions::default()), Err(Error::Frame(_))));
    assert!(matches!(to_parabolic_frame(&xi, 0.1, 58.0, FrameOptions::default()), Err(Error::Frame(_))));
    assert!(to_parabolic_frame(&xi, -1.0, y_star, FrameOptions::default()).is_err());
}

#[test]
fn s_advance_is_exact_for_self_similar_lambda() {
    // λ² = 1/(T − t): ∫λ² dt = ln((T − t0)/(T − t1))
    let (t0, t1) = (0.2, 0.7);
    let l = |t: f64| 1.0 / (1.0 - t).sqrt();
    let exact = (0.8f64 / 0.3).ln();
    assert!((advance_s(t1 - t0, l(t0), l(t1), SRule::Harmonic) - exact).abs() < 1e-14);
    assert!((advance_s(t1 - t0, l(t0), l(t1), SRule::Trapezoid) - exact).abs() > 1e-2);
    assert_eq!(advance_s(0.5, 2.0, 2.0, SRule::Harmonic), 2.0);
    assert_eq!(advance_s(0.5, 2.0, 2.0, SRule::Trapezoid), 2.0);
}

#[test]
fn track_follows_a_self_similar_family() {
    let (big_t, mu, a) = (1.0, 1.0, 0.3);
    let times: Vec<f64> = (0..12).map(|i| 1.0 - 0.8f64.powi(i + 1)).collect();
    let snaps: Vec<Snapshot> = times
        .iter()
        .enumerate()
        .map(|(i, &t)| Snapshot { t, step: i, field: self_similar(1.0 / (big_t - t).sqrt(), mu, a) })
        .collect();
    let states = track(&snaps, &TrackOptions::default()).unwrap();
    for (st, &t) in states.iter().zip(&times) {
        let lambda = 1.0 / (big_t - t).sqrt();
        assert!((st.lambda / lambda - 1.0).abs() < 1e-6, "t = {t}");
        assert!((st.mu - mu).abs() < 1e-5);
        assert!((st.a - a).abs() < 1e-5);
        assert!((st.s + (big_t - t).ln()).abs() < 1e-5);
        assert!(st.eps_rho < 1e-6);
    }
    let mut back = snaps.clone();
    back.swap(2, 3);
    assert!(track(&back, &TrackOptions::default()).is_err());
}

#[test]
fn modulation_residual_values() {
    // constant parameters: only the forcing terms remain
    let flat: Vec<ModulationState> = (0..5).map(|i| state(0.0, i as f64, 2.0, 0.5, 1.0)).collect();
    let q = 1.0 / (16.0 * 0.25);
    for r in modulation_residuals(&flat) {
        assert!((r.r_lambda - (-0.5 + 0.25 * q)).abs() < 1e-14);
        assert!((r.r_mu + 0.5 * q).abs() < 1e-14);
    }
    assert!(modulation_residuals(&flat[..2]).is_empty());
    assert_eq!(modulation_residuals(&flat).len(), 3);

    // λ = exp(s/2 + e^{−2s}/8), μ = exp(−e^{−2s}/4) solves both laws
    let law: Vec<ModulationState> = (0..=300)
        .map(|i| {
            let s = 0.01 * i as f64;
            let e = (-2.0 * s).exp();
            state(0.0, s, (0.5 * s + e / 8.0).exp(), (-e / 4.0).exp(), 1.0)
        })
        .collect();
    for r in modulation_residuals(&law) {
        assert!(r.r_lambda.abs() < 1e-4 && r.r_mu.abs() < 1e-4, "{r:?}");
    }
}

#[test]
fn weight_values() {
    for s in [E, 10.0, 1e3] {
        for z in [PI, -PI, 4.0, -20.0] {
            assert_eq!(weight_w(s, z).unwrap(), 1.0 / s);
        }
        let d = 1e-9;
        assert!((weight_w(s, PI - d).unwrap() - 1.0 / s).abs() < 1e-12);
        for z in [0.01, 0.5, 1.0, 2.0, 3.0] {
            assert_eq!(weight_w(s, z).unwrap(), weight_w(s, -z).unwrap());
            assert!(weight_w_ds(s, z).unwrap() <= 0.0);
            // w |Z|⁷ s^q stays between fixed constants inside (0, π)
            let scaled = weight_w(s, z).unwrap() * z.powi(7) * s.powf(shape_q(z));
            assert!(scaled > 100.0 && scaled < 4000.0, "s = {s}, Z = {z}: {scaled}");
        }
    }
    // w |Z|⁷ → 16π³ at the origin
    let z = 1e-4;
    let oracle = (PI - z).powi(3) / (8.0 * (0.5 * (PI - z)).sin().powi(3) * (0.5 * (PI - z)).cos().powi(7));
    assert!((weight_w(E, z).unwrap() / (oracle * E.powf(-shape_q(z))) - 1.0).abs() < 1e-12);
    assert!((weight_w(E, z).unwrap() * z.powi(7) * E.powf(shape_q(z)) / (16.0 * PI.powi(3)) - 1.0).abs() < 1e-3);
    assert!(matches!(weight_w(E, 0.0), Err(Error::Singular(_))));
    assert!(weight_w(2.0, 1.0).is_err());
    assert!(weight_w(E, f64::NAN).is_err());
}

#[test]
fn shape_and_vector_field() {
    assert_eq!(shape_q(0.0), 0.0);
    assert_eq!(shape_q(PI), 1.0);
    assert_eq!(shape_q(-7.0), 1.0);
    let mut prev = 0.0;
    for i in 1..=100 {
        let q = shape_q(PI * i as f64 / 100.0);
        assert!(q >= prev);
        prev = q;
    }
    assert!((vector_a(FRAC_PI_4) - FRAC_PI_4.sin()).abs() < 1e-16);
    assert_eq!(vector_a(2.0), 1.0);
    assert_eq!(vector_a(-2.0), -1.0);
    assert_eq!(vector_a(FRAC_PI_2), 1.0);
    for i in -400..=400 {
        let z = 0.01 * i as f64;
        assert!((vector_a(z) * g1_deriv(z)).abs() <= 1.0);
    }
}

#[test]
fn local_operator_identities() {
    assert!(local_operator_check(0.5, -1.0).unwrap() <= 1e-12);
    for beta in [0.0, 0.25, 0.9, 1.0] {
        for z in [-3.0, -1.2, -0.3, 0.4, 2.5, 3.1] {
            assert!(local_operator_check(beta, z).unwrap() <= 1e-12, "β = {beta}, Z = {z}");
        }
    }
    // β = 0 inside: φ = sin²Z
    let (phi, dphi) = phi_beta(0.0, 1.3).unwrap();
    assert!((phi - 1.3f64.sin().powi(2)).abs() < 1e-15);
    assert!((dphi - 2.6f64.sin()).abs() < 1e-15);
    assert!(local_operator_check(1.0, 2.0 * PI).unwrap() <= 1e-15);
    assert!(local_operator_check(0.5, -6.0).unwrap() <= 1e-12);
    assert!(matches!(phi_beta(0.5, 0.0), Err(Error::Singular(_))));
    assert!(matches!(phi_beta(0.5, PI), Err(Error::Singular(_))));
}

fn norms_oracle(u: impl Fn(f64) -> f64, du: impl Fn(f64) -> f64, z_max: f64, s: f64, a: f64, m: f64) -> [f64; 4] {
    let cut = m * (-s).exp();
    let l2 = |z: f64| u(z).powi(2) * weight_w(s, z).unwrap();
    let gr = |z: f64| (vector_a(z) * du(z)).powi(2) * weight_w(s, z).unwrap();
    let int = |f: &dyn Fn(f64) -> f64, lo: f64, hi: f64| integrate_adaptive(f, lo, hi, 1e-13).unwrap();
    let left = |f: &dyn Fn(f64) -> f64| int(f, -FRAC_PI_2, -cut) + int(f, -PI, -FRAC_PI_2) + int(f, -PI - a, -PI);
    let right = |f: &dyn Fn(f64) -> f64| int(f, cut, FRAC_PI_2) + int(f, FRAC_PI_2, PI) + int(f, PI, z_max);
    [left(&l2), right(&l2), left(&gr), right(&gr)]
}

#[test]
fn exterior_norms_match_adaptive_quadrature() {
    let (s, a, m, z_max) = (4.0, 0.5, 20.0, 8.0);
    let u = |z: f64| z.powi(4) * (-z * z).exp();
    let du = |z: f64| (4.0 * z.powi(3) - 2.0 * z.powi(5)) * (-z * z).exp();
    let oracle = norms_oracle(u, du, z_max, s, a, m);
    let got = exterior_norms_fn(|z| Ok((u(z), du(z))), z_max, s, a, m).unwrap();
    for (g, o) in got.as_array().iter().zip(oracle) {
        assert!((g / o - 1.0).abs() < 1e-8, "{g} vs {o}");
    }
    let grid = Grid::uniform(-PI - a, z_max, 20001).unwrap();
    let sampled = exterior_norms(&Field::from_fn(&grid, u).unwrap(), s, a, m).unwrap();
    for (g, o) in sampled.as_array().iter().zip(oracle) {
        assert!((g / o - 1.0).abs() < 1e-5, "{g} vs {o}");
    }
    let zero = exterior_norms_fn(|_| Ok((0.0, 0.0)), z_max, s, a, m).unwrap();
    assert_eq!(zero.as_array(), [0.0; 4]);
    assert!(exterior_norms_fn(|_| Ok((0.0, 0.0)), z_max, 2.0, a, m).is_err());
    assert!(exterior_norms_fn(|_| Ok((0.0, 0.0)), z_max, s, a, 0.0).is_err());
}

#[test]
fn frame_residual_of_the_flat_solution() {
    // ξ = 1/(T − t) is an exact solution away from the wall
    let g = Grid::uniform(0.0, 40.0, 4001).unwrap();
    let ts = [0.5, 0.6, 0.7];
    let slices: Vec<Slice> =
        ts.iter().map(|&t| Slice::new(t, &Field::from_fn(&g, |_| 1.0 / (1.0 - t)).unwrap()).unwrap()).collect();
    let states: Vec<ModulationState> =
        ts.iter().map(|&t| state(t, -(1.0 - t).ln(), 1.0 / (1.0 - t).sqrt(), 1.0, 20.0)).collect();
    let sl = [&slices[0], &slices[1], &slices[2]];
    let st = [&states[0], &states[1], &states[2]];
    let clean = frame_residual(sl, st, FrameResidualOptions::default()).unwrap();
    assert!(clean.normalized < 1e-8, "{clean:?}");
    let bad = frame_residual(sl, st, FrameResidualOptions { lambda_s_scale: 2.0, ..Default::default() })
        .unwrap();
    assert!(bad.normalized >= 5.0 * clean.normalized && bad.normalized > 0.1, "{bad:?}");
    let rev = [&states[2], &states[1], &states[0]];
    assert!(frame_residual(sl, rev, FrameResidualOptions::default()).is_err());
}

#[test]
fn trapped_verdict_flags() {
    let good: Vec<ModulationState> =
        (0..4).map(|i| state(0.0, 3.0 + i as f64, (0.5 * (3.0 + i as f64)).exp(), 1.0, 1.0)).collect();
    let small = ExteriorNorms { left_l2: 1e-6, right_l2: 1e-6, left_grad: 1e-3, right_grad: 1e-3 };
    let norms = vec![Some(small), None, Some(small), Some(small)];
    let v = trapped_verdict(&good, &norms, TrappedParams::default()).unwrap();
    assert!(v.trapped);
    assert_eq!(v.violations, [0; 6]);
    assert_eq!(v.rows[1].l2_ok, None);

    let mut bad = good.clone();
    bad[2].mu = 1e3;
    bad[3].lambda = 1e-3;
    let big = ExteriorNorms { left_l2: 1e9, ..small };
    let v = trapped_verdict(&bad, &[None, None, Some(big), None], TrappedParams::default()).unwrap();
    assert!(!v.trapped);
    assert_eq!(v.violations, [1, 1, 0, 0, 1, 0]);
    assert!(trapped_verdict(&good, &norms[..2], TrappedParams::default()).is_err());
}
