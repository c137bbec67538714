use prandtl_core::nonlocal::{
    compact_decay, direct_solve, direct_step_nonlocal, green_solution, green_solution_with, kernel,
    kernel_derivative, kernel_ode_check, kernel_primitive, transported_solution, KernelEvaluator, NonlocalState,
};
use prandtl_core::quadrature::integrate_adaptive;
use prandtl_core::{Execution, Field, Grid};

/// Plain forward partial sum of `Σ y^{n+p}/(n!(n+q)!)`.
fn partial_sum(y: f64, p: u32, q: u32) -> f64 {
    let mut term = y.powi(p as i32) / (1..=q).fold(1.0, |a, j| a * j as f64);
    let mut sum = term;
    for n in 1..400 {
        term *= y / (n as f64 * (n + q) as f64);
        sum += term;
    }
    sum
}

fn max_rel(a: &Field, b: &Field) -> f64 {
    let diff = a.values().iter().zip(b.values()).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
    diff / b.max_abs()
}

#[test]
fn kernel_values() {
    assert_eq!(kernel(0.0), 1.0);
    assert_eq!(kernel(-1.0), 0.0);
    assert!((kernel(1.0) - 2.279_585_302_336_067).abs() < 1e-15);
    for y in [0.01, 0.5, 3.0, 17.0, 40.0] {
        for (p, q) in [(0, 0), (0, 1), (1, 1), (2, 2), (3, 3)] {
            let exact = partial_sum(y, p, q);
            let got = KernelEvaluator::default().series(y, p, q).value;
            assert!((got / exact - 1.0).abs() < 1e-13, "y = {y}, ({p}, {q})");
        }
    }
    // I₀(x) ~ eˣ/√(2πx) (1 + 1/(8x) + 9/(128x²) + 75/(1024x³))
    let y = 1e4_f64;
    let x = 2.0 * y.sqrt();
    let asym = x.exp() / (2.0 * std::f64::consts::PI * x).sqrt()
        * (1.0 + 1.0 / (8.0 * x) + 9.0 / (128.0 * x * x) + 75.0 / (1024.0 * x.powi(3)));
    assert!((kernel(y) / asym - 1.0).abs() < 1e-9);
    let sv = KernelEvaluator::default().series(y, 0, 0);
    assert!(sv.tail_bound <= 1e-15 * sv.value);
}

#[test]
fn primitives_and_derivative() {
    for y in [0.3, 2.0, 9.0] {
        let p1 = integrate_adaptive(kernel, 0.0, y, 1e-13).unwrap();
        assert!((kernel_primitive(1, y) / p1 - 1.0).abs() < 1e-11);
        let p2 = integrate_adaptive(|x| kernel_primitive(1, x), 0.0, y, 1e-13).unwrap();
        assert!((kernel_primitive(2, y) / p2 - 1.0).abs() < 1e-11);
        let h = 1e-5;
        let fd = (kernel(y + h) - kernel(y - h)) / (2.0 * h);
        assert!((kernel_derivative(y) / fd - 1.0).abs() < 1e-8);
        assert!(kernel_ode_check(y) <= 1e-12 * kernel(y));
    }
    assert_eq!(kernel_primitive(0, 2.0), kernel(2.0));
}

#[test]
fn green_solution_of_polynomials() {
    // u0 = 1 gives k(tx), u0 = x gives k^{(−1)}(tx)/t
    let g = Grid::uniform(0.0, 3.0, 301).unwrap();
    let t = 1.5;
    let one = green_solution(&Field::from_fn(&g, |_| 1.0).unwrap(), t, &g).unwrap();
    let lin = green_solution(&Field::from_fn(&g, |x| x).unwrap(), t, &g).unwrap();
    for ((&x, &a), &b) in g.nodes().iter().zip(one.values()).zip(lin.values()) {
        assert!((a / partial_sum(t * x, 0, 0) - 1.0).abs() < 1e-12, "x = {x}");
        assert!((b - partial_sum(t * x, 1, 1) / t).abs() < 1e-12 * a);
    }
    let u0 = Field::from_fn(&g, |x| x.sin()).unwrap();
    assert_eq!(green_solution(&u0, 0.0, &g).unwrap().values(), u0.values());
    assert!(green_solution(&u0, -1.0, &g).is_err());
}

#[test]
fn green_scaling_and_growth() {
    // u(t/c, c x) solves the problem with datum u0(c ·) at time t
    let c = 2.0;
    let wide = Grid::uniform(0.0, 4.0, 801).unwrap();
    let narrow = Grid::uniform(0.0, 2.0, 801).unwrap();
    let f = |x: f64| (-(x - 1.0).powi(2)).exp() * (3.0 * x).cos();
    let big = green_solution(&Field::from_fn(&wide, f).unwrap(), 1.0 / c, &wide).unwrap();
    let small = green_solution(&Field::from_fn(&narrow, |x| f(c * x)).unwrap(), 1.0, &narrow).unwrap();
    assert!(max_rel(&small, &big) < 1e-6);

    // |u(t, x)| ≤ sup|u0| k(tx)
    let u0 = Field::from_fn(&wide, f).unwrap();
    let sup = u0.max_abs();
    for (&x, &u) in wide.nodes().iter().zip(big.values()) {
        assert!(u.abs() <= sup * kernel(x / c) + 1e-12);
    }
}

#[test]
fn green_matches_direct_integration() {
    let g = Grid::uniform(0.0, 5.0, 2001).unwrap();
    for f in [|x: f64| x.sin(), |x: f64| (-x).exp() * x * x, |x: f64| 1.0 / (1.0 + x * x)] {
        let u0 = Field::from_fn(&g, f).unwrap();
        let green = green_solution(&u0, 1.0, &g).unwrap();
        let direct = direct_solve(&u0, 1.0, 1e-3).unwrap();
        assert!(max_rel(&direct, &green) < 1e-4);
        let par = green_solution_with(&u0, 1.0, &g, Execution::Parallel).unwrap();
        let seq = green_solution_with(&u0, 1.0, &g, Execution::Sequential).unwrap();
        assert_eq!(par.values(), seq.values());
    }
    let u0 = Field::from_fn(&g, |_| 1.0).unwrap();
    let st = direct_step_nonlocal(&NonlocalState { t: 0.0, u: u0.clone() }, 0.1).unwrap();
    assert_eq!(st.t, 0.1);
    assert!(direct_solve(&u0, 1.0, 0.0).is_err());
}

#[test]
fn transported_flat_datum() {
    // v0 = 1 gives v(t, x) = k((1 − e^{−t}) x)
    let g = Grid::uniform(0.0, 4.0, 401).unwrap();
    let v = transported_solution(&Field::from_fn(&g, |_| 1.0).unwrap(), 0.7).unwrap();
    for (&x, &u) in g.nodes().iter().zip(v.values()) {
        assert!((u / partial_sum((1.0 - (-0.7f64).exp()) * x, 0, 0) - 1.0).abs() < 1e-12);
    }
    assert!(transported_solution(&v, -0.1).is_err());
}

#[test]
fn compact_decay_rate() {
    let g = Grid::uniform(0.0, 4.0, 801).unwrap();
    let v0 = Field::from_fn(&g, |x| x * x * (-x).exp()).unwrap();
    let times: Vec<f64> = (0..=12).map(|j| 2.0 + 0.25 * j as f64).collect();
    let (rows, slope) = compact_decay(&v0, &times, 1.0).unwrap();
    assert_eq!(rows.len(), times.len());
    assert!(rows.windows(2).all(|w| w[1].sup_compact < w[0].sup_compact));
    assert!((slope + 2.0).abs() <= 0.2, "{slope}");
}
