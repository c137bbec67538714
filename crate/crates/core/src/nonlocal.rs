//! The exactly solvable nonlocal model `∂_t u = ∫₀ˣ u` and its transported
//! version `v_t − ∂_x⁻¹v + x ∂_x v = 0`.
//!
//! The Green kernel is the entire series `k(y) = Σ yⁿ/(n!)²` (that is
//! `I₀(2√y)`), and the solution reads
//! `u(t,x) = u₀(x) + t ∫₀ˣ u₀(y) k'(t(x−y)) dy`.

use serde::Serialize;

use crate::error::{param, Result};
use crate::grid::{cumulative_integral, CubicSpline, Field, Grid};
use crate::par::{map_indexed, Execution};
use crate::quadrature::gauss_legendre;

/// Truncated summation of the kernel series and its relatives.
#[derive(Debug, Clone, Copy)]
pub struct KernelEvaluator {
    pub tol: f64,
    pub max_terms: usize,
}

impl Default for KernelEvaluator {
    fn default() -> Self {
        KernelEvaluator { tol: 1e-16, max_terms: 100_000 }
    }
}

/// Partial sum with a bound on the neglected tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue {
    pub value: f64,
    pub tail_bound: f64,
    pub terms: usize,
}

impl KernelEvaluator {
    /// `Σ_{n≥0} y^{n+p} / (n! (n+q)!)`, summed outward from the largest term
    /// so nothing overflows before the final rescaling.
    pub fn series(&self, y: f64, p: u32, q: u32) -> SeriesValue {
        if y < 0.0 {
            return SeriesValue { value: 0.0, tail_bound: 0.0, terms: 0 };
        }
        if y == 0.0 {
            let v = if p == 0 { 1.0 / factorial(q) } else { 0.0 };
            return SeriesValue { value: v, tail_bound: 0.0, terms: 1 };
        }
        let q = q as f64;
        // term ratio t_{n+1}/t_n = y / ((n+1)(n+1+q)); the peak sits near
        // n ≈ √y
        let peak = ((-(q) + (q * q + 4.0 * y).sqrt()) / 2.0).floor().max(0.0) as usize;
        let ln_peak = (peak as f64 + p as f64) * y.ln() - ln_factorial(peak) - ln_factorial_f(peak as f64 + q);
        let mut sum = 1.0;
        let mut term = 1.0;
        let mut n = peak;
        let mut terms = 1;
        while n > 0 {
            term *= (n as f64) * (n as f64 + q) / y;
            n -= 1;
            sum += term;
            terms += 1;
            if term < 1e-18 * sum {
                break;
            }
        }
        let mut term = 1.0;
        let mut n = peak;
        let tail_bound;
        loop {
            let ratio = y / ((n as f64 + 1.0) * (n as f64 + 1.0 + q));
            term *= ratio;
            n += 1;
            sum += term;
            terms += 1;
            let next_ratio = y / ((n as f64 + 1.0) * (n as f64 + 1.0 + q));
            if next_ratio < 1.0 {
                let bound = term * next_ratio / (1.0 - next_ratio);
                if bound <= self.tol * sum || terms >= self.max_terms {
                    tail_bound = bound;
                    break;
                }
            }
            if terms >= self.max_terms {
                tail_bound = f64::INFINITY;
                break;
            }
        }
        let scale = ln_peak.exp();
        SeriesValue { value: sum * scale, tail_bound: tail_bound * scale, terms }
    }

    pub fn kernel(&self, y: f64) -> f64 {
        self.series(y, 0, 0).value
    }

    /// `k^{(−i)}`, the `i`-th primitive from 0.
    pub fn primitive(&self, i: u32, y: f64) -> f64 {
        self.series(y, i, i).value
    }

    /// `k'` by the term-wise differentiated series `Σ yᵐ/(m!(m+1)!)`.
    pub fn derivative(&self, y: f64) -> f64 {
        self.series(y, 0, 1).value
    }

    pub fn ode_residual(&self, y: f64) -> f64 {
        (y * self.derivative(y) - self.primitive(1, y)).abs()
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |a, j| a * j as f64)
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|j| (j as f64).ln()).sum()
}

fn ln_factorial_f(x: f64) -> f64 {
    ln_factorial(x.round() as usize)
}

pub fn kernel(y: f64) -> f64 {
    KernelEvaluator::default().kernel(y)
}

pub fn kernel_primitive(i: u32, y: f64) -> f64 {
    KernelEvaluator::default().primitive(i, y)
}

pub fn kernel_derivative(y: f64) -> f64 {
    KernelEvaluator::default().derivative(y)
}

pub fn kernel_ode_check(y: f64) -> f64 {
    KernelEvaluator::default().ode_residual(y)
}

const GREEN_ORDER: usize = 8;

// u(t, x) for one point, Gauss–Legendre on every data cell below x
fn green_at(spline: &CubicSpline, gl: &(Vec<f64>, Vec<f64>), kern: &KernelEvaluator, t: f64, x: f64) -> Result<f64> {
    let base = spline.eval(x)?;
    if t == 0.0 || x <= 0.0 {
        return Ok(base);
    }
    let nodes = spline.grid().nodes();
    let (gx, gw) = gl;
    let mut acc = 0.0;
    for i in 0..nodes.len() - 1 {
        let a = nodes[i];
        if a >= x {
            break;
        }
        let b = nodes[i + 1].min(x);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for k in 0..gx.len() {
            let y = mid + half * gx[k];
            acc += half * gw[k] * spline.eval(y)? * kern.derivative(t * (x - y));
        }
    }
    Ok(base + t * acc)
}

/// Solution at time `t` of `∂_t u = ∫₀ˣ u` with datum `u0`, sampled on
/// `x_grid` (which must lie inside the datum's range).
pub fn green_solution(u0: &Field, t: f64, x_grid: &Grid) -> Result<Field> {
    green_solution_with(u0, t, x_grid, Execution::default())
}

pub fn green_solution_with(u0: &Field, t: f64, x_grid: &Grid, exec: Execution) -> Result<Field> {
    if !(t >= 0.0) {
        return param(format!("time must be >= 0, got {t}"));
    }
    let spline = CubicSpline::new(u0)?;
    let gl = gauss_legendre(GREEN_ORDER);
    let kern = KernelEvaluator::default();
    let nodes = x_grid.nodes();
    let values = map_indexed(exec, nodes.len(), |j| green_at(&spline, &gl, &kern, t, nodes[j]))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Field::new(x_grid.clone(), values)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonlocalState {
    pub t: f64,
    pub u: Field,
}

/// Explicit midpoint step with the trapezoid primitive as right side.
pub fn direct_step_nonlocal(state: &NonlocalState, dt: f64) -> Result<NonlocalState> {
    let k1 = cumulative_integral(&state.u);
    let half: Vec<f64> = state.u.values().iter().zip(k1.values()).map(|(u, k)| u + 0.5 * dt * k).collect();
    let k2 = cumulative_integral(&state.u.with_values(half)?);
    let next = state.u.values().iter().zip(k2.values()).map(|(u, k)| u + dt * k).collect();
    Ok(NonlocalState { t: state.t + dt, u: state.u.with_values(next)? })
}

/// Integrate with fixed steps `dt` (the last one shortened) up to `t_end`.
pub fn direct_solve(u0: &Field, t_end: f64, dt: f64) -> Result<Field> {
    if !(dt > 0.0) {
        return param("time step must be positive");
    }
    let mut st = NonlocalState { t: 0.0, u: u0.clone() };
    let steps = (t_end / dt).ceil() as usize;
    for i in 0..steps {
        let h = if i + 1 == steps { t_end - st.t } else { dt };
        st = direct_step_nonlocal(&st, h)?;
    }
    Ok(st.u)
}

/// `v(t, x) = u(eᵗ, x e^{−t})` where `u` solves the nonlocal problem with
/// `u(1, ·) = v0`, sampled on the grid of `v0`.
pub fn transported_solution(v0: &Field, t: f64) -> Result<Field> {
    if !(t >= 0.0) {
        return param(format!("time must be >= 0, got {t}"));
    }
    let spline = CubicSpline::new(v0)?;
    let gl = gauss_legendre(GREEN_ORDER);
    let kern = KernelEvaluator::default();
    let elapsed = t.exp_m1();
    let shrink = (-t).exp();
    let values = v0
        .nodes()
        .iter()
        .map(|&x| green_at(&spline, &gl, &kern, elapsed, x * shrink))
        .collect::<Result<Vec<_>>>()?;
    v0.with_values(values)
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayRow {
    pub t: f64,
    pub sup_compact: f64,
}

/// `sup_{x ≤ L} |v(t, x)|` at the given times, and the slope of its log
/// against `t`.
pub fn compact_decay(v0: &Field, times: &[f64], compact: f64) -> Result<(Vec<DecayRow>, f64)> {
    let rows = times
        .iter()
        .map(|&t| {
            let v = transported_solution(v0, t)?;
            let sup = v
                .nodes()
                .iter()
                .zip(v.values())
                .filter(|(x, _)| **x <= compact)
                .fold(0.0_f64, |m, (_, u)| m.max(u.abs()));
            Ok(DecayRow { t, sup_compact: sup })
        })
        .collect::<Result<Vec<_>>>()?;
    let ts: Vec<f64> = rows.iter().map(|r| r.t).collect();
    let ls: Vec<f64> = rows.iter().map(|r| r.sup_compact.ln()).collect();
    let slope = crate::fit::linear_fit(&ts, &ls)?.slope;
    Ok((rows, slope))
}
