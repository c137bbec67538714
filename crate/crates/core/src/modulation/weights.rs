//! Exterior weight `w(s, Z)`, its exponent `q`, the vector field `A`, and the
//! transport/potential pair `(T, V)` with its eigenfunctions `φ_β`.

use std::f64::consts::{E, PI, FRAC_PI_2};

use serde::Serialize;

use crate::error::{param, Error, Result};
use crate::grid::{CubicSpline, Field};
use crate::quadrature::gauss_legendre;

/// `q(Z) = sin(|Z|/2)` for `|Z| ≤ π`, `1` beyond.
pub fn shape_q(z: f64) -> f64 {
    let a = z.abs();
    if a <= PI {
        (0.5 * a).sin()
    } else {
        1.0
    }
}

/// `w(s, Z)`. Inside `(−π, π)` it is evaluated as
/// `e³ / (8 sin³(e/2) cos⁷(e/2)) · s^{−q}` with `e = π − |Z|`, which is the
/// defining quotient with the cancellations done by hand.
pub fn weight_w(s: f64, z: f64) -> Result<f64> {
    if !(s >= E) || !s.is_finite() {
        return param(format!("weight needs s >= e, got {s}"));
    }
    if !z.is_finite() {
        return param("non-finite Z");
    }
    if z == 0.0 {
        return Err(Error::Singular("w blows up like |Z|^-7 at Z = 0".into()));
    }
    let a = z.abs();
    if a >= PI {
        return Ok(1.0 / s);
    }
    let e = PI - a;
    let (sh, ch) = (0.5 * e).sin_cos();
    let core = if e < 1e-4 {
        // e³/(8 sin³(e/2)) → 1
        let r = 1.0 + e * e / 8.0;
        r / ch.powi(7)
    } else {
        e.powi(3) / (8.0 * sh.powi(3) * ch.powi(7))
    };
    Ok(core * s.powf(-shape_q(z)))
}

/// `∂_s w = −q w / s`.
pub fn weight_w_ds(s: f64, z: f64) -> Result<f64> {
    Ok(-shape_q(z) * weight_w(s, z)? / s)
}

/// `A(Z)`: `sin Z` on `[−π/2, π/2]`, `±1` beyond.
pub fn vector_a(z: f64) -> f64 {
    if z <= -FRAC_PI_2 {
        -1.0
    } else if z >= FRAC_PI_2 {
        1.0
    } else {
        z.sin()
    }
}

/// Transport field `T(Z)`.
pub fn transport_t(z: f64) -> f64 {
    if z <= -PI {
        -(0.5 * z + FRAC_PI_2)
    } else if z >= PI {
        -(0.5 * z - FRAC_PI_2)
    } else {
        0.5 * z.sin()
    }
}

/// Potential `V(Z)`.
pub fn potential_v(z: f64) -> f64 {
    if z.abs() > PI {
        1.0
    } else {
        -z.cos()
    }
}

/// `φ_β` and `φ_β'`, valid for `Z ∈ (−π, 0) ∪ (0, π)` and `|Z| > π`.
pub fn phi_beta(beta: f64, z: f64) -> Result<(f64, f64)> {
    if !z.is_finite() || !beta.is_finite() {
        return param("non-finite argument");
    }
    if z == 0.0 || z.abs() == PI {
        return Err(Error::Singular(format!("φ_β is not defined by its branches at Z = {z}")));
    }
    if z.abs() > PI {
        let d = z.abs() - PI;
        let p = 2.0 * (1.0 - beta);
        let value = d.powf(p);
        let slope = p * d.powf(p - 1.0) * z.signum();
        return Ok((value, slope));
    }
    let half = 0.5 * z;
    let t = half.tan();
    let c = half.cos();
    let ratio = t * t;
    let dratio = t / (c * c);
    let s2 = z.sin().powi(2);
    let value = ratio.powf(beta) * s2;
    let slope = beta * ratio.powf(beta - 1.0) * dratio * s2 + ratio.powf(beta) * (2.0 * z).sin();
    Ok((value, slope))
}

/// `|V φ_β + T φ_β' − β φ_β|`.
pub fn local_operator_check(beta: f64, z: f64) -> Result<f64> {
    let (phi, dphi) = phi_beta(beta, z)?;
    Ok((potential_v(z) * phi + transport_t(z) * dphi - beta * phi).abs())
}

/// The four exterior integrals of the trapped-regime definition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExteriorNorms {
    /// `∫_{−π−a}^{−Me^{−s}} u² w`
    pub left_l2: f64,
    /// `∫_{Me^{−s}}^{∞} u² w`
    pub right_l2: f64,
    /// `∫_{−π−a}^{−Me^{−s}} |A ∂_Z u|² w`
    pub left_grad: f64,
    pub right_grad: f64,
}

impl ExteriorNorms {
    pub fn l2(&self) -> f64 {
        self.left_l2 + self.right_l2
    }

    pub fn grad(&self) -> f64 {
        self.left_grad + self.right_grad
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.left_l2, self.right_l2, self.left_grad, self.right_grad]
    }
}

const EXT_ORDER: usize = 8;

// ∫ of both integrands over [lo, hi], Gauss–Legendre on each piece
fn integrate_pieces(
    breaks: &[f64],
    s: f64,
    u: &impl Fn(f64) -> Result<(f64, f64)>,
) -> Result<(f64, f64)> {
    let (gx, gw) = gauss_legendre(EXT_ORDER);
    let mut l2 = 0.0;
    let mut grad = 0.0;
    for pair in breaks.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if !(b > a) {
            continue;
        }
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for k in 0..EXT_ORDER {
            let z = mid + half * gx[k];
            let (v, dv) = u(z)?;
            let w = weight_w(s, z)?;
            l2 += half * gw[k] * v * v * w;
            let ad = vector_a(z) * dv;
            grad += half * gw[k] * ad * ad * w;
        }
    }
    Ok((l2, grad))
}

// breakpoints from `inner` (closest to 0) to `outer`, geometric near the
// singular end and at most `cap` apart
fn graded_breaks(inner: f64, outer: f64, ratio: f64, cap: f64) -> Vec<f64> {
    let mut out = vec![inner];
    let mut x = inner;
    while x < outer {
        let step = (x * (ratio - 1.0)).min(cap).max(1e-300);
        x = (x + step).min(outer);
        out.push(x);
    }
    out
}

fn check_norm_inputs(s: f64, m: f64) -> Result<f64> {
    if !(s >= E) {
        return param(format!("exterior norms need s >= e, got {s}"));
    }
    if !(m > 0.0) {
        return param("M must be positive");
    }
    Ok(m * (-s).exp())
}

/// Exterior norms of a remainder given pointwise as `Z ↦ (u, ∂_Z u)`,
/// integrated over `[−π−a, −Me^{−s}]` and `[Me^{−s}, z_max]` on panels
/// graded towards the singular point of `w`.
pub fn exterior_norms_fn(
    u: impl Fn(f64) -> Result<(f64, f64)>,
    z_max: f64,
    s: f64,
    a: f64,
    m: f64,
) -> Result<ExteriorNorms> {
    let cut = check_norm_inputs(s, m)?;
    let left_end = PI + a;
    let (left_l2, left_grad) = if left_end > cut {
        let breaks: Vec<f64> = graded_breaks(cut, left_end, 1.1, 0.02).into_iter().rev().map(|z| -z).collect();
        integrate_pieces(&breaks, s, &u)?
    } else {
        (0.0, 0.0)
    };
    let (right_l2, right_grad) = if z_max > cut {
        integrate_pieces(&graded_breaks(cut, z_max, 1.1, 0.02), s, &u)?
    } else {
        (0.0, 0.0)
    };
    Ok(ExteriorNorms { left_l2, right_l2, left_grad, right_grad })
}

/// Exterior norms of `u` sampled on a `Z` grid, through its cubic spline.
/// The grid must reach `−π−a` on the left; the right integral stops at the
/// end of the grid.
pub fn exterior_norms(u: &Field, s: f64, a: f64, m: f64) -> Result<ExteriorNorms> {
    let cut = check_norm_inputs(s, m)?;
    let spline = CubicSpline::new(u)?;
    let nodes = u.nodes();
    let left_end = -(PI + a);
    let eval = |z: f64| Ok((spline.eval(z)?, spline.deriv(z)?));
    let mut left = Vec::new();
    let mut right = Vec::new();
    if left_end < -cut {
        if u.grid().start() > left_end + 1e-12 {
            return Err(Error::Range { value: left_end, lo: u.grid().start(), hi: u.grid().end() });
        }
        left.push(left_end.max(u.grid().start()));
        left.extend(nodes.iter().copied().filter(|&z| z > left_end && z < -cut));
        left.push(-cut);
    }
    let end = u.grid().end();
    if end > cut {
        right.push(cut);
        right.extend(nodes.iter().copied().filter(|&z| z > cut && z < end));
        right.push(end);
    }
    // refine the cells next to the singular point geometrically
    let refine = |b: Vec<f64>| -> Vec<f64> {
        let mut out = Vec::with_capacity(b.len() + 64);
        for pair in b.windows(2) {
            let (lo, hi) = (pair[0], pair[1]);
            let inner = lo.abs().min(hi.abs());
            if inner > 0.0 && (hi - lo) > 0.1 * inner {
                let g = graded_breaks(inner, inner + (hi - lo), 1.1, f64::INFINITY);
                if lo < 0.0 {
                    out.extend(g.iter().rev().map(|z| -z));
                } else {
                    out.extend(g);
                }
                out.pop();
            } else {
                out.push(lo);
            }
        }
        if let Some(&last) = b.last() {
            out.push(last);
        }
        out
    };
    let (left_l2, left_grad) = integrate_pieces(&refine(left), s, &eval)?;
    let (right_l2, right_grad) = integrate_pieces(&refine(right), s, &eval)?;
    Ok(ExteriorNorms { left_l2, right_l2, left_grad, right_grad })
}
