//! Residual of the evolution written in the parabolic frame,
//! `f_s + (λ_s/λ)(2 + Y∂_Y)f − f² + ∂_Y⁻¹f f_Y + (∫_{−λy*}^0 f − λy*_s) f_Y − f_YY`.

use serde::Serialize;

use crate::error::{param, Result};
use super::{ModulationState, Slice};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrameResidualOptions {
    pub y_window: f64,
    pub samples: usize,
    /// Multiplies the measured `λ_s`; `1` for the plain check.
    pub lambda_s_scale: f64,
}

impl Default for FrameResidualOptions {
    fn default() -> Self {
        FrameResidualOptions { y_window: 5.0, samples: 201, lambda_s_scale: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrameResidual {
    /// `sup |residual|` over the largest individual term.
    pub normalized: f64,
    pub sup: f64,
    pub scale: f64,
}

/// Derivative at `x1` of the parabola through three points.
pub fn three_point_derivative(x: [f64; 3], f: [f64; 3]) -> f64 {
    let h1 = x[1] - x[0];
    let h2 = x[2] - x[1];
    -h2 / (h1 * (h1 + h2)) * f[0] + (h2 - h1) / (h1 * h2) * f[1] + h1 / (h2 * (h1 + h2)) * f[2]
}

/// Residual at the middle of three consecutive slices, `states[i]` being
/// the parameters of `slices[i]`.
pub fn frame_residual(
    slices: [&Slice; 3],
    states: [&ModulationState; 3],
    opts: FrameResidualOptions,
) -> Result<FrameResidual> {
    if opts.samples < 3 || !(opts.y_window > 0.0) {
        return param("frame residual needs a positive window and at least 3 samples");
    }
    let s = [states[0].s, states[1].s, states[2].s];
    if !(s[0] < s[1] && s[1] < s[2]) {
        return param("slices must be strictly increasing in s");
    }
    let st = states[1];
    let (lambda, y_star) = (st.lambda, st.y_star);
    let lambda_s = opts.lambda_s_scale
        * three_point_derivative(s, [states[0].lambda.ln(), states[1].lambda.ln(), states[2].lambda.ln()]);
    let y_star_s = three_point_derivative(s, [states[0].y_star, states[1].y_star, states[2].y_star]);
    let l2 = lambda * lambda;
    // frames of the neighbours share the reference value 1 to keep f_s precise
    let f_at = |i: usize, y: f64| -> Result<f64> {
        let st = states[i];
        let x = st.y_star + y / st.lambda;
        let ll = st.lambda * st.lambda;
        Ok(slices[i].local().eval_all(x, ll)?[0] / ll)
    };
    let local = slices[1].local();
    let spline = slices[1].spline();
    let mut sup = 0.0_f64;
    let mut scale = 0.0_f64;
    for j in 0..opts.samples {
        let y = -opts.y_window + 2.0 * opts.y_window * j as f64 / (opts.samples - 1) as f64;
        let x = y_star + y / lambda;
        let [dv, d1, d2] = local.eval_all(x, l2)?;
        let f = 1.0 + dv / l2;
        let f_y = d1 / (l2 * lambda);
        let f_yy = d2 / (l2 * l2);
        let f_s = three_point_derivative(s, [f_at(0, y)?, f_at(1, y)?, f_at(2, y)?]);
        // ∂_Y⁻¹f + ∫_{−λy*}^0 f is the primitive from the wall, U(y)/λ
        let wall = spline.integral_between(spline.grid().start(), x)? / lambda;
        let terms = [
            f_s,
            lambda_s * (2.0 * f + y * f_y),
            -f * f,
            (wall - lambda * y_star_s) * f_y,
            -f_yy,
        ];
        let r: f64 = terms.iter().sum();
        sup = sup.max(r.abs());
        scale = terms.iter().fold(scale, |m, t| m.max(t.abs()));
    }
    Ok(FrameResidual { normalized: if scale > 0.0 { sup / scale } else { 0.0 }, sup, scale })
}
