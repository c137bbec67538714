//! Renormalisation parameters `(λ, μ, a, y*)` of solution snapshots, the
//! modulation laws, and the trapped-regime diagnostics.
//!
//! Frames: `Y = λ(y − y*)`, `f = ξ/λ²`; `Z = Y/(λ²μ)`, `F = f`;
//! `y* = λμ(π + a)`; remainders `ε(Y) = u(Z) = F(Z) − G_1(Z)`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{param, Error, Result};
use crate::grid::{CubicSpline, Field, LocalInterpolant};
use crate::profiles::g1_one_minus;
use crate::solver::{locate_half_maximum, refined_peak, Snapshot};

mod decompose;
mod frame;
mod weights;

pub use decompose::{
    decompose, decompose_snapshot, parabolic_frame, to_parabolic_frame, DecomposeOptions, Decomposition,
    FrameOptions, ParabolicFrame, SliceDecomposition,
};
pub use frame::{frame_residual, three_point_derivative, FrameResidual, FrameResidualOptions};
pub use weights::{
    exterior_norms, exterior_norms_fn, local_operator_check, phi_beta, potential_v, shape_q, transport_t,
    vector_a, weight_w, weight_w_ds, ExteriorNorms,
};

/// Number of nodes of the local interpolant used to read snapshots.
pub const LOCAL_POINTS: usize = 8;

/// A snapshot prepared for frame sampling: a local high-order interpolant
/// for values and derivatives, and a cubic spline for primitives.
#[derive(Debug, Clone)]
pub struct Slice {
    pub t: f64,
    spline: CubicSpline,
    local: LocalInterpolant,
}

impl Slice {
    pub fn new(t: f64, field: &Field) -> Result<Self> {
        Ok(Slice { t, spline: CubicSpline::new(field)?, local: LocalInterpolant::new(field, LOCAL_POINTS)? })
    }

    pub fn of(snapshot: &Snapshot) -> Result<Self> {
        Self::new(snapshot.t, &snapshot.field)
    }

    pub fn field(&self) -> &Field {
        self.spline.field()
    }

    pub fn spline(&self) -> &CubicSpline {
        &self.spline
    }

    pub fn local(&self) -> &LocalInterpolant {
        &self.local
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModulationState {
    pub t: f64,
    pub s: f64,
    pub lambda: f64,
    pub mu: f64,
    pub a: f64,
    pub y_star: f64,
    pub newton_residual: f64,
    pub eps_rho: f64,
}

/// How `s = s0 + ∫λ² dt` is advanced between snapshots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SRule {
    /// Exact when `1/λ²` is linear in `t` over the interval.
    Harmonic,
    Trapezoid,
}

pub fn advance_s(dt: f64, lambda0: f64, lambda1: f64, rule: SRule) -> f64 {
    let (p0, p1) = (lambda0 * lambda0, lambda1 * lambda1);
    match rule {
        SRule::Trapezoid => 0.5 * dt * (p0 + p1),
        SRule::Harmonic => {
            let d = 1.0 / p0 - 1.0 / p1;
            if d.abs() <= 1e-12 / p0 {
                0.5 * dt * (p0 + p1)
            } else {
                dt * (p1 / p0).ln() / d
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrackOptions {
    pub frame: FrameOptions,
    pub decompose: DecomposeOptions,
    pub s_rule: SRule,
    /// Defaults to `2 ln λ` of the first snapshot.
    pub s0: Option<f64>,
}

impl Default for TrackOptions {
    fn default() -> Self {
        TrackOptions {
            frame: FrameOptions::default(),
            decompose: DecomposeOptions::default(),
            s_rule: SRule::Harmonic,
            s0: None,
        }
    }
}

/// Decompose every snapshot, seeding each one with the refined peak and
/// the previous `μ`.
pub fn track(snapshots: &[Snapshot], opts: &TrackOptions) -> Result<Vec<ModulationState>> {
    let mut out: Vec<ModulationState> = Vec::with_capacity(snapshots.len());
    for (i, snap) in snapshots.iter().enumerate() {
        if i > 0 && !(snap.t > snapshots[i - 1].t) {
            return param("snapshots must be strictly increasing in t");
        }
        let at = |e: Error| Error::AtTime { t: snap.t, source: Box::new(e) };
        let slice = Slice::of(snap).map_err(at)?;
        let (peak, loc) = refined_peak(&snap.field);
        if !(peak > 0.0) {
            return Err(at(Error::Frame("no positive peak".into())));
        }
        let lambda_g = peak.sqrt();
        let mu_g = match out.last() {
            Some(prev) => prev.mu,
            None => {
                let (yl, yr) = locate_half_maximum(&snap.field, 0.5 * peak).map_err(at)?;
                (yr - yl) / (lambda_g * PI)
            }
        };
        let d = decompose_snapshot(&slice, (lambda_g, mu_g, loc), opts.frame, opts.decompose).map_err(at)?;
        let s = match out.last() {
            None => opts.s0.unwrap_or(2.0 * d.lambda.ln()),
            Some(prev) => prev.s + advance_s(snap.t - prev.t, prev.lambda, d.lambda, opts.s_rule),
        };
        out.push(ModulationState {
            t: snap.t,
            s,
            lambda: d.lambda,
            mu: d.mu,
            a: d.a,
            y_star: d.y_star,
            newton_residual: d.newton_residual,
            eps_rho: d.eps_rho,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModulationResidual {
    pub index: usize,
    pub s: f64,
    pub r_lambda: f64,
    pub r_mu: f64,
}

/// `r_λ = λ_s/λ − 1/2 + 1/(4λ⁴μ²)` and `r_μ = μ_s/μ − 1/(2λ⁴μ²)` at every
/// interior state, by three-point differences in `s`.
pub fn modulation_residuals(states: &[ModulationState]) -> Vec<ModulationResidual> {
    if states.len() < 3 {
        return Vec::new();
    }
    (1..states.len() - 1)
        .map(|i| {
            let w = &states[i - 1..=i + 1];
            let s = [w[0].s, w[1].s, w[2].s];
            let dl = three_point_derivative(s, [w[0].lambda.ln(), w[1].lambda.ln(), w[2].lambda.ln()]);
            let dm = three_point_derivative(s, [w[0].mu.ln(), w[1].mu.ln(), w[2].mu.ln()]);
            let st = &states[i];
            let q = 1.0 / (st.lambda.powi(4) * st.mu * st.mu);
            ModulationResidual { index: i, s: st.s, r_lambda: dl - 0.5 + 0.25 * q, r_mu: dm - 0.5 * q }
        })
        .collect()
}

/// `u(Z) = F(Z) − G_1(Z)` and `∂_Z u` of a snapshot in the profile frame of
/// `state`.
pub fn profile_remainder(slice: &Slice, state: &ModulationState, z: f64) -> Result<(f64, f64)> {
    let (lambda, mu) = (state.lambda, state.mu);
    let g = slice.field().grid();
    let y = (state.y_star + lambda * mu * z).clamp(g.start(), g.end());
    let l2 = lambda * lambda;
    let [dv, d1, _] = slice.local().eval_all(y, l2)?;
    // (ξ − λ²)/λ² + (1 − G_1)
    let u = dv / l2 + g1_one_minus(z);
    let du = mu * d1 / lambda - crate::profiles::g1_deriv(z);
    Ok((u, du))
}

/// Exterior norms of a tracked snapshot, or `None` while `s < e`.
pub fn snapshot_exterior_norms(slice: &Slice, state: &ModulationState, m: f64) -> Result<Option<ExteriorNorms>> {
    if state.s < std::f64::consts::E {
        return Ok(None);
    }
    let z_max = (slice.field().grid().end() - state.y_star) / (state.lambda * state.mu);
    exterior_norms_fn(|z| profile_remainder(slice, state, z), z_max, state.s, state.a, m).map(Some)
}

/// Constants of the trapped-regime templates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrappedParams {
    pub k: f64,
    pub m: f64,
    pub nu: f64,
}

impl Default for TrappedParams {
    fn default() -> Self {
        TrappedParams { k: 100.0, m: 20.0, nu: 0.01 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrappedRow {
    pub s: f64,
    pub lambda_ok: bool,
    pub mu_ok: bool,
    pub a_ok: bool,
    pub eps_ok: bool,
    pub l2_ok: Option<bool>,
    pub grad_ok: Option<bool>,
}

impl TrappedRow {
    pub fn all(&self) -> bool {
        self.lambda_ok
            && self.mu_ok
            && self.a_ok
            && self.eps_ok
            && self.l2_ok.unwrap_or(true)
            && self.grad_ok.unwrap_or(true)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrappedVerdict {
    pub params: TrappedParams,
    pub rows: Vec<TrappedRow>,
    /// Number of states that violate each template, in the order
    /// λ, μ, a, ‖ε‖_ρ, ∫u²w, ∫|A∂u|²w.
    pub violations: [usize; 6],
    pub trapped: bool,
}

/// Compare every state against the trapped-regime inequalities.
pub fn trapped_verdict(
    states: &[ModulationState],
    norms: &[Option<ExteriorNorms>],
    params: TrappedParams,
) -> Result<TrappedVerdict> {
    if states.len() != norms.len() {
        return param("one exterior-norm entry per state is required");
    }
    let TrappedParams { k, nu, .. } = params;
    let mut violations = [0usize; 6];
    let rows: Vec<TrappedRow> = states
        .iter()
        .zip(norms)
        .map(|(st, n)| {
            let s = st.s;
            let half = (0.5 * s).exp();
            let row = TrappedRow {
                s,
                lambda_ok: st.lambda > half / k && st.lambda < k * half,
                mu_ok: st.mu > 1.0 / k && st.mu < k,
                a_ok: st.a.abs() < k * (-(0.5 - 2.0 * nu) * s).exp(),
                eps_ok: st.eps_rho < k * (-3.5 * s).exp(),
                l2_ok: n.map(|n| n.l2() < k * k * (-(1.0 - 2.0 * nu) * s).exp()),
                grad_ok: n.map(|n| n.grad() < k * k * (2.0 * nu * s).exp()),
            };
            let flags = [
                row.lambda_ok,
                row.mu_ok,
                row.a_ok,
                row.eps_ok,
                row.l2_ok.unwrap_or(true),
                row.grad_ok.unwrap_or(true),
            ];
            for (v, ok) in violations.iter_mut().zip(flags) {
                if !ok {
                    *v += 1;
                }
            }
            row
        })
        .collect();
    let trapped = rows.iter().all(TrappedRow::all);
    Ok(TrappedVerdict { params, rows, violations, trapped })
}
