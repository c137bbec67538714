//! Parabolic frames and the orthogonal decomposition
//! `f(Y + Ỹ0) = λ² G_1(Y/(λ²μ)) + ε̃` with `⟨ε̃, h_i⟩_ρ = 0`, `i = 0, 1, 2`.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use serde::Serialize;

use crate::error::{param, Error, Result};
use crate::grid::{Field, Grid};
use crate::profiles::g1_one_minus;
use crate::spectral::{inner_product_rho, norm_sq_rho, sample_hermite, DEFAULT_Y_CUT};

use super::Slice;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrameOptions {
    pub y_cut: f64,
    pub spacing: f64,
}

impl Default for FrameOptions {
    fn default() -> Self {
        FrameOptions { y_cut: DEFAULT_Y_CUT, spacing: 0.01 }
    }
}

/// `f = ξ/λ²` on a uniform grid in `Y = λ(y − y*)`, stored as
/// `base + dev` so that the small variations near the peak keep their
/// precision.
#[derive(Debug, Clone)]
pub struct ParabolicFrame {
    pub lambda: f64,
    pub y_star: f64,
    pub base: f64,
    pub dev: Field,
}

impl ParabolicFrame {
    /// A frame around an already rescaled field.
    pub fn from_field(f: &Field) -> Self {
        ParabolicFrame { lambda: 1.0, y_star: 0.0, base: 0.0, dev: f.clone() }
    }

    pub fn grid(&self) -> &Grid {
        self.dev.grid()
    }

    pub fn f(&self) -> Result<Field> {
        self.dev.map(|_, v| self.base + v)
    }
}

pub fn to_parabolic_frame(field: &Field, lambda: f64, y_star: f64, opts: FrameOptions) -> Result<ParabolicFrame> {
    parabolic_frame(&Slice::new(0.0, field)?, lambda, y_star, opts)
}

/// Frame of a prepared slice, on `[max(−λy*, −Y_cut), Y_cut]`.
pub fn parabolic_frame(slice: &Slice, lambda: f64, y_star: f64, opts: FrameOptions) -> Result<ParabolicFrame> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return param(format!("λ must be positive, got {lambda}"));
    }
    if !(opts.y_cut > 0.0 && opts.spacing > 0.0) {
        return param("frame cut and spacing must be positive");
    }
    let g = slice.field().grid();
    let (y_lo, y_hi) = (g.start(), g.end());
    if !(y_star > y_lo && y_star < y_hi) {
        return Err(Error::Frame(format!("center {y_star} outside [{y_lo}, {y_hi}]")));
    }
    let hi = opts.y_cut;
    if y_star + hi / lambda > y_hi {
        return Err(Error::Frame(format!("frame reaches y = {} beyond y_max = {y_hi}", y_star + hi / lambda)));
    }
    let lo = (-lambda * (y_star - y_lo)).max(-opts.y_cut);
    let n = (((hi - lo) / opts.spacing).ceil() as usize + 1).max(8);
    let grid = Grid::uniform(lo, hi, n)?;
    let local = slice.local();
    let reference = local.eval(y_star)?;
    let scale = 1.0 / (lambda * lambda);
    let dev = grid
        .nodes()
        .iter()
        .map(|&y| {
            let x = (y_star + y / lambda).clamp(y_lo, y_hi);
            Ok(local.eval_all(x, reference)?[0] * scale)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ParabolicFrame { lambda, y_star, base: reference * scale, dev: Field::new(grid, dev)? })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecomposeOptions {
    /// Bound on `max_i |⟨ε̃, h_i⟩_ρ|` at the solution.
    pub tol: f64,
    pub max_iter: usize,
    /// `|λ − λ_guess| ≤ lambda_box · λ_guess`.
    pub lambda_box: f64,
    /// `μ / μ_guess ∈ [1/mu_box, mu_box]`.
    pub mu_box: f64,
    pub shift_box: f64,
}

impl Default for DecomposeOptions {
    fn default() -> Self {
        DecomposeOptions { tol: 1e-10, max_iter: 50, lambda_box: 0.25, mu_box: 2.0, shift_box: 5.0 }
    }
}

#[derive(Debug, Clone)]
pub struct Decomposition {
    pub lambda: f64,
    pub mu: f64,
    pub shift: f64,
    /// `⟨ε̃, h_i⟩_ρ` for `i = 0, 1, 2`.
    pub orthogonality: [f64; 3],
    pub newton_residual: f64,
    pub iterations: usize,
    /// `ε̃` on the shifted grid `Y − Ỹ0`.
    pub remainder: Field,
}

// unknowns: A = λ², κ = 1/(λ²μ)², Ỹ0
#[derive(Debug, Clone, Copy)]
struct Unknowns {
    amp: f64,
    kappa: f64,
    shift: f64,
}

impl Unknowns {
    fn lambda(&self) -> f64 {
        self.amp.sqrt()
    }

    fn mu(&self) -> f64 {
        1.0 / (self.amp * self.kappa.sqrt())
    }
}

fn remainder(frame: &ParabolicFrame, p: Unknowns) -> Result<Field> {
    let nodes: Vec<f64> = frame.grid().nodes().iter().map(|y| y - p.shift).collect();
    let grid = Grid::new(nodes)?;
    let sigma = p.kappa.sqrt();
    let offset = frame.base - p.amp;
    let values = grid
        .nodes()
        .iter()
        .zip(frame.dev.values())
        .map(|(&y, &d)| offset + d + p.amp * g1_one_minus(sigma * y))
        .collect();
    Field::new(grid, values)
}

fn orthogonality(rem: &Field) -> Result<[f64; 3]> {
    let mut out = [0.0; 3];
    for (i, o) in out.iter_mut().enumerate() {
        let h = sample_hermite(i, rem.grid())?;
        *o = inner_product_rho(rem, &h, f64::NEG_INFINITY)?;
    }
    Ok(out)
}

fn max_abs3(r: &[f64; 3]) -> f64 {
    r.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Damped Newton on `(λ², 1/(λ²μ)², Ỹ0)` with a central-difference
/// Jacobian. `guess = (λ, μ, Ỹ0)`.
pub fn decompose(frame: &ParabolicFrame, guess: (f64, f64, f64), opts: DecomposeOptions) -> Result<Decomposition> {
    let (lg, mg, yg) = guess;
    if !(lg > 0.0 && mg > 0.0) || !yg.is_finite() {
        return param(format!("bad decomposition guess ({lg}, {mg}, {yg})"));
    }
    let base = Unknowns { amp: lg * lg, kappa: 1.0 / (lg * lg * mg).powi(2), shift: yg };
    // scaled coordinates: relative for A and κ, absolute for Ỹ0
    let unpack = |x: &Vector3<f64>| Unknowns {
        amp: base.amp * (1.0 + x[0]),
        kappa: base.kappa * (1.0 + x[1]),
        shift: base.shift + x[2],
    };
    let inside = |p: &Unknowns| {
        p.amp > 0.0
            && p.kappa > 0.0
            && (p.lambda() - lg).abs() <= opts.lambda_box * lg
            && p.mu() / mg <= opts.mu_box
            && mg / p.mu() <= opts.mu_box
            && (p.shift).abs() <= opts.shift_box
    };
    let eval = |x: &Vector3<f64>| -> Result<[f64; 3]> { orthogonality(&remainder(frame, unpack(x))?) };

    let mut x = Vector3::zeros();
    let mut r = eval(&x)?;
    let mut iterations = 0;
    let mut converged = max_abs3(&r) == 0.0;
    while !converged && iterations < opts.max_iter {
        iterations += 1;
        let mut jac = Matrix3::zeros();
        for j in 0..3 {
            let h = 1e-6;
            let mut xp = x;
            let mut xm = x;
            xp[j] += h;
            xm[j] -= h;
            let (rp, rm) = (eval(&xp)?, eval(&xm)?);
            for i in 0..3 {
                jac[(i, j)] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
        let rhs = Vector3::new(-r[0], -r[1], -r[2]);
        let dx = jac
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Decomposition("singular Jacobian".into()))?;
        let current = max_abs3(&r);
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let trial = x + dx * alpha;
            if inside(&unpack(&trial)) {
                let rt = eval(&trial)?;
                if max_abs3(&rt) < current {
                    accepted = Some((trial, rt));
                    break;
                }
            }
            alpha *= 0.5;
        }
        let step = dx.amax();
        match accepted {
            Some((trial, rt)) => {
                x = trial;
                r = rt;
                if step * alpha <= 1e-13 || max_abs3(&r) == 0.0 {
                    converged = true;
                }
            }
            None if step <= 1e-10 => converged = true,
            None => break,
        }
    }
    let p = unpack(&x);
    let newton_residual = max_abs3(&r);
    if !(newton_residual <= opts.tol) {
        return Err(Error::Decomposition(format!(
            "orthogonality residual {newton_residual:e} after {iterations} iterations"
        )));
    }
    if !inside(&p) {
        return Err(Error::Decomposition("solution left the uniqueness box".into()));
    }
    Ok(Decomposition {
        lambda: p.lambda(),
        mu: p.mu(),
        shift: p.shift,
        orthogonality: r,
        newton_residual,
        iterations,
        remainder: remainder(frame, p)?,
    })
}

/// Global parameters of one snapshot.
#[derive(Debug, Clone)]
pub struct SliceDecomposition {
    pub lambda: f64,
    pub mu: f64,
    pub y_star: f64,
    pub a: f64,
    pub newton_residual: f64,
    pub iterations: usize,
    pub reframes: usize,
    /// `‖ε‖_{L²_ρ}` in the final frame.
    pub eps_rho: f64,
    pub frame: ParabolicFrame,
    pub decomposition: Decomposition,
}

/// Decompose `ξ` by re-centering the parabolic frame on the current
/// estimate until the relative parameters are `(1, ·, 0)`.
pub fn decompose_snapshot(
    slice: &Slice,
    guess: (f64, f64, f64),
    frame_opts: FrameOptions,
    opts: DecomposeOptions,
) -> Result<SliceDecomposition> {
    let (mut lambda, mut mu, mut y_star) = guess;
    for reframes in 1..=20 {
        let frame = parabolic_frame(slice, lambda, y_star, frame_opts)?;
        let rel_mu = mu * lambda * lambda;
        let dec = decompose(&frame, (1.0, rel_mu, 0.0), opts)?;
        let next_lambda = lambda * dec.lambda;
        let next_y = y_star + dec.shift / lambda;
        let next_mu = dec.lambda * dec.mu / (lambda * lambda);
        let done = (dec.lambda - 1.0).abs() <= 1e-10 && dec.shift.abs() <= 1e-8;
        lambda = next_lambda;
        mu = next_mu;
        y_star = next_y;
        if done {
            let eps_rho = norm_sq_rho(&dec.remainder)?.sqrt();
            return Ok(SliceDecomposition {
                lambda,
                mu,
                y_star,
                a: y_star / (lambda * mu) - PI,
                newton_residual: dec.newton_residual,
                iterations: dec.iterations,
                reframes,
                eps_rho,
                frame,
                decomposition: dec,
            });
        }
    }
    Err(Error::Decomposition("frame re-centering did not settle".into()))
}
