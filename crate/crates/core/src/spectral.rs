//! Parabolic-frame linear machinery: the Gaussian weight
//! `ρ(Y) = ½√(3/π) e^{−3Y²/4}`, the Hermite eigenbasis `h_i` of
//! `𝓛ε = −ε + (3/2) Y ∂_Y ε − ∂_YY ε` (eigenvalues `−1 + 3i/2`), weighted
//! inner products, and Poincaré / spectral-gap checks.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{param, Error, Result};
use crate::grid::{CubicSpline, Field, Grid, Stencils};
use crate::par::{map_tasks, Execution};
use crate::quadrature::Panels;

pub const MAX_HERMITE_INDEX: usize = 30;
pub const DEFAULT_Y_CUT: f64 = 12.0;

pub fn rho(y: f64) -> f64 {
    0.5 * (3.0 / PI).sqrt() * (-0.75 * y * y).exp()
}

/// `h_i(Y) = Σ_j i!/(j!(i−2j)!) 3^{(i−2j)/2} (−1)^j Y^{i−2j}`.
pub fn hermite(i: usize, y: f64) -> Result<f64> {
    if i > MAX_HERMITE_INDEX {
        return param(format!("Hermite index {i} exceeds {MAX_HERMITE_INDEX}"));
    }
    let s3 = 3f64.sqrt();
    let mut acc = 0.0;
    // coefficient i!/(j!(i−2j)!) built incrementally
    let mut coeff = 1.0;
    for j in 0..=i / 2 {
        if j > 0 {
            let m = (i - 2 * j) as f64;
            coeff *= (m + 1.0) * (m + 2.0) / j as f64;
        }
        let p = i - 2 * j;
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * coeff * (s3 * y).powi(p as i32);
    }
    Ok(acc)
}

/// `‖h_i‖²_ρ = 2^i i!`.
pub fn hermite_norm_sq(i: usize) -> f64 {
    (1..=i).fold(1.0, |acc, j| acc * 2.0 * j as f64)
}

pub fn eigenvalue(i: usize) -> f64 {
    -1.0 + 1.5 * i as f64
}

/// Gauss–Legendre panel quadrature for `ρ`-weighted integrals on
/// `[Y0, Y_cut]`.
#[derive(Debug, Clone)]
pub struct HermiteFrame {
    pub y0: f64,
    pub y_cut: f64,
    pub n_quad: usize,
    pub max_index: usize,
    panels: Panels,
}

impl HermiteFrame {
    /// `y0 = None` is the whole line, truncated at `−y_cut`.
    pub fn new(y0: Option<f64>, y_cut: f64, n_quad: usize, max_index: usize) -> Result<Self> {
        if !(y_cut > 0.0) {
            return param("Y_cut must be positive");
        }
        if max_index > MAX_HERMITE_INDEX {
            return param(format!("max_index {max_index} exceeds {MAX_HERMITE_INDEX}"));
        }
        let lo = y0.unwrap_or(-y_cut).max(-y_cut);
        if !(lo < y_cut) {
            return param(format!("empty quadrature range [{lo}, {y_cut}]"));
        }
        if n_quad < 8 {
            return param("need at least 8 quadrature points");
        }
        let order = 8;
        let panels = Panels::new(lo, y_cut, n_quad.div_ceil(order), order)?;
        Ok(HermiteFrame { y0: lo, y_cut, n_quad, max_index, panels })
    }

    pub fn whole_line() -> Self {
        Self::new(None, DEFAULT_Y_CUT, 384, MAX_HERMITE_INDEX).expect("valid defaults")
    }

    /// `∫ f ρ` over `[Y0, Y_cut]`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.panels.integrate(|y| f(y) * rho(y))
    }

    pub fn inner(&self, f: impl Fn(f64) -> f64, g: impl Fn(f64) -> f64) -> f64 {
        self.integrate(|y| f(y) * g(y))
    }

    pub fn hermite(&self, i: usize, y: f64) -> Result<f64> {
        if i > self.max_index {
            return param(format!("Hermite index {i} exceeds frame max {}", self.max_index));
        }
        hermite(i, y)
    }

    pub fn gram(&self, i: usize, j: usize) -> Result<f64> {
        self.hermite(i, 0.0)?;
        self.hermite(j, 0.0)?;
        Ok(self.inner(|y| hermite(i, y).unwrap_or(0.0), |y| hermite(j, y).unwrap_or(0.0)))
    }
}

/// Sample `h_i` on a grid.
pub fn sample_hermite(i: usize, grid: &Grid) -> Result<Field> {
    let values = grid.nodes().iter().map(|&y| hermite(i, y)).collect::<Result<Vec<_>>>()?;
    Field::new(grid.clone(), values)
}

/// `∫ f g ρ` over `[max(Y0, start), end]` of sampled fields on the same
/// grid, through the cubic spline of the product.
pub fn inner_product_rho(f: &Field, g: &Field, y0: f64) -> Result<f64> {
    if f.grid() != g.grid() {
        return param("inner product of fields on different grids");
    }
    weighted_integral(f.grid(), |i| f.values()[i] * g.values()[i], y0)
}

fn weighted_integral(grid: &Grid, value: impl Fn(usize) -> f64, y0: f64) -> Result<f64> {
    let values = grid.nodes().iter().enumerate().map(|(i, &y)| value(i) * rho(y)).collect();
    let spline = CubicSpline::new(&Field::new(grid.clone(), values)?)?;
    let lo = y0.max(grid.start());
    if lo >= grid.end() {
        return Ok(0.0);
    }
    if lo <= grid.start() {
        Ok(spline.integral())
    } else {
        spline.integral_between(lo, grid.end())
    }
}

pub fn norm_sq_rho(f: &Field) -> Result<f64> {
    inner_product_rho(f, f, f64::NEG_INFINITY)
}

/// `𝓛ε = −ε + (3/2) Y ε_Y − ε_YY` by grid finite differences.
pub fn apply_l(eps: &Field) -> Result<Field> {
    let st = Stencils::new(eps.grid());
    let d1 = st.apply(1, eps.values());
    let d2 = st.apply(2, eps.values());
    let values = eps
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, &y)| -eps.values()[i] + 1.5 * y * d1[i] - d2[i])
        .collect();
    eps.with_values(values)
}

/// Remove the `h_0, h_1, h_2` components by solving the discrete Gram
/// system, so that the output is orthogonal to all three in the discrete
/// inner product.
pub fn project_off_low_modes(eps: &Field) -> Result<Field> {
    let grid = eps.grid();
    let basis: Vec<Field> = (0..3).map(|i| sample_hermite(i, grid)).collect::<Result<_>>()?;
    let mut gram = Matrix3::zeros();
    let mut rhs = Vector3::zeros();
    for i in 0..3 {
        for j in 0..3 {
            gram[(i, j)] = inner_product_rho(&basis[i], &basis[j], f64::NEG_INFINITY)?;
        }
        rhs[i] = inner_product_rho(eps, &basis[i], f64::NEG_INFINITY)?;
    }
    let c = gram
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("singular Hermite Gram matrix".into()))?;
    let values = (0..grid.len())
        .map(|j| eps.values()[j] - (0..3).map(|i| c[i] * basis[i].values()[j]).sum::<f64>())
        .collect();
    eps.with_values(values)
}

/// Both sides of `∫Y²ε²e^{−Y²/4} ≤ 4∫ε²e^{−Y²/4} + 16∫|∂_Yε|²e^{−Y²/4}`.
///
/// A field living on a half-line `[Y0, ∞)` is reflected evenly about `Y0`.
pub fn poincare_check(eps: &Field) -> Result<(f64, f64)> {
    let st = Stencils::new(eps.grid());
    let d = st.apply(1, eps.values());
    let grid = eps.grid();
    let whole_line = grid.start() <= -grid.end() * (1.0 - 1e-12) || grid.start() < -30.0;
    let y0 = grid.start();
    let weight = |y: f64| {
        if whole_line {
            (-0.25 * y * y).exp()
        } else {
            let r = 2.0 * y0 - y;
            (-0.25 * y * y).exp() + (-0.25 * r * r).exp()
        }
    };
    let with = |g: &dyn Fn(usize, f64) -> f64| -> Result<f64> {
        let values = grid.nodes().iter().enumerate().map(|(i, &y)| g(i, y) * weight(y)).collect();
        Ok(CubicSpline::new(&Field::new(grid.clone(), values)?)?.integral())
    };
    let e = eps.values();
    if whole_line {
        let lhs = with(&|i, y| y * y * e[i] * e[i])?;
        let rhs = 4.0 * with(&|i, _| e[i] * e[i])? + 16.0 * with(&|i, _| d[i] * d[i])?;
        Ok((lhs, rhs))
    } else {
        // reflection: Y² on the mirrored half becomes (2Y0 − Y)²
        let lhs = with(&|i, y| {
            let r = 2.0 * y0 - y;
            e[i] * e[i] * (y * y * (-0.25 * y * y).exp() + r * r * (-0.25 * r * r).exp()) / weight(y)
        })?;
        let rhs = 4.0 * with(&|i, _| e[i] * e[i])? + 16.0 * with(&|i, _| d[i] * d[i])?;
        Ok((lhs, rhs))
    }
}

/// `(‖∂_Y ε̄‖²_ρ, (9/2) ‖ε̄‖²_ρ)` for an already projected `ε̄`.
pub fn spectral_gap_check(eps_bar: &Field) -> Result<(f64, f64)> {
    let st = Stencils::new(eps_bar.grid());
    let d = eps_bar.with_values(st.apply(1, eps_bar.values()))?;
    Ok((norm_sq_rho(&d)?, 4.5 * norm_sq_rho(eps_bar)?))
}

/// Smooth random field `Σ_m (a_m cos(mωY) + b_m sin(mωY)) / (1+m)` with
/// standard normal-ish coefficients, `ω = π / (2 L)` for the grid half-length
/// `L`.
pub fn random_band_limited(grid: &Grid, rng: &mut impl Rng, modes: usize) -> Result<Field> {
    let l = grid.end().abs().max(grid.start().abs());
    let omega = PI / (2.0 * l);
    let coeffs: Vec<(f64, f64)> = (0..=modes)
        .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    Field::from_fn(grid, |y| {
        coeffs
            .iter()
            .enumerate()
            .map(|(m, (a, b))| {
                let x = m as f64 * omega * y;
                (a * x.cos() + b * x.sin()) / (1.0 + m as f64)
            })
            .sum()
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenRow {
    pub index: usize,
    pub eigenvalue: f64,
    pub residual: f64,
}

/// Relative `L²_ρ` eigen-residual of `𝓛h_i` on a uniform grid over
/// `[−half_width, half_width]`.
pub fn eigen_residuals(max_index: usize, half_width: f64, spacing: f64) -> Result<Vec<EigenRow>> {
    let n = (2.0 * half_width / spacing).round() as usize + 1;
    let grid = Grid::uniform(-half_width, half_width, n)?;
    (0..=max_index)
        .map(|i| {
            let h = sample_hermite(i, &grid)?;
            let lh = apply_l(&h)?;
            let lam = eigenvalue(i);
            let diff = lh.with_values(lh.values().iter().zip(h.values()).map(|(a, b)| a - lam * b).collect())?;
            let residual = (norm_sq_rho(&diff)? / norm_sq_rho(&h)?).sqrt();
            Ok(EigenRow { index: i, eigenvalue: lam, residual })
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct InequalityTally {
    pub trials: usize,
    pub poincare_pass: usize,
    pub gap_pass: usize,
    pub worst_poincare_ratio: f64,
    pub worst_gap_ratio: f64,
}

/// Poincaré and spectral-gap inequalities on `trials` random fields.
pub fn random_inequality_trials(trials: usize, seed: u64, exec: Execution) -> Result<InequalityTally> {
    let grid = Grid::uniform(-DEFAULT_Y_CUT, DEFAULT_Y_CUT, 4801)?;
    let results = map_tasks(exec, trials, |t| -> Result<(f64, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(t as u64));
        let modes = rng.gen_range(2..12);
        let eps = random_band_limited(&grid, &mut rng, modes)?;
        let (lhs, rhs) = poincare_check(&eps)?;
        let bar = project_off_low_modes(&eps)?;
        let (g_lhs, g_rhs) = spectral_gap_check(&bar)?;
        Ok((lhs / rhs, g_lhs / g_rhs))
    });
    let mut tally = InequalityTally {
        trials,
        poincare_pass: 0,
        gap_pass: 0,
        worst_poincare_ratio: 0.0,
        worst_gap_ratio: f64::INFINITY,
    };
    for r in results {
        let (p, g) = r?;
        if p <= 1.0 {
            tally.poincare_pass += 1;
        }
        if g >= 1.0 - 1e-6 {
            tally.gap_pass += 1;
        }
        tally.worst_poincare_ratio = tally.worst_poincare_ratio.max(p);
        tally.worst_gap_ratio = tally.worst_gap_ratio.min(g);
    }
    Ok(tally)
}
