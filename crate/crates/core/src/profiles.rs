//! Self-similar profiles `G_k` of the inviscid equation
//!
//! ```text
//! F − F² + (−(1 − 1/(2k)) Z + ∫₀^Z F) F' = 0
//! ```
//!
//! built through the parametrisation `u ≥ 0`:
//! `Z(u) = ∫₀^u 2k/(1+v^{2k}) dv`, `G(u) = 1/(1+u^{2k})`. The profile is
//! even, decreasing on `(0, a_k)` and vanishes beyond the support half-width
//! `a_k = π / sin(π/(2k))`.

use std::collections::HashMap;
use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{param, Error, Result};
use crate::fit::power_law_fit;
use crate::grid::{cumulative_integral, cumulative_integral_from, Field, Grid, Stencils};
use crate::par::{map_indexed, Execution};
use crate::quadrature::integrate_adaptive;

/// `cos²(Z/2)` on `[−π, π]`, zero outside.
pub fn g1_exact(z: f64) -> f64 {
    if z.abs() <= PI {
        let c = (0.5 * z).cos();
        c * c
    } else {
        0.0
    }
}

/// `1 − G_1(Z)` without cancellation near the center.
pub fn g1_one_minus(z: f64) -> f64 {
    if z.abs() <= PI {
        let s = (0.5 * z).sin();
        s * s
    } else {
        1.0
    }
}

pub fn g1_deriv(z: f64) -> f64 {
    if z.abs() <= PI {
        -0.5 * z.sin()
    } else {
        0.0
    }
}

pub fn support_half_width(k: u32) -> Result<f64> {
    if k == 0 {
        return param("profile index k must be >= 1");
    }
    if k == 1 {
        return Ok(PI);
    }
    Ok(PI / (PI / (2.0 * k as f64)).sin())
}

fn two_k(k: u32) -> f64 {
    2.0 * k as f64
}

/// `Z(u)` for `0 ≤ u ≤ 1`.
fn z_of_u(k: u32, u: f64) -> Result<f64> {
    let m = two_k(k);
    integrate_adaptive(|v| m / (1.0 + v.powf(m)), 0.0, u, 1e-16)
}

/// `a_k − Z(1/w)` for `0 ≤ w ≤ 1`, integrated directly.
fn gap_of_w(k: u32, w: f64) -> Result<f64> {
    let m = two_k(k);
    let scale = w.powf(m - 1.0).max(1e-300);
    integrate_adaptive(|v| m * v.powf(m - 2.0) / (1.0 + v.powf(m)), 0.0, w, 1e-16 * scale)
}

// Newton with a bisection safeguard for an increasing function on [lo, hi].
fn solve_increasing(
    f: impl Fn(f64) -> Result<f64>,
    df: impl Fn(f64) -> f64,
    target: f64,
    mut lo: f64,
    mut hi: f64,
    guess: f64,
) -> Result<f64> {
    let mut x = guess.clamp(lo, hi);
    for _ in 0..200 {
        let r = f(x)? - target;
        if r == 0.0 || r.abs() <= 4.0 * f64::EPSILON * target.abs() {
            return Ok(x);
        }
        if r < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let d = df(x);
        let mut next = if d > 0.0 { x - r / d } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 2.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE) || hi - lo <= f64::EPSILON * hi {
            return Ok(next);
        }
        x = next;
    }
    Err(Error::Numerical("profile parameter inversion did not converge".into()))
}

/// One exactly computed point of the profile curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfilePoint {
    pub u: f64,
    pub z: f64,
    /// `a_k − Z`
    pub gap: f64,
    pub g: f64,
    /// `1 − G`
    pub one_minus_g: f64,
    /// `dG/dZ`
    pub dg: f64,
}

/// Exact evaluation of the curve as a function of `Z`, solving for the
/// parameter `u`.
#[derive(Debug, Clone, Copy)]
pub struct ProfileCurve {
    pub k: u32,
    pub a_k: f64,
    z_at_one: f64,
}

impl ProfileCurve {
    pub fn new(k: u32) -> Result<Self> {
        let a_k = support_half_width(k)?;
        Ok(ProfileCurve { k, a_k, z_at_one: z_of_u(k, 1.0)? })
    }

    fn point_from_u(&self, u: f64, z: f64, gap: f64) -> ProfilePoint {
        let m = two_k(self.k);
        if u <= 1.0 {
            let p = u.powf(m);
            ProfilePoint {
                u,
                z,
                gap,
                g: 1.0 / (1.0 + p),
                one_minus_g: p / (1.0 + p),
                dg: -u.powf(m - 1.0) / (1.0 + p),
            }
        } else {
            let w = 1.0 / u;
            let p = w.powf(m);
            ProfilePoint {
                u,
                z,
                gap,
                g: p / (1.0 + p),
                one_minus_g: 1.0 / (1.0 + p),
                dg: -w / (1.0 + p),
            }
        }
    }

    /// Point on the curve at parameter `u`.
    pub fn at_parameter(&self, u: f64) -> Result<ProfilePoint> {
        if !(u >= 0.0) || !u.is_finite() {
            return param(format!("profile parameter must be finite and >= 0, got {u}"));
        }
        if u <= 1.0 {
            let z = z_of_u(self.k, u)?;
            Ok(self.point_from_u(u, z, self.a_k - z))
        } else {
            let gap = gap_of_w(self.k, 1.0 / u)?;
            Ok(self.point_from_u(u, self.a_k - gap, gap))
        }
    }

    /// Point with `0 ≤ Z < a_k`.
    pub fn at_z(&self, z: f64) -> Result<ProfilePoint> {
        if !(z >= 0.0 && z < self.a_k) {
            return param(format!("Z = {z} outside [0, {})", self.a_k));
        }
        if z == 0.0 {
            return Ok(self.point_from_u(0.0, 0.0, self.a_k));
        }
        let m = two_k(self.k);
        if z <= self.z_at_one {
            let u = solve_increasing(
                |u| z_of_u(self.k, u),
                |u| m / (1.0 + u.powf(m)),
                z,
                0.0,
                1.0,
                z / m,
            )?;
            Ok(self.point_from_u(u, z, self.a_k - z))
        } else {
            self.at_gap(self.a_k - z)
        }
    }

    /// Point at distance `gap` from the support edge, `0 < gap ≤ a_k − Z(1)`
    /// (falls back to [`ProfileCurve::at_z`] for larger gaps).
    pub fn at_gap(&self, gap: f64) -> Result<ProfilePoint> {
        if !(gap > 0.0) {
            return param(format!("edge gap must be positive, got {gap}"));
        }
        if gap > self.a_k - self.z_at_one {
            return self.at_z(self.a_k - gap);
        }
        let m = two_k(self.k);
        let guess = ((m - 1.0) * gap / m).powf(1.0 / (m - 1.0)).min(1.0);
        let w = solve_increasing(
            |w| gap_of_w(self.k, w),
            |w| m * w.powf(m - 2.0) / (1.0 + w.powf(m)),
            gap,
            0.0,
            1.0,
            guess,
        )?;
        Ok(self.point_from_u(1.0 / w, self.a_k - gap, gap))
    }
}

/// Tabulated profile on a uniform `Z` grid from 0 to `a_k − tol`.
#[derive(Debug, Clone, Serialize)]
pub struct ProfileTable {
    pub k: u32,
    pub a_k: f64,
    pub tol: f64,
    pub u_samples: Vec<f64>,
    pub z_samples: Vec<f64>,
    pub g_samples: Vec<f64>,
    pub dg_samples: Vec<f64>,
    pub center_coeff: f64,
    pub edge_coeff: f64,
    pub edge_exponent: f64,
    #[serde(skip)]
    curve: Option<ProfileCurve>,
}

pub fn build_profile(k: u32, n: usize, tol: f64) -> Result<ProfileTable> {
    build_profile_with(k, n, tol, Execution::default())
}

pub fn build_profile_with(k: u32, n: usize, tol: f64, exec: Execution) -> Result<ProfileTable> {
    if n < 64 {
        return param(format!("profile table needs n >= 64, got {n}"));
    }
    if !(tol > 0.0) {
        return param(format!("tolerance must be positive, got {tol}"));
    }
    let curve = ProfileCurve::new(k)?;
    let a_k = curve.a_k;
    if tol >= a_k {
        return param(format!("tolerance {tol} exceeds the support half-width {a_k}"));
    }
    let z_end = a_k - tol;
    let h = z_end / (n - 1) as f64;
    let points = map_indexed(exec, n, |j| {
        if j == n - 1 {
            curve.at_gap(tol)
        } else {
            curve.at_z(j as f64 * h)
        }
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let m = two_k(k);
    Ok(ProfileTable {
        k,
        a_k,
        tol,
        u_samples: points.iter().map(|p| p.u).collect(),
        z_samples: points.iter().map(|p| p.z).collect(),
        g_samples: points.iter().map(|p| p.g).collect(),
        dg_samples: points.iter().map(|p| p.dg).collect(),
        center_coeff: m.powf(-m),
        edge_coeff: (1.0 - 1.0 / m).powf(m / (m - 1.0)),
        edge_exponent: m / (m - 1.0),
        curve: Some(curve),
    })
}

impl ProfileTable {
    pub fn len(&self) -> usize {
        self.z_samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z_samples.is_empty()
    }

    pub fn curve(&self) -> ProfileCurve {
        match self.curve {
            Some(c) => c,
            None => ProfileCurve::new(self.k).expect("table built for a valid k"),
        }
    }

    fn z_end(&self) -> f64 {
        self.z_samples[self.len() - 1]
    }

    fn locate(&self, z: f64) -> (usize, f64, f64) {
        let n = self.len();
        let h = self.z_end() / (n - 1) as f64;
        let i = ((z / h) as usize).min(n - 2);
        (i, (z - self.z_samples[i]) / h, h)
    }

    /// Even extension of `G_k`, zero outside `[−a_k, a_k]`; the tail beyond
    /// the table uses the edge asymptotics.
    pub fn eval(&self, z: f64) -> f64 {
        let a = z.abs();
        if a >= self.a_k {
            return 0.0;
        }
        if a >= self.z_end() {
            return self.edge_coeff * (self.a_k - a).powf(self.edge_exponent);
        }
        let (i, t, h) = self.locate(a);
        let (y0, y1) = (self.g_samples[i], self.g_samples[i + 1]);
        let (d0, d1) = (self.dg_samples[i], self.dg_samples[i + 1]);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + t) * h * d0 + (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * h * d1
    }

    pub fn eval_deriv(&self, z: f64) -> f64 {
        let a = z.abs();
        let sign = if z < 0.0 { -1.0 } else { 1.0 };
        if a >= self.a_k {
            return 0.0;
        }
        if a >= self.z_end() {
            let p = self.edge_exponent;
            return -sign * p * self.edge_coeff * (self.a_k - a).powf(p - 1.0);
        }
        let (i, t, h) = self.locate(a);
        let (y0, y1) = (self.g_samples[i], self.g_samples[i + 1]);
        let (d0, d1) = (self.dg_samples[i], self.dg_samples[i + 1]);
        let t2 = t * t;
        let d = ((6.0 * t2 - 6.0 * t) * (y0 - y1)) / h + (3.0 * t2 - 4.0 * t + 1.0) * d0 + (3.0 * t2 - 2.0 * t) * d1;
        sign * d
    }

    /// The tabulated half-profile as a field on `[0, a_k − tol]`.
    pub fn as_field(&self) -> Result<Field> {
        Field::new(Grid::new(self.z_samples.clone())?, self.g_samples.clone())
    }
}

/// Power-law fits of the exact profile near the center and the edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticFit {
    pub k: u32,
    /// Slope of `log(1 − G)` against `log Z` on `Z ∈ [1e−3, 1e−2]`.
    pub center_exponent: f64,
    pub center_coeff: f64,
    /// Slope of `log G` against `log(a_k − Z)` on `a_k − Z ∈ [1e−6, 1e−3]`.
    pub edge_exponent: f64,
    pub edge_coeff: f64,
    pub center_exponent_err: f64,
    pub center_coeff_err: f64,
    pub edge_exponent_err: f64,
    pub edge_coeff_err: f64,
}

pub fn fit_asymptotics(table: &ProfileTable) -> Result<AsymptoticFit> {
    let curve = table.curve();
    let m = two_k(table.k);
    let samples = 41;
    let geom = |lo: f64, hi: f64, j: usize| lo * (hi / lo).powf(j as f64 / (samples - 1) as f64);
    let mut zs = Vec::with_capacity(samples);
    let mut om = Vec::with_capacity(samples);
    let mut gaps = Vec::with_capacity(samples);
    let mut gs = Vec::with_capacity(samples);
    for j in 0..samples {
        let p = curve.at_z(geom(1e-3, 1e-2, j))?;
        zs.push(p.z);
        om.push(p.one_minus_g);
        let q = curve.at_gap(geom(1e-6, 1e-3, j))?;
        gaps.push(q.gap);
        gs.push(q.g);
    }
    let c = power_law_fit(&zs, &om)?;
    let e = power_law_fit(&gaps, &gs)?;
    let rel = |x: f64, r: f64| (x - r).abs() / r.abs();
    let (center_coeff, edge_coeff) = (c.intercept.exp(), e.intercept.exp());
    Ok(AsymptoticFit {
        k: table.k,
        center_exponent: c.slope,
        center_coeff,
        edge_exponent: e.slope,
        edge_coeff,
        center_exponent_err: rel(c.slope, m),
        center_coeff_err: rel(center_coeff, table.center_coeff),
        edge_exponent_err: rel(e.slope, table.edge_exponent),
        edge_coeff_err: rel(edge_coeff, table.edge_coeff),
    })
}

/// Competing closed forms `(π/(2k sin(π/(2k))), 1, (2k−1)^{1+1/(2k−1)})`
/// for the support, center and edge constants, reported next to the
/// derived ones. They disagree with `G_1`.
pub fn stated_constants(k: u32) -> Result<(f64, f64, f64)> {
    if k == 0 {
        return param("profile index k must be >= 1");
    }
    let m = two_k(k);
    Ok((PI / (m * (PI / m).sin()), 1.0, (m - 1.0).powf(1.0 + 1.0 / (m - 1.0))))
}

/// Trapezoid integral of `G_k` over `[0, a_k]`, including the edge tail.
pub fn profile_mass(table: &ProfileTable) -> f64 {
    let z = &table.z_samples;
    let g = &table.g_samples;
    let body: f64 = (1..z.len()).map(|i| 0.5 * (z[i] - z[i - 1]) * (g[i] + g[i - 1])).sum();
    // ∫ over the last tol of c·gap^p
    let p = table.edge_exponent;
    body + table.edge_coeff * table.tol.powf(p + 1.0) / (p + 1.0)
}

/// Sup of the profile-equation residual of a sampled field on
/// `|Z| ≤ window`, with the primitive taken from `Z = 0`.
pub fn equation_residual(field: &Field, k: u32, window: f64) -> Result<f64> {
    if k == 0 {
        return param("profile index k must be >= 1");
    }
    let beta = 1.0 - 1.0 / two_k(k);
    let st = Stencils::new(field.grid());
    let df = st.apply(1, field.values());
    let prim = if field.grid().contains(0.0) {
        cumulative_integral_from(field, 0.0)?
    } else {
        cumulative_integral(field)
    };
    let mut worst: f64 = 0.0;
    for (i, (&z, &f)) in field.nodes().iter().zip(field.values()).enumerate() {
        if z.abs() > window {
            continue;
        }
        let r = f - f * f + (-beta * z + prim.values()[i]) * df[i];
        worst = worst.max(r.abs());
    }
    Ok(worst)
}

/// Residual of the tabulated profile on `|Z| ≤ 0.95 a_k`.
pub fn profile_residual(table: &ProfileTable) -> Result<f64> {
    let window = 0.95 * table.a_k;
    let keep = table.z_samples.iter().take_while(|&&z| z <= window * (1.0 + 1e-12) + 1e-300).count();
    let keep = (keep + 1).min(table.len());
    let grid = Grid::new(table.z_samples[..keep].to_vec())?;
    let field = Field::new(grid, table.g_samples[..keep].to_vec())?;
    equation_residual(&field, table.k, window)
}

/// One piece of a glued profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Segment {
    /// Constant 0 or 1 over `length`.
    Plateau { value: f64, length: f64 },
    /// `G_k(·/μ)`: a full bump when entered at 0, its descending half when
    /// entered at 1.
    Bump { k: u32, mu: f64 },
    /// Ascending half of `G_k(·/μ)`, from 0 to 1.
    Rise { k: u32, mu: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GlueSpec {
    pub segments: Vec<Segment>,
}

#[derive(Debug, Clone, Copy)]
enum Piece {
    Const(f64),
    Scaled { k: u32, mu: f64, center: f64 },
}

/// Sample a glued solution of the profile equation; the first segment starts
/// at the first grid node and the last value continues to the right.
pub fn glue(spec: &GlueSpec, grid: &Grid) -> Result<Field> {
    if spec.segments.is_empty() {
        return Err(Error::Spec("no segments".into()));
    }
    let mut tables: HashMap<u32, ProfileTable> = HashMap::new();
    let mut pieces: Vec<(f64, f64, Piece)> = Vec::new();
    let mut pos = grid.start();
    let mut current: Option<f64> = None;
    for (idx, seg) in spec.segments.iter().enumerate() {
        match *seg {
            Segment::Plateau { value, length } => {
                if value != 0.0 && value != 1.0 {
                    return Err(Error::Spec(format!("plateau value must be 0 or 1, got {value}")));
                }
                if !(length >= 0.0) {
                    return Err(Error::Spec(format!("negative plateau length {length}")));
                }
                if let Some(c) = current {
                    if c != value {
                        return Err(Error::Spec(format!(
                            "junction mismatch before segment {idx}: {c} then plateau {value}"
                        )));
                    }
                }
                pieces.push((pos, pos + length, Piece::Const(value)));
                pos += length;
                current = Some(value);
            }
            Segment::Bump { k, mu } | Segment::Rise { k, mu } => {
                if !(mu > 0.0) {
                    return Err(Error::Spec(format!("bump scale must be positive, got {mu}")));
                }
                if let std::collections::hash_map::Entry::Vacant(e) = tables.entry(k) {
                    e.insert(build_profile(k, 4097, 1e-12)?);
                }
                let half = tables[&k].a_k * mu;
                let rising = matches!(seg, Segment::Rise { .. });
                let entry = current.unwrap_or(0.0);
                if rising {
                    if entry != 0.0 {
                        return Err(Error::Spec(format!("rise at segment {idx} must start from 0")));
                    }
                    pieces.push((pos, pos + half, Piece::Scaled { k, mu, center: pos + half }));
                    pos += half;
                    current = Some(1.0);
                } else if entry == 0.0 {
                    pieces.push((pos, pos + 2.0 * half, Piece::Scaled { k, mu, center: pos + half }));
                    pos += 2.0 * half;
                    current = Some(0.0);
                } else {
                    pieces.push((pos, pos + half, Piece::Scaled { k, mu, center: pos }));
                    pos += half;
                    current = Some(0.0);
                }
            }
        }
    }
    let tail = current.unwrap_or(0.0);
    let values = grid
        .nodes()
        .iter()
        .map(|&y| {
            let piece = pieces.iter().find(|(a, b, _)| y >= *a && y <= *b);
            match piece {
                Some((_, _, Piece::Const(v))) => *v,
                Some((_, _, Piece::Scaled { k, mu, center })) => tables[k].eval((y - center) / mu),
                None => tail,
            }
        })
        .collect();
    Field::new(grid.clone(), values)
}

/// Sup over grid nodes selected by `inside` of `ψ_t − ψ² + (∫ψ)ψ_y`, the
/// primitive starting at the first node, `ψ_t` by a centered difference
/// with step `dt`.
pub fn inviscid_residual(
    psi: impl Fn(f64, f64) -> f64,
    t: f64,
    dt: f64,
    grid: &Grid,
    inside: impl Fn(f64) -> bool,
) -> Result<f64> {
    let now = Field::from_fn(grid, |y| psi(t, y))?;
    let st = Stencils::new(grid);
    let dy = st.apply(1, now.values());
    let prim = cumulative_integral(&now);
    let mut worst: f64 = 0.0;
    for (i, &y) in grid.nodes().iter().enumerate() {
        if !inside(y) {
            continue;
        }
        let dpsi_dt = (psi(t + dt, y) - psi(t - dt, y)) / (2.0 * dt);
        let v = now.values()[i];
        let r = dpsi_dt - v * v + prim.values()[i] * dy[i];
        worst = worst.max(r.abs());
    }
    Ok(worst)
}

/// Residual of the backward self-similar inviscid solution
/// `ψ = (T−t)^{-1} G_k((y − y*(t)) (T−t)^{1−1/(2k)} / μ)` with
/// `y*(t) = μ a_k (T−t)^{−(1−1/(2k))} + y0_star`, on the interior
/// `|Z| ≤ 0.95 a_k` of the support. The grid must start left of the support.
pub fn self_similar_residual(
    table: &ProfileTable,
    mu: f64,
    t_blow: f64,
    t: f64,
    y0_star: f64,
    grid: &Grid,
    dt: f64,
) -> Result<f64> {
    if !(t < t_blow) {
        return param(format!("need t < T, got t = {t}, T = {t_blow}"));
    }
    if !(mu > 0.0) {
        return param(format!("mu must be positive, got {mu}"));
    }
    let beta = 1.0 - 1.0 / two_k(table.k);
    let a_k = table.a_k;
    let zeta = |t: f64, y: f64| {
        let tau = t_blow - t;
        let y_star = mu * a_k * tau.powf(-beta) + y0_star;
        (y - y_star) * tau.powf(beta) / mu
    };
    let psi = |t: f64, y: f64| table.eval(zeta(t, y)) / (t_blow - t);
    if grid.start() > y0_star {
        return param("grid must start left of the profile support");
    }
    inviscid_residual(psi, t, dt, grid, |y| zeta(t, y).abs() <= 0.95 * a_k)
}
