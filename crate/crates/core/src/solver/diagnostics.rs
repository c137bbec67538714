use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{param, Error, Result};
use crate::fit::{linear_fit, power_law_fit};
use crate::grid::{CubicSpline, Field, Grid, MonotoneCubic};

use super::{refined_peak, SeriesRecord, Snapshot};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlowupFit {
    pub t_est: f64,
    pub amp_exponent: f64,
    pub peak_exponent: f64,
    pub r2_amp: f64,
    pub r2_peak: f64,
    /// R² of the linear fit of `1/peak` against `t`.
    pub r2_inverse: f64,
    pub fit_samples: usize,
}

/// Fit `T`, the amplitude exponent and the peak-trajectory exponent on the
/// last decade of peak growth.
pub fn fit_blowup(series: &[SeriesRecord]) -> Result<BlowupFit> {
    if series.len() < 3 {
        return Err(Error::Fit("series too short".into()));
    }
    if series.iter().any(|r| !(r.peak_value > 0.0)) {
        return Err(Error::Fit("non-positive peak values".into()));
    }
    let last = series[series.len() - 1].peak_value;
    let first = series.iter().map(|r| r.peak_value).fold(f64::INFINITY, f64::min);
    if last / first < 100.0 {
        return Err(Error::Fit(format!(
            "series spans only {:.2} decades of peak growth",
            (last / first).log10()
        )));
    }
    let start = series.iter().rposition(|r| r.peak_value < last / 10.0).map_or(0, |i| i + 1);
    let window = &series[start..];
    let t: Vec<f64> = window.iter().map(|r| r.t).collect();
    let inv: Vec<f64> = window.iter().map(|r| 1.0 / r.peak_value).collect();
    let lin = linear_fit(&t, &inv)?;
    if !(lin.slope < 0.0) {
        return Err(Error::Fit("1/peak does not decrease".into()));
    }
    let t_est = -lin.intercept / lin.slope;
    let kept: Vec<&SeriesRecord> = window.iter().filter(|r| t_est - r.t > 0.0).collect();
    let tau: Vec<f64> = kept.iter().map(|r| t_est - r.t).collect();
    let amp = power_law_fit(&tau, &kept.iter().map(|r| r.peak_value).collect::<Vec<_>>())?;
    let loc = power_law_fit(&tau, &kept.iter().map(|r| r.peak_location).collect::<Vec<_>>())?;
    Ok(BlowupFit {
        t_est,
        amp_exponent: amp.slope,
        peak_exponent: loc.slope,
        r2_amp: amp.r2,
        r2_peak: loc.r2,
        r2_inverse: lin.r2,
        fit_samples: kept.len(),
    })
}

/// Left and right crossings of `level` around the maximum, by linear
/// interpolation between samples.
pub fn locate_half_maximum(field: &Field, level: f64) -> Result<(f64, f64)> {
    let v = field.values();
    let x = field.nodes();
    let i = field.argmax();
    let mut l = i;
    while l > 0 && v[l] >= level {
        l -= 1;
    }
    let mut r = i;
    while r < v.len() - 1 && v[r] >= level {
        r += 1;
    }
    if v[l] >= level || v[r] >= level {
        return Err(Error::Frame("level set touches the domain boundary".into()));
    }
    let cross = |a: usize, b: usize| x[a] + (level - v[a]) * (x[b] - x[a]) / (v[b] - v[a]);
    Ok((cross(l, l + 1), cross(r - 1, r)))
}

/// A snapshot seen in the profile frame `F = ξ/λ²`, `Z = (y − y*)/(λμ)`.
#[derive(Debug, Clone)]
pub struct RescaledProfile {
    pub lambda: f64,
    pub mu: f64,
    pub y_star: f64,
    pub profile: Field,
}

impl RescaledProfile {
    /// `sup |F − cos²(Z/2)|` on `|Z| ≤ window`.
    pub fn deviation_from_g1(&self, window: f64) -> f64 {
        self.profile
            .nodes()
            .iter()
            .zip(self.profile.values())
            .filter(|(z, _)| z.abs() <= window)
            .fold(0.0_f64, |m, (&z, &f)| m.max((f - crate::profiles::g1_exact(z)).abs()))
    }
}

/// Rescale with `λ = √peak` and `μ` from the half-width at half-maximum
/// (`G_1 = 1/2` at `Z = ±π/2`), sampled on `n` uniform points of `[−π, π]`.
pub fn rescaled_snapshot(field: &Field, n: usize) -> Result<RescaledProfile> {
    let (peak, y_star) = refined_peak(field);
    if !(peak > 0.0) {
        return Err(Error::Frame("no positive peak".into()));
    }
    let lambda = peak.sqrt();
    let (yl, yr) = locate_half_maximum(field, 0.5 * peak)?;
    let mu = (yr - yl) / (lambda * PI);
    let width = lambda * mu * PI;
    if y_star < 0.5 * width {
        return Err(Error::Frame(format!("peak at {y_star} too close to the origin for width {width}")));
    }
    if y_star + width > field.grid().end() {
        return Err(Error::Frame("profile frame exceeds the domain".into()));
    }
    let mc = MonotoneCubic::new(field);
    let grid = Grid::uniform(-PI, PI, n)?;
    let values = grid
        .nodes()
        .iter()
        .map(|&z| {
            let y = y_star + lambda * mu * z;
            if y <= 0.0 {
                Ok(0.0)
            } else {
                Ok(mc.eval(y)? / peak)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RescaledProfile { lambda, mu, y_star, profile: Field::new(grid, values)? })
}

/// Windows of the regularity probe. The quadratic fit uses
/// `y ∈ [fit_lo, fit_hi] · λμ` of the last snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeWindow {
    pub y_window: f64,
    pub fit_lo: f64,
    pub fit_hi: f64,
    pub samples: usize,
}

impl Default for ProbeWindow {
    fn default() -> Self {
        ProbeWindow { y_window: 0.5, fit_lo: 0.05, fit_hi: 0.3, samples: 200 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RegularityReport {
    pub sup_xi: f64,
    pub sup_dxi: f64,
    /// `W^{1,∞}` norm on the window at the last snapshot over its value at
    /// the start of the final decade of peak growth.
    pub final_decade_growth: f64,
    pub fit_range: (f64, f64),
    pub quad_coeff: f64,
    pub loglog_exponent: f64,
    pub loglog_r2: f64,
    pub mu_proxy: f64,
}

fn w1_norm(spline: &CubicSpline, y_window: f64, samples: usize) -> Result<(f64, f64)> {
    let mut sup = 0.0_f64;
    let mut dsup = 0.0_f64;
    for j in 0..=samples {
        let y = y_window * j as f64 / samples as f64;
        sup = sup.max(spline.eval(y)?.abs());
        dsup = dsup.max(spline.deriv(y)?.abs());
    }
    Ok((sup, dsup))
}

pub fn compact_regularity_probe(snapshots: &[Snapshot], window: ProbeWindow) -> Result<RegularityReport> {
    if snapshots.len() < 2 {
        return param("need at least two snapshots");
    }
    let mut sup_xi = 0.0_f64;
    let mut sup_dxi = 0.0_f64;
    let mut norms = Vec::with_capacity(snapshots.len());
    for s in snapshots {
        let spline = CubicSpline::new(&s.field)?;
        let (a, b) = w1_norm(&spline, window.y_window, window.samples)?;
        sup_xi = sup_xi.max(a);
        sup_dxi = sup_dxi.max(b);
        norms.push((s.field.max_abs(), a.max(b)));
    }
    let last_peak = norms[norms.len() - 1].0;
    let start = norms.iter().rposition(|(p, _)| *p < last_peak / 10.0).map_or(0, |i| i + 1);
    let final_decade_growth = norms[norms.len() - 1].1 / norms[start].1;

    let last = &snapshots[snapshots.len() - 1].field;
    let (peak, _) = refined_peak(last);
    let (yl, yr) = locate_half_maximum(last, 0.5 * peak)?;
    let lambda_mu = (yr - yl) / PI;
    let (lo, hi) = (window.fit_lo * lambda_mu, window.fit_hi * lambda_mu);
    let spline = CubicSpline::new(last)?;
    let ys: Vec<f64> = (0..=window.samples)
        .map(|j| lo * (hi / lo).powf(j as f64 / window.samples as f64))
        .collect();
    let xs = ys.iter().map(|&y| spline.eval(y)).collect::<Result<Vec<_>>>()?;
    let num: f64 = ys.iter().zip(&xs).map(|(y, x)| x * y * y).sum();
    let den: f64 = ys.iter().map(|y| y.powi(4)).sum();
    let quad_coeff = num / den;
    let fit = power_law_fit(&ys, &xs)?;
    Ok(RegularityReport {
        sup_xi,
        sup_dxi,
        final_decade_growth,
        fit_range: (lo, hi),
        quad_coeff,
        loglog_exponent: fit.slope,
        loglog_r2: fit.r2,
        mu_proxy: 1.0 / (2.0 * quad_coeff.sqrt()),
    })
}
