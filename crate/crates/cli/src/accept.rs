//! The acceptance suite: ten numbered criteria, each producing a verdict.
//! Criteria 6 to 8 share one blow-up simulation.

use std::f64::consts::PI;
use std::fmt;
use std::time::Instant;

use serde::Serialize;

use prandtl_core::grid::{Field, Grid};
use prandtl_core::modulation::{
    decompose, modulation_residuals, phi_beta, shape_q, track, vector_a, weight_w, weight_w_ds, ModulationResidual,
    ModulationState, ParabolicFrame, TrackOptions,
};
use prandtl_core::nonlocal::{compact_decay, direct_solve, green_solution_with, kernel, kernel_ode_check};
use prandtl_core::profiles::{
    build_profile, fit_asymptotics, g1_deriv, g1_exact, profile_residual, support_half_width,
};
use prandtl_core::quadrature::integrate_adaptive;
use prandtl_core::solver::{
    compact_regularity_probe, fit_blowup, rescaled_snapshot, run_until_blowup, BlowupFit, ProbeWindow,
    RegularityReport, RunOutcome, SolverConfig,
};
use prandtl_core::spectral::{
    eigen_residuals, hermite, hermite_norm_sq, norm_sq_rho, random_inequality_trials, sample_hermite,
};
use prandtl_core::{par, Execution};

#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub seconds: f64,
    /// Wall-clock budget in seconds, when the criterion has one.
    pub budget: Option<f64>,
    pub detail: String,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        let budget = self.budget.map_or(String::new(), |b| format!(" / {b} s"));
        write!(f, "[{tag}] {:>2} {:<28} {:>8.2} s{budget}  {}", self.id, self.name, self.seconds, self.detail)
    }
}

type Check = Result<(bool, String), String>;

fn judge(id: u8, name: &'static str, budget: Option<f64>, body: impl FnOnce() -> Check) -> Verdict {
    let start = Instant::now();
    let outcome = body();
    let seconds = start.elapsed().as_secs_f64();
    let within = budget.map_or(true, |b| seconds <= b);
    let (passed, mut detail) = match outcome {
        Ok((ok, detail)) => (ok && within, detail),
        Err(e) => (false, format!("error: {e}")),
    };
    if !within {
        detail.push_str(&format!("; over the {} s budget", budget.unwrap_or_default()));
    }
    Verdict { id, name, passed, seconds, budget, detail }
}

fn s<E: fmt::Display>(e: E) -> String {
    e.to_string()
}

pub fn profile_exactness() -> Verdict {
    judge(1, "profile exactness", Some(1.0), || {
        let table = build_profile(1, 4097, 1e-12).map_err(s)?;
        let mut worst = 0.0_f64;
        for (&z, &g) in table.z_samples.iter().zip(&table.g_samples) {
            worst = worst.max((g - g1_exact(z)).abs());
        }
        for j in 0..=20000 {
            let z = -PI + 2.0 * PI * j as f64 / 20000.0;
            worst = worst.max((table.eval(z) - g1_exact(z)).abs());
        }
        Ok((worst <= 1e-8, format!("sup |G - cos^2(Z/2)| = {worst:.2e}")))
    })
}

/// `∫₀^∞ ξ^{−(1−1/(2k))}/(1+ξ) dξ`, through `ξ = u^{2k}` and `u ↦ 1/u` on the
/// tail.
fn support_oracle(k: u32) -> prandtl_core::Result<f64> {
    let m = 2.0 * k as f64;
    let head = integrate_adaptive(|u| m / (1.0 + u.powf(m)), 0.0, 1.0, 1e-15)?;
    let tail = integrate_adaptive(|v| m * v.powf(m - 2.0) / (1.0 + v.powf(m)), 0.0, 1.0, 1e-15)?;
    Ok(head + tail)
}

pub fn support_constants() -> Verdict {
    judge(2, "support constants", Some(1.0), || {
        let mut worst = 0.0_f64;
        for k in 1..=6 {
            let a = support_half_width(k).map_err(s)?;
            let oracle = support_oracle(k).map_err(s)?;
            worst = worst.max((a - oracle).abs() / oracle);
        }
        let a1 = support_half_width(1).map_err(s)?;
        Ok((worst <= 1e-10 && a1 == PI, format!("max rel err {worst:.2e} (k = 1..6), a_1 == pi: {}", a1 == PI)))
    })
}

pub fn profile_asymptotics() -> Verdict {
    judge(3, "profile asymptotics", Some(5.0), || {
        let mut ok = true;
        let mut parts = Vec::new();
        for k in [2, 3] {
            let table = build_profile(k, 1025, 1e-10).map_err(s)?;
            let fit = fit_asymptotics(&table).map_err(s)?;
            ok &= fit.center_exponent_err <= 0.01 && fit.center_coeff_err <= 0.02 && fit.edge_exponent_err <= 0.01;
            parts.push(format!(
                "k={k}: center exp {:.4} coeff {:.3e} edge exp {:.4}",
                fit.center_exponent, fit.center_coeff, fit.edge_exponent
            ));
        }
        Ok((ok, parts.join("; ")))
    })
}

pub fn profile_equation() -> Verdict {
    judge(4, "profile equation residual", Some(5.0), || {
        let mut worst = 0.0_f64;
        for k in 1..=3 {
            let table = build_profile(k, 4097, 1e-12).map_err(s)?;
            worst = worst.max(profile_residual(&table).map_err(s)?);
        }
        Ok((worst <= 1e-6, format!("max residual {worst:.2e} (k = 1, 2, 3)")))
    })
}

pub fn spectrum() -> Verdict {
    judge(5, "spectrum", Some(5.0), || {
        let rows = eigen_residuals(6, 12.0, 0.002).map_err(s)?;
        let worst = rows.iter().fold(0.0_f64, |m, r| m.max(r.residual));
        let grid = Grid::uniform(-12.0, 12.0, 4801).map_err(s)?;
        let mut norm_err = 0.0_f64;
        for (i, expected) in [1.0, 2.0, 8.0].into_iter().enumerate() {
            let h = sample_hermite(i, &grid).map_err(s)?;
            norm_err = norm_err.max((norm_sq_rho(&h).map_err(s)? - expected).abs());
        }
        Ok((
            worst <= 1e-4 && norm_err <= 1e-8,
            format!("max eigen-residual {worst:.2e} (i = 0..6), norm error {norm_err:.2e}"),
        ))
    })
}

/// One blow-up run and everything derived from it.
#[derive(Debug, Clone)]
pub struct SimulationBundle {
    pub config: SolverConfig,
    pub outcome: RunOutcome,
    pub fit: Result<BlowupFit, String>,
    pub probe: Result<RegularityReport, String>,
    pub states: Result<Vec<ModulationState>, String>,
    pub residuals: Vec<ModulationResidual>,
    pub run_seconds: f64,
    pub track_seconds: f64,
}

impl SimulationBundle {
    pub fn run(config: SolverConfig) -> Result<Self, String> {
        let start = Instant::now();
        let outcome = run_until_blowup(&config).map_err(s)?;
        let run_seconds = start.elapsed().as_secs_f64();
        let fit = fit_blowup(&outcome.series).map_err(s);
        let probe = compact_regularity_probe(&outcome.snapshots, ProbeWindow::default()).map_err(s);
        let start = Instant::now();
        let states = track(&outcome.snapshots, &TrackOptions::default()).map_err(s);
        let track_seconds = start.elapsed().as_secs_f64();
        let residuals = states.as_ref().map(|st| modulation_residuals(st)).unwrap_or_default();
        Ok(SimulationBundle { config, outcome, fit, probe, states, residuals, run_seconds, track_seconds })
    }

    pub fn reference() -> Result<Self, String> {
        Self::run(SolverConfig::default())
    }
}

pub fn blowup_rates(sim: &Result<SimulationBundle, String>) -> Verdict {
    judge(6, "blow-up rates", None, || {
        let sim = sim.as_ref().map_err(Clone::clone)?;
        let fit = sim.fit.as_ref().map_err(Clone::clone)?;
        let last = sim.outcome.snapshots.last().ok_or("no snapshots")?;
        let dev = rescaled_snapshot(&last.field, 2001).map_err(s)?.deviation_from_g1(0.9 * PI);
        let ok = sim.outcome.blew_up
            && (fit.amp_exponent + 1.0).abs() <= 0.05
            && fit.r2_amp >= 0.999
            && (fit.peak_exponent + 0.5).abs() <= 0.05
            && fit.r2_peak >= 0.99
            && dev <= 0.05;
        Ok((
            ok,
            format!(
                "amp exp {:.5} (R2 {:.6}), peak exp {:.5} (R2 {:.6}), profile dev {dev:.2e}, T {:.6}, run {:.1} s",
                fit.amp_exponent, fit.r2_amp, fit.peak_exponent, fit.r2_peak, fit.t_est, sim.run_seconds
            ),
        ))
    })
}

pub fn quadratic_law(sim: &Result<SimulationBundle, String>) -> Verdict {
    judge(7, "final-profile quadratic law", None, || {
        let sim = sim.as_ref().map_err(Clone::clone)?;
        let probe = sim.probe.as_ref().map_err(Clone::clone)?;
        let states = sim.states.as_ref().map_err(Clone::clone)?;
        let mu = states.last().ok_or("no modulation states")?.mu;
        let rel = (probe.mu_proxy - mu).abs() / mu;
        Ok((
            (probe.loglog_exponent - 2.0).abs() <= 0.1 && rel <= 0.1,
            format!("exponent {:.5}, mu proxy {:.5} vs mu {mu:.5} (rel {rel:.2e})", probe.loglog_exponent, probe.mu_proxy),
        ))
    })
}

/// `λ²G_1((Y − Ỹ0)/(λ²μ)) + amp·h_i(Y − Ỹ0)` on a uniform `Y` grid.
pub fn planted_frame(lambda: f64, mu: f64, shift: f64, mode: usize, amp: f64) -> prandtl_core::Result<ParabolicFrame> {
    let grid = Grid::uniform(-12.0, 12.0, 2401)?;
    let l2 = lambda * lambda;
    let f = Field::from_fn(&grid, |y| {
        let x = y - shift;
        l2 * g1_exact(x / (l2 * mu)) + amp * hermite(mode, x).unwrap_or(f64::NAN)
    })?;
    Ok(ParabolicFrame::from_field(&f))
}

fn thirds_ratio(res: &[ModulationResidual]) -> Option<(f64, f64)> {
    let n = res.len() / 3;
    if n == 0 {
        return None;
    }
    let mean = |r: &[ModulationResidual]| r.iter().map(|x| x.r_mu.abs()).sum::<f64>() / r.len() as f64;
    Some((mean(&res[..n]), mean(&res[res.len() - n..])))
}

/// Relative spread `(max − min)/max` of `λe^{−s/2}` over the last third.
pub fn lambda_spread(states: &[ModulationState]) -> f64 {
    let tail = &states[states.len() - states.len() / 3..];
    let v: Vec<f64> = tail.iter().map(|st| st.lambda * (-0.5 * st.s).exp()).collect();
    let hi = v.iter().cloned().fold(f64::MIN, f64::max);
    let lo = v.iter().cloned().fold(f64::MAX, f64::min);
    (hi - lo) / hi
}

pub fn modulation_laws(sim: &Result<SimulationBundle, String>) -> Verdict {
    judge(8, "modulation laws", None, || {
        let planted = (1.0 + 1e-3, 1.2, 0.05);
        let frame = planted_frame(planted.0, planted.1, planted.2, 3, 1e-4).map_err(s)?;
        let d = decompose(&frame, (1.0, 1.0, 0.0), Default::default()).map_err(s)?;
        let param_err = (d.lambda - planted.0).abs().max((d.mu - planted.1).abs()).max((d.shift - planted.2).abs());
        let orth = d.orthogonality.iter().fold(0.0_f64, |m, x| m.max(x.abs()));

        let sim = sim.as_ref().map_err(Clone::clone)?;
        let states = sim.states.as_ref().map_err(Clone::clone)?;
        let (first, last) = thirds_ratio(&sim.residuals).ok_or("too few modulation states")?;
        let spread = lambda_spread(states);
        let track_residual = states.iter().fold(0.0_f64, |m, st| m.max(st.newton_residual));
        let ok = param_err <= 1e-8
            && orth <= 1e-10
            && track_residual <= 1e-10
            && first >= 3.0 * last
            && spread <= 0.05
            && sim.track_seconds <= 60.0;
        Ok((
            ok,
            format!(
                "planted err {param_err:.1e}, orth {orth:.1e}; |r_mu| {first:.2e} -> {last:.2e} (x{:.1}), \
                 lambda e^(-s/2) spread {spread:.2e}, track {:.1} s",
                first / last,
                sim.track_seconds
            ),
        ))
    })
}

/// The three data of the oracle comparison.
pub fn nonlocal_data() -> [(&'static str, fn(f64) -> f64); 3] {
    [
        ("one", |_| 1.0),
        ("cos", |x: f64| x.cos()),
        ("bump", |x: f64| (1.0 + x * x) * (-x).exp()),
    ]
}

pub fn nonlocal_oracle(exec: Execution) -> Verdict {
    judge(9, "nonlocal oracle equivalence", Some(30.0), || {
        let grid = Grid::uniform(0.0, 5.0, 2001).map_err(s)?;
        let mut worst = 0.0_f64;
        for (_, f) in nonlocal_data() {
            let u0 = Field::from_fn(&grid, f).map_err(s)?;
            let green = green_solution_with(&u0, 1.0, &grid, exec).map_err(s)?;
            let direct = direct_solve(&u0, 1.0, 1e-3).map_err(s)?;
            let diff = green.values().iter().zip(direct.values()).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
            worst = worst.max(diff / green.max_abs());
        }
        let mut ode = 0.0_f64;
        for j in 1..=200 {
            let y = 0.05 * j as f64;
            ode = ode.max(kernel_ode_check(y) / kernel(y).max(1.0));
        }
        let v_grid = Grid::uniform(0.0, 4.0, 801).map_err(s)?;
        let v0 = Field::from_fn(&v_grid, |x| x * x * (-x).exp()).map_err(s)?;
        let times: Vec<f64> = (0..=12).map(|j| 2.0 + 0.25 * j as f64).collect();
        let (_, slope) = compact_decay(&v0, &times, 1.0).map_err(s)?;
        let ok = worst <= 1e-4 && ode <= 1e-12 && (slope + 2.0).abs() <= 0.2;
        Ok((ok, format!("green vs direct {worst:.2e}, kernel ODE {ode:.1e}, decay slope {slope:.4}")))
    })
}

/// Dense-sample invariants of the weight `w`, the field `A` and `φ_β`.
pub fn weight_invariants() -> Result<(bool, String), String> {
    let ss = [std::f64::consts::E, 5.0, 20.0, 100.0];
    let mut jump = 0.0_f64;
    let mut ds_max = f64::MIN;
    let mut ratio = (f64::MAX, f64::MIN);
    let mut a_ok = true;
    let mut ag = 0.0_f64;
    let mut q_ok = true;
    for &sv in &ss {
        let inner = weight_w(sv, PI - 1e-7).map_err(s)?;
        let outer = weight_w(sv, PI + 1e-7).map_err(s)?;
        jump = jump.max((inner - outer).abs());
        for j in 1..4000 {
            let z = PI * j as f64 / 4000.0;
            ds_max = ds_max.max(weight_w_ds(sv, z).map_err(s)?);
            if (0.01..=0.99 * PI).contains(&z) {
                let r = weight_w(sv, z).map_err(s)? * z.powi(7) * sv.powf(shape_q(z));
                ratio = (ratio.0.min(r), ratio.1.max(r));
            }
        }
    }
    let mut prev_q = 0.0;
    for j in 0..=8000 {
        let z = -PI + 2.0 * PI * j as f64 / 8000.0;
        let a = vector_a(z).abs();
        a_ok &= a <= z.abs() + 1e-15 && a >= z.abs() / PI - 1e-15;
        ag = ag.max((vector_a(z) * g1_deriv(z)).abs());
        if z > 0.0 {
            let q = shape_q(z);
            q_ok &= q > prev_q;
            prev_q = q;
        }
    }
    let (phi, _) = phi_beta(0.5, -1.0).map_err(s)?;
    let ok = jump <= 1e-12 && ds_max <= 0.0 && ratio.0 > 0.0 && ratio.1 < f64::INFINITY && a_ok && ag <= 1.0 && q_ok;
    Ok((
        ok && phi.is_finite(),
        format!(
            "w jump at pi {jump:.1e}, max d_s w {ds_max:.1e}, w|Z|^7 s^q in [{:.3}, {:.3}], |A| bounds {a_ok}, sup|A G1'| {ag:.3}",
            ratio.0, ratio.1
        ),
    ))
}

pub fn property_suites(seed: u64, exec: Execution) -> Verdict {
    judge(10, "property suites", Some(30.0), || {
        let tally = random_inequality_trials(100, seed, exec).map_err(s)?;
        let (w_ok, w_detail) = weight_invariants()?;
        let ok = tally.poincare_pass == tally.trials && tally.gap_pass == tally.trials && w_ok;
        Ok((
            ok,
            format!(
                "Poincare {}/{} (worst ratio {:.3}), gap {}/{} (worst ratio {:.3}); {w_detail}",
                tally.poincare_pass,
                tally.trials,
                tally.worst_poincare_ratio,
                tally.gap_pass,
                tally.trials,
                tally.worst_gap_ratio
            ),
        ))
    })
}

/// Every criterion, the independent ones run concurrently when `exec`
/// allows, sorted by number.
pub fn run_all(seed: u64, exec: Execution) -> Vec<Verdict> {
    let mut out: Vec<Verdict> = par::map_tasks(exec, 8, |task| match task {
        0 => vec![profile_exactness()],
        1 => vec![support_constants()],
        2 => vec![profile_asymptotics()],
        3 => vec![profile_equation()],
        4 => vec![spectrum()],
        5 => vec![nonlocal_oracle(exec)],
        6 => vec![property_suites(seed, exec)],
        _ => {
            let sim = SimulationBundle::reference();
            vec![blowup_rates(&sim), quadratic_law(&sim), modulation_laws(&sim)]
        }
    })
    .into_iter()
    .flatten()
    .collect();
    out.sort_by_key(|v| v.id);
    out
}

/// Quadrature and exact values of `‖h_i‖²_ρ = 2^i i!`.
pub fn hermite_norms(grid: &Grid, count: usize) -> Result<Vec<(f64, f64)>, String> {
    (0..count)
        .map(|i| {
            let h = sample_hermite(i, grid).map_err(s)?;
            Ok((norm_sq_rho(&h).map_err(s)?, hermite_norm_sq(i)))
        })
        .collect()
}
