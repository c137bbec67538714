//! The subcommands. Each resolves its parameters (flag, then config file,
//! then default), writes its artifacts into `--out-dir` and returns whether
//! its checks passed.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use prandtl_core::grid::{Field, Grid};
use prandtl_core::modulation::{
    frame_residual, modulation_residuals, snapshot_exterior_norms, track, trapped_verdict, ExteriorNorms,
    FrameResidualOptions, ModulationState, Slice, TrackOptions, TrappedParams, TrappedVerdict,
};
use prandtl_core::nonlocal::{
    compact_decay, direct_solve, green_solution_with, kernel, kernel_ode_check, kernel_primitive,
};
use prandtl_core::profiles::{
    build_profile_with, fit_asymptotics, g1_exact, profile_mass, profile_residual, stated_constants, AsymptoticFit,
};
use prandtl_core::solver::{
    compact_regularity_probe, fit_blowup, rescaled_snapshot, run_until_blowup, BlowupFit, Perturbation,
    ProbeWindow, RegularityReport, SnapshotCadence, SolverConfig, Snapshot,
};
use prandtl_core::spectral::{eigen_residuals, random_inequality_trials, EigenRow, InequalityTally};
use prandtl_core::Execution;

use crate::accept::{self, hermite_norms, lambda_spread, nonlocal_data, Verdict};
use crate::config::{ConfigFile, Resolved};
use crate::output::{emit_plot_script, ensure_dir, read_csv, write_csv, write_json, PlotKind, Report, VERSION};
use crate::{AcceptArgs, Cli, CliError, Command, ModulateArgs, NonlocalArgs, ProfileArgs, SimulateArgs, SpectralArgs};

struct Ctx {
    file: ConfigFile,
    exec: Execution,
    resolved: Resolved,
    start: Instant,
}

impl Ctx {
    fn report<T: Serialize>(
        &self,
        dir: &Path,
        name: &str,
        command: &str,
        seed: Option<u64>,
        passed: bool,
        result: T,
    ) -> Result<(), CliError> {
        let report = Report {
            command,
            version: VERSION,
            seed,
            config: &self.resolved.values,
            passed,
            runtime_seconds: self.start.elapsed().as_secs_f64(),
            result,
        };
        write_json(&dir.join(name), &report)
    }
}

pub fn dispatch(cli: &Cli) -> Result<bool, CliError> {
    let file = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let exec = if cli.sequential { Execution::Sequential } else { Execution::Parallel };
    let mut ctx = Ctx { file, exec, resolved: Resolved::default(), start: Instant::now() };
    match &cli.command {
        Command::Profile(a) => profile(&mut ctx, a),
        Command::SpectralCheck(a) => spectral(&mut ctx, a),
        Command::Simulate(a) => simulate(&mut ctx, a),
        Command::Modulate(a) => modulate(&mut ctx, a),
        Command::NonlocalCheck(a) => nonlocal(&mut ctx, a),
        Command::Accept(a) => run_accept(&mut ctx, a),
    }
}

#[derive(Serialize)]
struct ProfileResult {
    k: u32,
    a_k: f64,
    center_coeff: f64,
    edge_coeff: f64,
    edge_exponent: f64,
    /// `(a_k, center, edge)` in the competing closed forms.
    alternative_constants: (f64, f64, f64),
    mass: f64,
    residual: f64,
    fit: AsymptoticFit,
    fit_errors: [f64; 4],
    /// `sup |G − cos²(Z/2)|` over the table, `k = 1` only.
    g1_deviation: Option<f64>,
}

fn profile(ctx: &mut Ctx, a: &ProfileArgs) -> Result<bool, CliError> {
    ctx.file.check_keys(&["k", "points", "tol"])?;
    let r = &mut ctx.resolved;
    let k = r.pick(&ctx.file, "k", a.k, 1)?;
    let points = r.pick(&ctx.file, "points", a.points, 4097)?;
    let tol = r.pick(&ctx.file, "tol", a.tol, 1e-12)?;
    ensure_dir(&a.out_dir)?;
    let table = build_profile_with(k, points, tol, ctx.exec)?;
    let rows = (0..table.len()).map(|i| vec![table.z_samples[i], table.g_samples[i], table.dg_samples[i]]);
    write_csv(&a.out_dir.join("profile.csv"), &["Z", "G", "dG"], rows)?;
    let fit = fit_asymptotics(&table)?;
    let residual = profile_residual(&table)?;
    let g1_deviation = (k == 1).then(|| {
        table.z_samples.iter().zip(&table.g_samples).fold(0.0_f64, |m, (&z, &g)| m.max((g - g1_exact(z)).abs()))
    });
    let passed = fit.center_exponent_err <= 0.01
        && fit.center_coeff_err <= 0.02
        && fit.edge_exponent_err <= 0.01
        && residual <= 1e-6
        && g1_deviation.map_or(true, |d| d <= 1e-8);
    let result = ProfileResult {
        k,
        a_k: table.a_k,
        center_coeff: table.center_coeff,
        edge_coeff: table.edge_coeff,
        edge_exponent: table.edge_exponent,
        alternative_constants: stated_constants(k)?,
        mass: profile_mass(&table),
        residual,
        fit_errors: [fit.center_exponent_err, fit.center_coeff_err, fit.edge_exponent_err, fit.edge_coeff_err],
        fit,
        g1_deviation,
    };
    ctx.report(&a.out_dir, "profile.json", "profile", None, passed, result)?;
    Ok(passed)
}

#[derive(Serialize)]
struct SpectralResult {
    eigen: Vec<EigenRow>,
    /// `(quadrature, exact)` for `‖h_0‖², ‖h_1‖², ‖h_2‖²`.
    norms: Vec<(f64, f64)>,
    inequalities: InequalityTally,
}

fn spectral(ctx: &mut Ctx, a: &SpectralArgs) -> Result<bool, CliError> {
    ctx.file.check_keys(&["max_index", "half_width", "spacing", "trials", "seed"])?;
    let r = &mut ctx.resolved;
    let max_index = r.pick(&ctx.file, "max_index", a.max_index, 6)?;
    let half_width = r.pick(&ctx.file, "half_width", a.half_width, 12.0)?;
    let spacing = r.pick(&ctx.file, "spacing", a.spacing, 0.002)?;
    let trials = r.pick(&ctx.file, "trials", a.trials, 100)?;
    let seed = r.pick(&ctx.file, "seed", a.seed, 1)?;
    ensure_dir(&a.out_dir)?;
    let eigen = eigen_residuals(max_index, half_width, spacing)?;
    write_csv(
        &a.out_dir.join("eigen.csv"),
        &["index", "eigenvalue", "residual"],
        eigen.iter().map(|e| vec![e.index as f64, e.eigenvalue, e.residual]),
    )?;
    let n = (2.0 * half_width / spacing).round() as usize + 1;
    let grid = Grid::uniform(-half_width, half_width, n)?;
    let norms = hermite_norms(&grid, 3).map_err(CliError::Invalid)?;
    write_csv(
        &a.out_dir.join("norms.csv"),
        &["index", "quadrature", "exact"],
        norms.iter().enumerate().map(|(i, (q, e))| vec![i as f64, *q, *e]),
    )?;
    let inequalities = random_inequality_trials(trials, seed, ctx.exec)?;
    let passed = eigen.iter().all(|e| e.residual <= 1e-4)
        && norms.iter().all(|(q, e)| (q - e).abs() <= 1e-8)
        && inequalities.poincare_pass == trials
        && inequalities.gap_pass == trials;
    ctx.report(&a.out_dir, "spectral.json", "spectral-check", Some(seed), passed, SpectralResult {
        eigen,
        norms,
        inequalities,
    })?;
    Ok(passed)
}

#[derive(Serialize)]
struct SimulateResult {
    blew_up: bool,
    steps: usize,
    remeshes: usize,
    snapshots: usize,
    final_time: f64,
    final_peak: f64,
    fit: Option<BlowupFit>,
    fit_error: Option<String>,
    regularity: Option<RegularityReport>,
    /// `sup |F − cos²(Z/2)|` on `|Z| ≤ 0.9π` for the first rescalable and
    /// the last snapshot.
    profile_deviation: Option<(f64, f64)>,
}

fn write_snapshots(dir: &Path, snapshots: &[Snapshot]) -> Result<(), CliError> {
    ensure_dir(dir)?;
    write_csv(
        &dir.join("index.csv"),
        &["index", "t", "step"],
        snapshots.iter().enumerate().map(|(i, s)| vec![i as f64, s.t, s.step as f64]),
    )?;
    for (i, s) in snapshots.iter().enumerate() {
        let rows = s.field.nodes().iter().zip(s.field.values()).map(|(&y, &x)| vec![y, x]);
        write_csv(&dir.join(snapshot_name(i)), &["y", "xi"], rows)?;
    }
    Ok(())
}

fn snapshot_name(i: usize) -> String {
    format!("snap_{i:05}.csv")
}

/// Snapshots written by `simulate`.
pub fn read_snapshots(dir: &Path) -> Result<Vec<Snapshot>, CliError> {
    let (_, index) = read_csv(&dir.join("index.csv"))?;
    index
        .iter()
        .map(|row| {
            if row.len() != 3 {
                return Err(CliError::Invalid("index.csv needs columns index, t, step".into()));
            }
            let (_, rows) = read_csv(&dir.join(snapshot_name(row[0] as usize)))?;
            let grid = Grid::new(rows.iter().map(|r| r[0]).collect())?;
            let field = Field::new(grid, rows.iter().map(|r| r[1]).collect())?;
            Ok(Snapshot { t: row[1], step: row[2] as usize, field })
        })
        .collect()
}

fn simulate(ctx: &mut Ctx, a: &SimulateArgs) -> Result<bool, CliError> {
    ctx.file.check_keys(&[
        "lambda0",
        "cfl",
        "threshold",
        "snapshot_every",
        "max_steps",
        "points",
        "extent",
        "stretch",
        "perturbation",
        "seed",
    ])?;
    let d = SolverConfig::default();
    let r = &mut ctx.resolved;
    let mut cfg = SolverConfig {
        lambda0: r.pick(&ctx.file, "lambda0", a.lambda0, d.lambda0)?,
        cfl: r.pick(&ctx.file, "cfl", a.cfl, d.cfl)?,
        blowup_threshold: r.pick(&ctx.file, "threshold", a.threshold, d.blowup_threshold)?,
        max_steps: r.pick(&ctx.file, "max_steps", a.max_steps, d.max_steps)?,
        exec: ctx.exec,
        ..d
    };
    cfg.grid.points = r.pick(&ctx.file, "points", a.points, cfg.grid.points)?;
    cfg.grid.initial_extent = r.pick(&ctx.file, "extent", a.extent, cfg.grid.initial_extent)?;
    cfg.grid.stretch = r.pick(&ctx.file, "stretch", a.stretch, cfg.grid.stretch)?;
    if let Some(k) = r.pick_opt(&ctx.file, "snapshot_every", a.snapshot_every)? {
        cfg.snapshots = SnapshotCadence { every_steps: Some(k), ..cfg.snapshots };
    }
    let amplitude = r.pick(&ctx.file, "perturbation", a.perturbation, 0.0)?;
    let seed = r.pick(&ctx.file, "seed", a.seed, 0)?;
    if amplitude != 0.0 {
        cfg.perturbation = Some(Perturbation { seed, amplitude });
    }
    cfg.validate()?;
    ensure_dir(&a.out_dir)?;
    let out = run_until_blowup(&cfg)?;

    let series_path = a.out_dir.join("series.csv");
    write_csv(
        &series_path,
        &["t", "dt", "peak_value", "peak_location", "mass", "boundary_slope"],
        out.series.iter().map(|s| vec![s.t, s.dt, s.peak_value, s.peak_location, s.mass, s.boundary_slope]),
    )?;
    write_snapshots(&a.out_dir.join("snapshots"), &out.snapshots)?;

    let mut rescaled_rows = Vec::new();
    let mut deviations = Vec::new();
    for (i, s) in out.snapshots.iter().enumerate() {
        if let Ok(p) = rescaled_snapshot(&s.field, 401) {
            deviations.push(p.deviation_from_g1(0.9 * PI));
            for (&z, &f) in p.profile.nodes().iter().zip(p.profile.values()) {
                rescaled_rows.push(vec![i as f64, s.t, z, f]);
            }
        }
    }
    let rescaled_path = a.out_dir.join("rescaled.csv");
    write_csv(&rescaled_path, &["index", "t", "Z", "F"], rescaled_rows)?;

    let fit = fit_blowup(&out.series);
    let regularity = compact_regularity_probe(&out.snapshots, ProbeWindow::default()).ok();
    if let Ok(f) = &fit {
        emit_plot_script(&[&series_path], PlotKind::Rates, Some(f.t_est))?;
    }
    emit_plot_script(&[&rescaled_path], PlotKind::Profile, None)?;
    let profile_deviation = match (deviations.first(), deviations.last()) {
        (Some(&f), Some(&l)) => Some((f, l)),
        _ => None,
    };
    let passed = out.blew_up && fit.is_ok();
    let result = SimulateResult {
        blew_up: out.blew_up,
        steps: out.final_state.step_count,
        remeshes: out.remeshes,
        snapshots: out.snapshots.len(),
        final_time: out.final_state.t,
        final_peak: out.final_state.peak_value,
        fit_error: fit.as_ref().err().map(|e| e.to_string()),
        fit: fit.ok(),
        regularity,
        profile_deviation,
    };
    let seed = cfg.perturbation.map(|p| p.seed);
    ctx.report(&a.out_dir, "fit.json", "simulate", seed, passed, result)?;
    Ok(passed)
}

#[derive(Serialize)]
struct ModulateResult {
    states: usize,
    mu_final: f64,
    lambda_spread_last_third: f64,
    r_mu_first_third: f64,
    r_mu_last_third: f64,
    max_newton_residual: f64,
    max_frame_residual: f64,
}

#[derive(Serialize)]
struct TrappedReport<'a> {
    command: &'a str,
    version: &'a str,
    verdict: &'a TrappedVerdict,
}

fn modulate(ctx: &mut Ctx, a: &ModulateArgs) -> Result<bool, CliError> {
    ctx.file.check_keys(&["snapshots", "trap_k", "trap_m", "trap_nu"])?;
    let d = TrappedParams::default();
    let r = &mut ctx.resolved;
    let dir: PathBuf = r
        .pick_opt(&ctx.file, "snapshots", a.snapshots.as_ref().map(|p| p.display().to_string()))?
        .map(PathBuf::from)
        .ok_or_else(|| CliError::Usage("modulate needs --snapshots <dir> (or `snapshots` in the config)".into()))?;
    let params = TrappedParams {
        k: r.pick(&ctx.file, "trap_k", a.trap_k, d.k)?,
        m: r.pick(&ctx.file, "trap_m", a.trap_m, d.m)?,
        nu: r.pick(&ctx.file, "trap_nu", a.trap_nu, d.nu)?,
    };
    ensure_dir(&a.out_dir)?;
    let snapshots = read_snapshots(&dir)?;
    let states = track(&snapshots, &TrackOptions::default())?;
    let residuals = modulation_residuals(&states);
    let slices = snapshots.iter().map(Slice::of).collect::<Result<Vec<_>, _>>()?;
    let norms = slices
        .iter()
        .zip(&states)
        .map(|(sl, st)| snapshot_exterior_norms(sl, st, params.m))
        .collect::<Result<Vec<Option<ExteriorNorms>>, _>>()?;
    let verdict = trapped_verdict(&states, &norms, params)?;

    let mut frame = 0.0_f64;
    for i in 1..states.len().saturating_sub(1) {
        let fr = frame_residual(
            [&slices[i - 1], &slices[i], &slices[i + 1]],
            [&states[i - 1], &states[i], &states[i + 1]],
            FrameResidualOptions::default(),
        )?;
        frame = frame.max(fr.normalized);
    }

    let nan = f64::NAN;
    let rows = states.iter().enumerate().map(|(i, st)| {
        let (rl, rm) = residuals.iter().find(|r| r.index == i).map_or((nan, nan), |r| (r.r_lambda, r.r_mu));
        let ext = norms[i].map_or([nan; 4], |n| n.as_array());
        vec![st.s, st.t, st.lambda, st.mu, st.a, st.y_star, st.newton_residual, rl, rm, ext[0], ext[1], ext[2], ext[3]]
    });
    write_csv(
        &a.out_dir.join("modulation.csv"),
        &[
            "s",
            "t",
            "lambda",
            "mu",
            "a",
            "y_star",
            "newton_residual",
            "r_lambda",
            "r_mu",
            "ext_norm_1",
            "ext_norm_2",
            "ext_norm_3",
            "ext_norm_4",
        ],
        rows,
    )?;
    write_json(&a.out_dir.join("trapped.json"), &TrappedReport { command: "modulate", version: VERSION, verdict: &verdict })?;

    let third = residuals.len() / 3;
    let mean = |r: &[prandtl_core::modulation::ModulationResidual]| {
        r.iter().map(|x| x.r_mu.abs()).sum::<f64>() / r.len().max(1) as f64
    };
    let (first, last) = (mean(&residuals[..third]), mean(&residuals[residuals.len() - third..]));
    let max_newton = states.iter().fold(0.0_f64, |m, s| m.max(s.newton_residual));
    let spread = if states.len() >= 3 { lambda_spread(&states) } else { nan };
    let passed = max_newton <= 1e-10 && frame <= 0.05;
    let result = ModulateResult {
        states: states.len(),
        mu_final: states.last().map_or(nan, |s: &ModulationState| s.mu),
        lambda_spread_last_third: spread,
        r_mu_first_third: first,
        r_mu_last_third: last,
        max_newton_residual: max_newton,
        max_frame_residual: frame,
    };
    ctx.report(&a.out_dir, "modulation.json", "modulate", None, passed, result)?;
    Ok(passed)
}

#[derive(Serialize)]
struct NonlocalResult {
    /// Relative sup difference of Green and direct solutions per datum.
    comparison: Vec<(String, f64)>,
    max_kernel_ode_residual: f64,
    decay_slope: f64,
}

fn nonlocal(ctx: &mut Ctx, a: &NonlocalArgs) -> Result<bool, CliError> {
    ctx.file.check_keys(&["t", "x_max", "points", "dt", "datum", "compact"])?;
    let r = &mut ctx.resolved;
    let t = r.pick(&ctx.file, "t", a.t, 1.0)?;
    let x_max = r.pick(&ctx.file, "x_max", a.x_max, 5.0)?;
    let points = r.pick(&ctx.file, "points", a.points, 2001)?;
    let dt = r.pick(&ctx.file, "dt", a.dt, 1e-3)?;
    let datum = r.pick(&ctx.file, "datum", a.datum.clone(), "bump".to_string())?;
    let compact = r.pick(&ctx.file, "compact", a.compact, 1.0)?;
    let data = nonlocal_data();
    if !data.iter().any(|(n, _)| *n == datum) {
        return Err(CliError::Invalid(format!("unknown datum {datum}; expected one, cos or bump")));
    }
    ensure_dir(&a.out_dir)?;

    let kernel_path = a.out_dir.join("kernel.csv");
    let mut ode = 0.0_f64;
    let rows: Vec<Vec<f64>> = (0..=400)
        .map(|j| {
            let y = 0.05 * j as f64;
            if y > 0.0 {
                ode = ode.max(kernel_ode_check(y) / kernel(y).max(1.0));
            }
            vec![y, kernel(y), kernel_primitive(1, y)]
        })
        .collect();
    write_csv(&kernel_path, &["y", "k", "k_prim1"], rows)?;
    emit_plot_script(&[&kernel_path], PlotKind::Kernel, None)?;

    let grid = Grid::uniform(0.0, x_max, points)?;
    let mut comparison = Vec::new();
    for (name, f) in data {
        let u0 = Field::from_fn(&grid, f)?;
        let green = green_solution_with(&u0, t, &grid, ctx.exec)?;
        let direct = direct_solve(&u0, t, dt)?;
        let err: Vec<f64> = green.values().iter().zip(direct.values()).map(|(g, d)| (g - d).abs()).collect();
        comparison.push((name.to_string(), err.iter().cloned().fold(0.0, f64::max) / green.max_abs()));
        if name == datum {
            let rows = (0..grid.len())
                .map(|i| vec![grid.nodes()[i], green.values()[i], direct.values()[i], err[i]]);
            write_csv(&a.out_dir.join("comparison.csv"), &["x", "green", "direct", "abs_err"], rows)?;
        }
    }

    let v_grid = Grid::uniform(0.0, 4.0, 801)?;
    let v0 = Field::from_fn(&v_grid, |x| x * x * (-x).exp())?;
    let times: Vec<f64> = (0..=12).map(|j| 2.0 + 0.25 * j as f64).collect();
    let (decay, slope) = compact_decay(&v0, &times, compact)?;
    write_csv(
        &a.out_dir.join("decay.csv"),
        &["t", "sup_compact", "fitted_slope"],
        decay.iter().map(|d| vec![d.t, d.sup_compact, slope]),
    )?;
    let passed = comparison.iter().all(|(_, e)| *e <= 1e-4) && ode <= 1e-12 && (slope + 2.0).abs() <= 0.2;
    let result = NonlocalResult { comparison, max_kernel_ode_residual: ode, decay_slope: slope };
    ctx.report(&a.out_dir, "nonlocal.json", "nonlocal-check", None, passed, result)?;
    Ok(passed)
}

fn run_accept(ctx: &mut Ctx, a: &AcceptArgs) -> Result<bool, CliError> {
    ctx.file.check_keys(&["seed"])?;
    let seed = ctx.resolved.pick(&ctx.file, "seed", a.seed, 1)?;
    let verdicts: Vec<Verdict> = accept::run_all(seed, ctx.exec);
    for v in &verdicts {
        println!("{v}");
    }
    let passed = verdicts.iter().all(|v| v.passed);
    println!("{} of {} criteria passed", verdicts.iter().filter(|v| v.passed).count(), verdicts.len());
    if let Some(dir) = &a.out_dir {
        ensure_dir(dir)?;
        ctx.report(dir, "acceptance.json", "accept", Some(seed), passed, &verdicts)?;
    }
    Ok(passed)
}
