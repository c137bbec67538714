//! Time integration of the reduced Prandtl equation up to numerical blow-up.

mod diagnostics;
mod step;

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{param, Error, Result};
use crate::grid::{build_grid, remesh, trapezoid, Field, Grid, RemeshParams, Stencils};
use crate::par::{map_tasks, Execution};

pub use diagnostics::{
    compact_regularity_probe, fit_blowup, locate_half_maximum, rescaled_snapshot, BlowupFit, ProbeWindow,
    RegularityReport, RescaledProfile,
};
pub use step::{step, DiffusionScheme, Physics, StepOptions, Stepper, TransportScheme};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub t: f64,
    pub dt: f64,
    pub field: Field,
    pub step_count: usize,
    /// Largest sample.
    pub peak_value: f64,
    /// Vertex of the parabola through the discrete argmax and its
    /// neighbours.
    pub peak_location: f64,
}

impl SolverState {
    pub fn new(field: Field, t: f64) -> Self {
        let (peak_value, peak_location) = discrete_peak(&field);
        SolverState { t, dt: 0.0, field, step_count: 0, peak_value, peak_location }
    }
}

fn parabola_vertex(x: [f64; 3], y: [f64; 3]) -> Option<(f64, f64)> {
    // Newton form through the three points
    let d1 = (y[1] - y[0]) / (x[1] - x[0]);
    let d2 = (y[2] - y[1]) / (x[2] - x[1]);
    let c2 = (d2 - d1) / (x[2] - x[0]);
    if !(c2 < 0.0) {
        return None;
    }
    // p(z) = y0 + d1 (z − x0) + c2 (z − x0)(z − x1)
    let z = 0.5 * (x[0] + x[1]) - d1 / (2.0 * c2);
    let value = y[0] + d1 * (z - x[0]) + c2 * (z - x[0]) * (z - x[1]);
    Some((z, value))
}

fn discrete_peak(field: &Field) -> (f64, f64) {
    let i = field.argmax();
    let v = field.values();
    let x = field.nodes();
    let loc = if i == 0 || i == v.len() - 1 {
        x[i]
    } else {
        match parabola_vertex([x[i - 1], x[i], x[i + 1]], [v[i - 1], v[i], v[i + 1]]) {
            Some((z, _)) => z.clamp(x[i - 1], x[i + 1]),
            None => x[i],
        }
    };
    (v[i], loc)
}

/// Peak value and location refined by the parabola through the argmax.
pub fn refined_peak(field: &Field) -> (f64, f64) {
    let i = field.argmax();
    let v = field.values();
    let x = field.nodes();
    if i == 0 || i == v.len() - 1 {
        return (v[i], x[i]);
    }
    match parabola_vertex([x[i - 1], x[i], x[i + 1]], [v[i - 1], v[i], v[i + 1]]) {
        Some((z, p)) if z >= x[i - 1] && z <= x[i + 1] => (p.max(v[i]), z),
        _ => (v[i], x[i]),
    }
}

/// `λ0² cos²((y − λ0π)/(2λ0))` on `[0, 2λ0π]` plus an optional perturbation
/// sampled on the same grid; the value at `y = 0` is forced to 0.
pub fn initial_datum(lambda0: f64, grid: &Grid, tilde: Option<&Field>) -> Result<Field> {
    if !(lambda0 > 0.0) {
        return param(format!("lambda0 must be positive, got {lambda0}"));
    }
    if grid.start() != 0.0 {
        return param("grid must start at y = 0");
    }
    if grid.end() < 3.0 * lambda0 * PI * (1.0 - 1e-12) {
        return param(format!("grid ends at {} but must cover [0, 3 lambda0 pi]", grid.end()));
    }
    if let Some(t) = tilde {
        if t.grid() != grid {
            return param("perturbation lives on a different grid");
        }
    }
    let support = 2.0 * lambda0 * PI;
    let values = grid
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            let bump = if y <= support {
                let c = ((y - lambda0 * PI) / (2.0 * lambda0)).cos();
                lambda0 * lambda0 * c * c
            } else {
                0.0
            };
            if i == 0 {
                0.0
            } else {
                bump + tilde.map_or(0.0, |t| t.values()[i])
            }
        })
        .collect();
    Field::new(grid.clone(), values)
}

/// Small random smooth bump: a Gaussian of width `λ0` at a random point of
/// the initial support times a random low-frequency modulation, with peak
/// `amplitude · λ0²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Perturbation {
    pub seed: u64,
    pub amplitude: f64,
}

pub fn perturbation_field(lambda0: f64, p: &Perturbation, grid: &Grid) -> Result<Field> {
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let support = 2.0 * lambda0 * PI;
    let center = rng.gen_range(0.25..0.75) * support;
    let phase = rng.gen_range(0.0..2.0 * PI);
    let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    let amp = sign * p.amplitude * lambda0 * lambda0;
    Field::from_fn(grid, |y| {
        let z = (y - center) / lambda0;
        amp * (-z * z).exp() * (0.5 + 0.5 * (z + phase).cos())
    })
}

/// Domain growth and remeshing policy. The initial grid covers
/// `[0, initial_extent · λ0π]` and clusters nodes at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridPolicy {
    pub points: usize,
    pub stretch: f64,
    pub initial_extent: f64,
    /// Remesh when the peak passes this fraction of `y_max`.
    pub peak_fraction: f64,
    /// Remesh when `|ξ|` exceeds `watch_threshold` beyond this fraction of
    /// `y_max`.
    pub watch_fraction: f64,
    pub watch_threshold: f64,
    /// Largest admissible |ξ| at the right boundary when remeshing.
    pub truncation_threshold: f64,
    pub growth: f64,
}

impl Default for GridPolicy {
    fn default() -> Self {
        GridPolicy {
            points: 3001,
            stretch: 1.003,
            initial_extent: 400.0,
            peak_fraction: 0.6,
            watch_fraction: 0.85,
            watch_threshold: 1e-8,
            truncation_threshold: 1e-6,
            growth: 2.0,
        }
    }
}

/// When to keep a snapshot: every `every_steps` steps if set, otherwise
/// whenever `ln(peak)` grew by `log_peak_increment` since the last one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SnapshotCadence {
    pub every_steps: Option<usize>,
    pub log_peak_increment: f64,
}

impl Default for SnapshotCadence {
    fn default() -> Self {
        SnapshotCadence { every_steps: None, log_peak_increment: 0.05 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverConfig {
    pub lambda0: f64,
    /// Multiplies the initial bump.
    pub amplitude: f64,
    pub perturbation: Option<Perturbation>,
    pub cfl: f64,
    pub max_dt: f64,
    pub blowup_threshold: f64,
    pub max_steps: usize,
    pub scheme: TransportScheme,
    pub diffusion: DiffusionScheme,
    pub physics: Physics,
    pub grid: GridPolicy,
    pub snapshots: SnapshotCadence,
    pub exec: Execution,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            lambda0: 4.0,
            amplitude: 1.0,
            perturbation: None,
            cfl: 0.2,
            max_dt: 1e-2,
            blowup_threshold: 1e5,
            max_steps: 2_000_000,
            scheme: TransportScheme::Upwind3,
            diffusion: DiffusionScheme::Central4,
            physics: Physics::default(),
            grid: GridPolicy::default(),
            snapshots: SnapshotCadence::default(),
            exec: Execution::default(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda0 >= 2.0) {
            return param(format!("lambda0 must be >= 2, got {}", self.lambda0));
        }
        if !(self.blowup_threshold >= 1e4) {
            return param(format!("blow-up threshold must be >= 1e4, got {}", self.blowup_threshold));
        }
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            return param(format!("cfl must lie in (0, 1), got {}", self.cfl));
        }
        if !(self.max_dt > 0.0) {
            return param("max_dt must be positive");
        }
        if !(self.amplitude > 0.0) {
            return param("amplitude must be positive");
        }
        let g = &self.grid;
        if g.points < Grid::MIN_NODES {
            return param(format!("grid needs at least {} points", Grid::MIN_NODES));
        }
        if !(g.initial_extent >= 3.0) {
            return param("initial extent must be >= 3 (in units of lambda0 pi)");
        }
        if !(g.growth > 1.0) {
            return param("domain growth factor must exceed 1");
        }
        if !(g.peak_fraction > 0.0 && g.peak_fraction < 1.0 && g.watch_fraction > 0.0 && g.watch_fraction < 1.0) {
            return param("remesh fractions must lie in (0, 1)");
        }
        if let Some(0) = self.snapshots.every_steps {
            return param("snapshot interval must be positive");
        }
        Ok(())
    }

    pub fn step_options(&self) -> StepOptions {
        StepOptions {
            cfl: self.cfl,
            max_dt: self.max_dt,
            scheme: self.scheme,
            diffusion: self.diffusion,
            physics: self.physics,
            max_retries: 10,
            exec: self.exec,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesRecord {
    pub t: f64,
    pub dt: f64,
    pub peak_value: f64,
    pub peak_location: f64,
    pub mass: f64,
    pub boundary_slope: f64,
}

impl SeriesRecord {
    pub fn of(state: &SolverState) -> Self {
        let f = &state.field;
        let st = Stencils::new(f.grid());
        SeriesRecord {
            t: state.t,
            dt: state.dt,
            peak_value: state.peak_value,
            peak_location: state.peak_location,
            mass: trapezoid(f),
            boundary_slope: st.first[0].apply(f.values()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub step: usize,
    pub field: Field,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub series: Vec<SeriesRecord>,
    pub snapshots: Vec<Snapshot>,
    pub final_state: SolverState,
    pub blew_up: bool,
    pub remeshes: usize,
}

fn needs_remesh(state: &SolverState, g: &GridPolicy) -> bool {
    let f = &state.field;
    let y_max = f.grid().end();
    if state.peak_location > g.peak_fraction * y_max {
        return true;
    }
    let from = g.watch_fraction * y_max;
    f.nodes().iter().zip(f.values()).any(|(y, v)| *y >= from && v.abs() > g.watch_threshold)
}

/// Integrate until the peak reaches the blow-up threshold or the step budget
/// runs out (reported through `blew_up = false`).
pub fn run_until_blowup(config: &SolverConfig) -> Result<RunOutcome> {
    config.validate()?;
    let g = config.grid;
    let lambda0 = config.lambda0;
    let grid = build_grid(g.initial_extent * lambda0 * PI, g.points, g.stretch, 0.0)?;
    let tilde = match &config.perturbation {
        Some(p) => Some(perturbation_field(lambda0, p, &grid)?),
        None => None,
    };
    let datum = initial_datum(lambda0, &grid, tilde.as_ref())?;
    let datum = datum.map(|_, v| v * config.amplitude)?;
    let mut state = SolverState::new(datum, 0.0);
    let mut stepper = Stepper::new(&grid, config.step_options());

    let mut series = vec![SeriesRecord::of(&state)];
    let mut snapshots = vec![Snapshot { t: 0.0, step: 0, field: state.field.clone() }];
    let mut last_log_peak = state.peak_value.ln();
    let mut remeshes = 0;
    let mut blew_up = false;
    loop {
        if state.peak_value >= config.blowup_threshold {
            blew_up = true;
            break;
        }
        if state.step_count >= config.max_steps {
            break;
        }
        if needs_remesh(&state, &g) {
            if remeshes >= 64 {
                return Err(Error::Numerical("domain kept growing without bound".into()));
            }
            let y_max = state.field.grid().end() * g.growth;
            let params = RemeshParams { n: g.points, stretch: g.stretch, threshold: g.truncation_threshold };
            let field = remesh(&state.field, 0.0, y_max, params).map_err(|e| Error::AtTime { t: state.t, source: Box::new(e) })?;
            let mut next = SolverState::new(field, state.t);
            next.dt = state.dt;
            next.step_count = state.step_count;
            state = next;
            stepper = Stepper::new(state.field.grid(), config.step_options());
            remeshes += 1;
            continue;
        }
        state = stepper.step(&state)?;
        series.push(SeriesRecord::of(&state));
        let due = match config.snapshots.every_steps {
            Some(k) => state.step_count % k == 0,
            None => {
                state.peak_value > 0.0 && (state.peak_value.ln() - last_log_peak).abs() >= config.snapshots.log_peak_increment
            }
        };
        if due {
            last_log_peak = state.peak_value.ln();
            snapshots.push(Snapshot { t: state.t, step: state.step_count, field: state.field.clone() });
        }
    }
    if snapshots.last().map(|s| s.step) != Some(state.step_count) {
        snapshots.push(Snapshot { t: state.t, step: state.step_count, field: state.field.clone() });
    }
    Ok(RunOutcome { series, snapshots, final_state: state, blew_up, remeshes })
}

/// Independent runs, concurrently when `exec` allows.
pub fn run_sweep(configs: &[SolverConfig], exec: Execution) -> Vec<Result<RunOutcome>> {
    map_tasks(exec, configs.len(), |i| run_until_blowup(&configs[i]))
}
