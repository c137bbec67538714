//! One time step of `ξ_t = ξ_yy + ξ² − (∂_y⁻¹ξ) ξ_y`: Strang splitting of a
//! Crank–Nicolson diffusion half step, an SSP-RK3 step of reaction and
//! transport, and a second diffusion half step.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{fd_weights, solve_pentadiagonal, Field, Grid, Stencil, Stencils};
use crate::par::{map_indexed, Execution};

use super::SolverState;

/// Discretisation of the transport term `(∂_y⁻¹ξ) ξ_y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TransportScheme {
    /// First-order upwind by the sign of the velocity.
    Upwind1,
    /// Four-point upwind-biased stencils (third order).
    Upwind3,
}

/// Discretisation of `ξ_yy` in the Crank–Nicolson half steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DiffusionScheme {
    /// Three-point stencil.
    Central2,
    /// Five-point stencil inside, three-point next to the boundaries.
    Central4,
}

/// Which terms of the equation are integrated; everything on by default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Physics {
    pub diffusion: bool,
    pub reaction: bool,
    pub transport: bool,
}

impl Default for Physics {
    fn default() -> Self {
        Physics { diffusion: true, reaction: true, transport: true }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct StepOptions {
    pub cfl: f64,
    pub max_dt: f64,
    pub scheme: TransportScheme,
    pub diffusion: DiffusionScheme,
    pub physics: Physics,
    pub max_retries: usize,
    pub exec: Execution,
}

impl Default for StepOptions {
    fn default() -> Self {
        StepOptions {
            cfl: 0.2,
            max_dt: 1e-2,
            scheme: TransportScheme::Upwind3,
            diffusion: DiffusionScheme::Central4,
            physics: Physics::default(),
            max_retries: 10,
            exec: Execution::default(),
        }
    }
}

fn build(nodes: &[f64], at: usize, start: usize, len: usize) -> Stencil {
    let c = fd_weights(nodes[at], &nodes[start..start + len], 1);
    let mut weights = [0.0; 5];
    weights[..len].copy_from_slice(&c[1]);
    Stencil { start, len, weights }
}

/// Per-grid operators reused across steps.
#[derive(Debug, Clone)]
pub struct Stepper {
    grid: Grid,
    opts: StepOptions,
    // upwind stencils for positive / negative velocity
    plus: Vec<Stencil>,
    minus: Vec<Stencil>,
    // second-derivative rows, columns i−2..=i+2
    lap: Vec<[f64; 5]>,
    // ∫ over cell i of the cubic through nodes prim_start[i]..+4
    prim: Vec<[f64; 4]>,
    prim_start: Vec<usize>,
    local_h: Vec<f64>,
}

// weights of ∫_{x_i}^{x_{i+1}} of the cubic interpolant through four nodes
fn cell_weights(x: &[f64], i: usize) -> (usize, [f64; 4]) {
    let n = x.len();
    let start = i.saturating_sub(1).min(n - 4);
    let (a, b) = (x[i], x[i + 1]);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let g = half / 3f64.sqrt();
    let mut w = [0.0; 4];
    for z in [mid - g, mid + g] {
        let c = fd_weights(z, &x[start..start + 4], 0);
        for k in 0..4 {
            w[k] += half * c[0][k];
        }
    }
    (start, w)
}

impl Stepper {
    pub fn new(grid: &Grid, opts: StepOptions) -> Self {
        let x = grid.nodes();
        let n = x.len();
        let central = Stencils::new(grid);
        let mut plus = Vec::with_capacity(n);
        let mut minus = Vec::with_capacity(n);
        for i in 0..n {
            if i == 0 || i == n - 1 {
                plus.push(central.first[i]);
                minus.push(central.first[i]);
                continue;
            }
            match opts.scheme {
                TransportScheme::Upwind1 => {
                    plus.push(build(x, i, i - 1, 2));
                    minus.push(build(x, i, i, 2));
                }
                TransportScheme::Upwind3 => {
                    plus.push(if i >= 2 { build(x, i, i - 2, 4) } else { central.first[i] });
                    minus.push(if i + 2 < n { build(x, i, i - 1, 4) } else { central.first[i] });
                }
            }
        }
        let mut lap = vec![[0.0; 5]; n];
        for i in 1..n - 1 {
            let wide = opts.diffusion == DiffusionScheme::Central4 && i >= 2 && i + 2 < n;
            if wide {
                let w = fd_weights(x[i], &x[i - 2..=i + 2], 2);
                lap[i].copy_from_slice(&w[2]);
            } else {
                let w = central.second[i].weights;
                lap[i][1..4].copy_from_slice(&w[..3]);
            }
        }
        let h = grid.spacing();
        let local_h = (0..n)
            .map(|i| match i {
                0 => h[0],
                i if i == n - 1 => h[n - 2],
                i => h[i - 1].min(h[i]),
            })
            .collect();
        let (prim_start, prim) = (0..n - 1).map(|i| cell_weights(x, i)).unzip();
        Stepper { grid: grid.clone(), opts, plus, minus, lap, prim, prim_start, local_h }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn options(&self) -> &StepOptions {
        &self.opts
    }

    // ∂_y⁻¹ξ from the wall, fourth order
    fn velocity(&self, v: &[f64]) -> Vec<f64> {
        let mut u = Vec::with_capacity(v.len());
        let mut acc = 0.0;
        u.push(0.0);
        for i in 0..v.len() - 1 {
            let (s, w) = (self.prim_start[i], &self.prim[i]);
            acc += w[0] * v[s] + w[1] * v[s + 1] + w[2] * v[s + 2] + w[3] * v[s + 3];
            u.push(acc);
        }
        u
    }

    /// `dt = cfl · min(1/‖ξ‖_∞, min_i h_i / |∂_y⁻¹ξ|_i)`, capped by `max_dt`.
    pub fn choose_dt(&self, v: &[f64]) -> f64 {
        let p = self.opts.physics;
        let mut limit = f64::INFINITY;
        if p.reaction {
            let m = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
            if m > 0.0 {
                limit = limit.min(1.0 / m);
            }
        }
        if p.transport {
            let u = self.velocity(v);
            for (i, ui) in u.iter().enumerate() {
                if *ui != 0.0 {
                    limit = limit.min(self.local_h[i] / ui.abs());
                }
            }
        }
        (self.opts.cfl * limit).min(self.opts.max_dt)
    }

    // reaction and transport right side; zero at the boundary nodes
    fn explicit_rhs(&self, v: &[f64]) -> Vec<f64> {
        let p = self.opts.physics;
        let n = v.len();
        let u = if p.transport { self.velocity(v) } else { Vec::new() };
        map_indexed(self.opts.exec, n, |i| {
            if i == 0 || i == n - 1 {
                return 0.0;
            }
            let mut r = 0.0;
            if p.reaction {
                r += v[i] * v[i];
            }
            if p.transport && u[i] != 0.0 {
                let st = if u[i] > 0.0 { &self.plus[i] } else { &self.minus[i] };
                r -= u[i] * st.apply(v);
            }
            r
        })
    }

    fn diffuse(&self, v: &[f64], tau: f64) -> Result<Vec<f64>> {
        let n = v.len();
        let half = 0.5 * tau;
        let mut rows = vec![[0.0, 0.0, 1.0, 0.0, 0.0]; n];
        let mut rhs = vec![0.0; n];
        for i in 1..n - 1 {
            let l = &self.lap[i];
            let mut dv = 0.0;
            for k in 0..5 {
                rows[i][k] = -half * l[k];
                if l[k] != 0.0 {
                    dv += l[k] * v[i + k - 2];
                }
            }
            rows[i][2] += 1.0;
            rhs[i] = v[i] + half * dv;
        }
        solve_pentadiagonal(&rows, &rhs)
    }

    fn rk3(&self, v: &[f64], dt: f64) -> Vec<f64> {
        let l0 = self.explicit_rhs(v);
        let v1: Vec<f64> = v.iter().zip(&l0).map(|(a, b)| a + dt * b).collect();
        let l1 = self.explicit_rhs(&v1);
        let v2: Vec<f64> = (0..v.len()).map(|i| 0.75 * v[i] + 0.25 * (v1[i] + dt * l1[i])).collect();
        let l2 = self.explicit_rhs(&v2);
        (0..v.len()).map(|i| v[i] / 3.0 + 2.0 / 3.0 * (v2[i] + dt * l2[i])).collect()
    }

    /// Advance by exactly `dt`; the result may contain non-finite values.
    pub fn advance(&self, v: &[f64], dt: f64) -> Result<Vec<f64>> {
        let p = self.opts.physics;
        let mut w = v.to_vec();
        if p.diffusion {
            w = self.diffuse(&w, 0.5 * dt)?;
        }
        if p.reaction || p.transport {
            w = self.rk3(&w, dt);
        }
        if p.diffusion {
            w = self.diffuse(&w, 0.5 * dt)?;
        }
        let n = w.len();
        w[0] = 0.0;
        w[n - 1] = 0.0;
        Ok(w)
    }

    /// One step with the CFL-chosen `dt`, halving on non-finite output.
    pub fn step(&self, state: &SolverState) -> Result<SolverState> {
        if state.field.grid() != &self.grid {
            return Err(Error::Parameter("state lives on a different grid than the stepper".into()));
        }
        let v = state.field.values();
        let mut dt = self.choose_dt(v);
        for _ in 0..=self.opts.max_retries {
            let w = self.advance(v, dt)?;
            if w.iter().all(|x| x.is_finite()) {
                let field = Field::new(self.grid.clone(), w)?;
                let mut next = SolverState::new(field, state.t + dt);
                next.dt = dt;
                next.step_count = state.step_count + 1;
                return Ok(next);
            }
            dt *= 0.5;
        }
        Err(Error::Instability { t: state.t, retries: self.opts.max_retries })
    }
}

/// One step of `state` with freshly built operators.
pub fn step(state: &SolverState, opts: &StepOptions) -> Result<SolverState> {
    Stepper::new(state.field.grid(), *opts).step(state)
}
