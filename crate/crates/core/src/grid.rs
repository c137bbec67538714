//! Nonuniform 1D meshes, finite differences, quadrature, interpolation and
//! remeshing.

use std::sync::Arc;

use crate::error::{param, Error, Result};

/// Strictly increasing set of at least [`Grid::MIN_NODES`] finite nodes.
///
/// Cloning is cheap (the nodes are shared).
#[derive(Debug, Clone)]
pub struct Grid {
    nodes: Arc<[f64]>,
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.nodes, &other.nodes) || self.nodes[..] == other.nodes[..]
    }
}

impl Grid {
    pub const MIN_NODES: usize = 8;

    pub fn new(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < Self::MIN_NODES {
            return param(format!(
                "grid needs at least {} nodes, got {}",
                Self::MIN_NODES,
                nodes.len()
            ));
        }
        if let Some(i) = nodes.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { index: i, context: "grid node".into() });
        }
        if let Some(i) = nodes.windows(2).position(|w| w[1] <= w[0]) {
            return param(format!("grid nodes not strictly increasing at index {}", i + 1));
        }
        Ok(Grid { nodes: nodes.into() })
    }

    pub fn uniform(start: f64, end: f64, n: usize) -> Result<Self> {
        if !(end > start) {
            return param(format!("empty interval [{start}, {end}]"));
        }
        let h = (end - start) / (n.max(2) - 1) as f64;
        let mut nodes: Vec<f64> = (0..n).map(|i| start + i as f64 * h).collect();
        if let Some(last) = nodes.last_mut() {
            *last = end;
        }
        Self::new(nodes)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn start(&self) -> f64 {
        self.nodes[0]
    }

    pub fn end(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// Cell widths `h_i = x_{i+1} - x_i`.
    pub fn spacing(&self) -> Vec<f64> {
        self.nodes.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Index `i` of the cell `[x_i, x_{i+1}]` containing `x`, clamped to the
    /// first/last cell.
    pub fn locate(&self, x: f64) -> usize {
        let n = self.nodes.len();
        let p = self.nodes.partition_point(|&v| v <= x);
        p.saturating_sub(1).min(n - 2)
    }

    /// Index of the node nearest to `x`.
    pub fn nearest(&self, x: f64) -> usize {
        let i = self.locate(x);
        if (x - self.nodes[i]).abs() <= (self.nodes[i + 1] - x).abs() {
            i
        } else {
            i + 1
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        let tol = 1e-12 * (self.end() - self.start()).abs().max(1.0);
        x >= self.start() - tol && x <= self.end() + tol
    }
}

/// Samples of a scalar function on a [`Grid`]. Values are always finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return param(format!(
                "field has {} values for {} nodes",
                values.len(),
                grid.len()
            ));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index: i, context: "field value".into() });
        }
        Ok(Field { grid, values })
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().iter().map(|&x| f(x)).collect();
        Self::new(grid.clone(), values)
    }

    pub fn zeros(grid: &Grid) -> Self {
        Field { grid: grid.clone(), values: vec![0.0; grid.len()] }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn nodes(&self) -> &[f64] {
        self.grid.nodes()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.grid.clone(), values)
    }

    pub fn map(&self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = self
            .nodes()
            .iter()
            .zip(&self.values)
            .map(|(&x, &v)| f(x, v))
            .collect();
        self.with_values(values)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = i;
            }
        }
        best
    }
}

/// Finite-difference weights of all derivative orders `0..=m` at `z` for
/// the nodes `x` (Fornberg's algorithm). `c[k][j]` weights node `j` for the
/// `k`-th derivative.
pub fn fd_weights(z: f64, x: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut c = vec![vec![0.0; n]; m + 1];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// A short finite-difference stencil anchored at `start`.
#[derive(Debug, Clone, Copy)]
pub struct Stencil {
    pub start: usize,
    pub len: usize,
    pub weights: [f64; 5],
}

impl Stencil {
    fn build(nodes: &[f64], at: usize, start: usize, len: usize, order: usize) -> Self {
        let c = fd_weights(nodes[at], &nodes[start..start + len], order);
        let mut weights = [0.0; 5];
        weights[..len].copy_from_slice(&c[order]);
        Stencil { start, len, weights }
    }

    #[inline]
    pub fn apply(&self, values: &[f64]) -> f64 {
        let mut acc = 0.0;
        for k in 0..self.len {
            acc += self.weights[k] * values[self.start + k];
        }
        acc
    }
}

/// Precomputed first and second derivative stencils of a grid: three-point
/// central inside, second-order one-sided at the ends.
#[derive(Debug, Clone)]
pub struct Stencils {
    pub first: Vec<Stencil>,
    pub second: Vec<Stencil>,
}

impl Stencils {
    pub fn new(grid: &Grid) -> Self {
        let x = grid.nodes();
        let n = x.len();
        let mut first = Vec::with_capacity(n);
        let mut second = Vec::with_capacity(n);
        for i in 0..n {
            if i == 0 {
                first.push(Stencil::build(x, 0, 0, 3, 1));
                second.push(Stencil::build(x, 0, 0, 4, 2));
            } else if i == n - 1 {
                first.push(Stencil::build(x, i, n - 3, 3, 1));
                second.push(Stencil::build(x, i, n - 4, 4, 2));
            } else {
                first.push(Stencil::build(x, i, i - 1, 3, 1));
                second.push(Stencil::build(x, i, i - 1, 3, 2));
            }
        }
        Stencils { first, second }
    }

    pub fn apply(&self, order: usize, values: &[f64]) -> Vec<f64> {
        let table = if order == 1 { &self.first } else { &self.second };
        table.iter().map(|s| s.apply(values)).collect()
    }
}

/// First or second derivative of a field.
pub fn derivative(field: &Field, order: usize) -> Result<Field> {
    if order != 1 && order != 2 {
        return param(format!("derivative order must be 1 or 2, got {order}"));
    }
    let st = Stencils::new(field.grid());
    field.with_values(st.apply(order, field.values()))
}

/// Trapezoid primitive from the first node; exact for piecewise-linear data.
pub fn cumulative_integral(field: &Field) -> Field {
    let x = field.nodes();
    let v = field.values();
    let mut out = Vec::with_capacity(v.len());
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..v.len() {
        acc += 0.5 * (x[i] - x[i - 1]) * (v[i] + v[i - 1]);
        out.push(acc);
    }
    Field { grid: field.grid.clone(), values: out }
}

/// Trapezoid primitive shifted so that it vanishes at `origin` (which need
/// not be a node).
pub fn cumulative_integral_from(field: &Field, origin: f64) -> Result<Field> {
    if !field.grid().contains(origin) {
        return Err(Error::Range { value: origin, lo: field.grid().start(), hi: field.grid().end() });
    }
    let cum = cumulative_integral(field);
    let x = field.nodes();
    let v = field.values();
    let i = field.grid().locate(origin);
    let h = origin - x[i];
    let slope = (v[i + 1] - v[i]) / (x[i + 1] - x[i]);
    let offset = cum.values[i] + h * (v[i] + 0.5 * slope * h);
    Ok(Field { grid: field.grid.clone(), values: cum.values.iter().map(|c| c - offset).collect() })
}

pub fn trapezoid(field: &Field) -> f64 {
    let x = field.nodes();
    let v = field.values();
    (1..v.len()).map(|i| 0.5 * (x[i] - x[i - 1]) * (v[i] + v[i - 1])).sum()
}

fn hermite_cubic(h: f64, t: f64, y0: f64, y1: f64, d0: f64, d1: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * y0
        + (t3 - 2.0 * t2 + t) * h * d0
        + (-2.0 * t3 + 3.0 * t2) * y1
        + (t3 - t2) * h * d1
}

/// Piecewise cubic Hermite interpolant with fourth-order derivative
/// estimates, limited so that monotone data gives a monotone interpolant.
#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    field: Field,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(field: &Field) -> Self {
        let x = field.nodes();
        let y = field.values();
        let n = x.len();
        let secant: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / (x[i + 1] - x[i])).collect();
        let mut slopes = Vec::with_capacity(n);
        for i in 0..n {
            let start = i.saturating_sub(2).min(n - 5);
            let w = fd_weights(x[i], &x[start..start + 5], 1);
            let mut d: f64 = (0..5).map(|k| w[1][k] * y[start + k]).sum();
            let left = if i > 0 { Some(secant[i - 1]) } else { None };
            let right = if i < n - 1 { Some(secant[i]) } else { None };
            match (left, right) {
                (Some(a), Some(b)) if a * b > 0.0 => {
                    if d * a <= 0.0 {
                        d = 0.0;
                    } else {
                        let cap = 3.0 * a.abs().min(b.abs());
                        d = d.signum() * d.abs().min(cap);
                    }
                }
                (Some(a), Some(b)) if a == 0.0 || b == 0.0 => d = 0.0,
                (Some(a), Some(b)) => {
                    let cap = 3.0 * a.abs().min(b.abs());
                    d = d.signum() * d.abs().min(cap);
                }
                (Some(s), None) | (None, Some(s)) => {
                    if d * s <= 0.0 {
                        d = 0.0;
                    } else {
                        d = d.signum() * d.abs().min(3.0 * s.abs());
                    }
                }
                (None, None) => unreachable!(),
            }
            slopes.push(d);
        }
        MonotoneCubic { field: field.clone(), slopes }
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        let g = self.field.grid();
        if !g.contains(x) {
            return Err(Error::Range { value: x, lo: g.start(), hi: g.end() });
        }
        Ok(self.eval_clamped(x))
    }

    fn eval_clamped(&self, x: f64) -> f64 {
        let g = self.field.grid();
        let nodes = g.nodes();
        let y = self.field.values();
        let i = g.locate(x);
        let h = nodes[i + 1] - nodes[i];
        let t = ((x - nodes[i]) / h).clamp(0.0, 1.0);
        hermite_cubic(h, t, y[i], y[i + 1], self.slopes[i], self.slopes[i + 1])
    }
}

/// Monotone cubic interpolation of `field` onto the nodes of `targets`.
pub fn interpolate(field: &Field, targets: &Grid) -> Result<Field> {
    let mc = MonotoneCubic::new(field);
    let values = targets.nodes().iter().map(|&x| mc.eval(x)).collect::<Result<Vec<_>>>()?;
    Field::new(targets.clone(), values)
}

/// Solve a tridiagonal system (Thomas algorithm). `lower[0]` and
/// `upper[n-1]` are ignored.
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut beta = diag[0];
    if beta == 0.0 {
        return Err(Error::Numerical("singular tridiagonal system".into()));
    }
    c[0] = upper[0] / beta;
    d[0] = rhs[0] / beta;
    for i in 1..n {
        beta = diag[i] - lower[i] * c[i - 1];
        if beta == 0.0 {
            return Err(Error::Numerical("singular tridiagonal system".into()));
        }
        c[i] = if i < n - 1 { upper[i] / beta } else { 0.0 };
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}

/// Solve a banded system with two sub- and two super-diagonals by Gaussian
/// elimination without pivoting. Row `i` holds the coefficients of columns
/// `i−2..=i+2`; entries falling outside the matrix are ignored.
pub fn solve_pentadiagonal(rows: &[[f64; 5]], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = rows.len();
    if rhs.len() != n {
        return param("pentadiagonal system: row and rhs lengths differ");
    }
    let mut a: Vec<[f64; 5]> = rows.to_vec();
    let mut b = rhs.to_vec();
    for i in 0..n {
        let piv = a[i][2];
        if piv == 0.0 || !piv.is_finite() {
            return Err(Error::Numerical("singular pentadiagonal system".into()));
        }
        for d in 1..=2 {
            let r = i + d;
            if r >= n {
                break;
            }
            // column i sits at offset 2 − d in row r
            let f = a[r][2 - d] / piv;
            if f == 0.0 {
                continue;
            }
            for k in 0..=2 {
                let col = 2 + k;
                if col - d < 5 {
                    a[r][col - d] -= f * a[i][col];
                }
            }
            b[r] -= f * b[i];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut acc = b[i];
        for k in 1..=2 {
            if i + k < n {
                acc -= a[i][2 + k] * x[i + k];
            }
        }
        x[i] = acc / a[i][2];
    }
    Ok(x)
}

/// C² cubic spline clamped with fourth-order end slopes.
#[derive(Debug, Clone)]
pub struct CubicSpline {
    field: Field,
    // second derivatives at the nodes
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn new(field: &Field) -> Result<Self> {
        let x = field.nodes();
        let y = field.values();
        let n = x.len();
        let h: Vec<f64> = field.grid().spacing();
        let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let end_slope = |at: usize, start: usize| {
            let w = fd_weights(x[at], &x[start..start + 5], 1);
            (0..5).map(|k| w[1][k] * y[start + k]).sum::<f64>()
        };
        let d0 = end_slope(0, 0);
        let dn = end_slope(n - 1, n - 5);
        let mut lower = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        diag[0] = 2.0 * h[0];
        upper[0] = h[0];
        rhs[0] = 6.0 * (delta[0] - d0);
        for i in 1..n - 1 {
            lower[i] = h[i - 1];
            diag[i] = 2.0 * (h[i - 1] + h[i]);
            upper[i] = h[i];
            rhs[i] = 6.0 * (delta[i] - delta[i - 1]);
        }
        lower[n - 1] = h[n - 2];
        diag[n - 1] = 2.0 * h[n - 2];
        rhs[n - 1] = 6.0 * (dn - delta[n - 2]);
        let m = solve_tridiagonal(&lower, &diag, &upper, &rhs)?;
        Ok(CubicSpline { field: field.clone(), m })
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn grid(&self) -> &Grid {
        self.field.grid()
    }

    fn cell(&self, x: f64) -> (usize, f64, f64) {
        let g = self.field.grid();
        let i = g.locate(x);
        let nodes = g.nodes();
        (i, x - nodes[i], nodes[i + 1] - nodes[i])
    }

    fn check(&self, x: f64) -> Result<()> {
        let g = self.field.grid();
        if g.contains(x) {
            Ok(())
        } else {
            Err(Error::Range { value: x, lo: g.start(), hi: g.end() })
        }
    }

    // S(x) - y_i on the cell containing x
    fn increment(&self, i: usize, t: f64, h: f64) -> f64 {
        let y = self.field.values();
        let (mi, mj) = (self.m[i], self.m[i + 1]);
        let b = (y[i + 1] - y[i]) / h - h * (2.0 * mi + mj) / 6.0;
        t * (b + t * (0.5 * mi + t * (mj - mi) / (6.0 * h)))
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        self.eval_relative(x, 0.0)
    }

    /// `S(x) - reference`, formed without cancellation when `reference` is
    /// close to the sample values.
    pub fn eval_relative(&self, x: f64, reference: f64) -> Result<f64> {
        self.check(x)?;
        let (i, t, h) = self.cell(x);
        Ok((self.field.values()[i] - reference) + self.increment(i, t, h))
    }

    pub fn deriv(&self, x: f64) -> Result<f64> {
        self.check(x)?;
        let (i, t, h) = self.cell(x);
        let y = self.field.values();
        let (mi, mj) = (self.m[i], self.m[i + 1]);
        let b = (y[i + 1] - y[i]) / h - h * (2.0 * mi + mj) / 6.0;
        Ok(b + t * (mi + t * (mj - mi) / (2.0 * h)))
    }

    pub fn second_deriv(&self, x: f64) -> Result<f64> {
        self.check(x)?;
        let (i, t, h) = self.cell(x);
        Ok(self.m[i] + (self.m[i + 1] - self.m[i]) * t / h)
    }

    pub fn integral(&self) -> f64 {
        let x = self.field.nodes();
        let y = self.field.values();
        (0..x.len() - 1)
            .map(|i| {
                let h = x[i + 1] - x[i];
                0.5 * h * (y[i] + y[i + 1]) - h * h * h * (self.m[i] + self.m[i + 1]) / 24.0
            })
            .sum()
    }

    // ∫ from x_i to x_i + t of the spline on cell i
    fn partial_cell(&self, i: usize, t: f64, h: f64) -> f64 {
        let y = self.field.values();
        let (mi, mj) = (self.m[i], self.m[i + 1]);
        let b = (y[i + 1] - y[i]) / h - h * (2.0 * mi + mj) / 6.0;
        t * (y[i] + t * (b / 2.0 + t * (mi / 6.0 + t * (mj - mi) / (24.0 * h))))
    }

    /// Exact integral of the spline between two points of its range.
    pub fn integral_between(&self, a: f64, b: f64) -> Result<f64> {
        self.check(a)?;
        self.check(b)?;
        if b < a {
            return Ok(-self.integral_between(b, a)?);
        }
        let x = self.field.nodes();
        let y = self.field.values();
        let (ia, ta, ha) = self.cell(a);
        let (ib, tb, hb) = self.cell(b);
        if ia == ib {
            return Ok(self.partial_cell(ib, tb, hb) - self.partial_cell(ia, ta, ha));
        }
        let mut acc = -self.partial_cell(ia, ta, ha);
        for i in ia..ib {
            let h = x[i + 1] - x[i];
            acc += 0.5 * h * (y[i] + y[i + 1]) - h * h * h * (self.m[i] + self.m[i + 1]) / 24.0;
        }
        Ok(acc + self.partial_cell(ib, tb, hb))
    }
}

/// Local Lagrange interpolation through the `points` nodes nearest to the
/// target, with derivatives from the same polynomial. Much smaller
/// curvature error than a cubic on smooth data sampled on coarse cells.
#[derive(Debug, Clone)]
pub struct LocalInterpolant {
    field: Field,
    points: usize,
}

impl LocalInterpolant {
    pub fn new(field: &Field, points: usize) -> Result<Self> {
        if points < 2 || points > field.grid().len() {
            return param(format!("local interpolant needs 2..={} points, got {points}", field.grid().len()));
        }
        Ok(LocalInterpolant { field: field.clone(), points })
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn grid(&self) -> &Grid {
        self.field.grid()
    }

    /// Value minus `reference`, first and second derivative at `x`.
    pub fn eval_all(&self, x: f64, reference: f64) -> Result<[f64; 3]> {
        let g = self.field.grid();
        if !g.contains(x) {
            return Err(Error::Range { value: x, lo: g.start(), hi: g.end() });
        }
        let n = g.len();
        let i = g.locate(x);
        let start = (i + 1).saturating_sub(self.points / 2).min(n - self.points);
        let nodes = &g.nodes()[start..start + self.points];
        let vals = &self.field.values()[start..start + self.points];
        let w = fd_weights(x, nodes, 2);
        let mut out = [0.0; 3];
        for k in 0..self.points {
            out[0] += w[0][k] * (vals[k] - reference);
            out[1] += w[1][k] * vals[k];
            out[2] += w[2][k] * vals[k];
        }
        Ok(out)
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        Ok(self.eval_all(x, 0.0)?[0])
    }
}

/// Integral of a field through its clamped cubic spline.
pub fn spline_integral(field: &Field) -> Result<f64> {
    Ok(CubicSpline::new(field)?.integral())
}

/// Grid on `[0, y_max]` with `n` nodes clustered at `focus`. Spacing grows
/// geometrically away from the focus by at most `stretch` per cell; uniform
/// for `stretch == 1`.
pub fn build_grid(y_max: f64, n: usize, stretch: f64, focus: f64) -> Result<Grid> {
    if !(y_max > 0.0) || !y_max.is_finite() {
        return param(format!("y_max must be positive, got {y_max}"));
    }
    if n < Grid::MIN_NODES {
        return param(format!("grid needs at least {} nodes, got {n}", Grid::MIN_NODES));
    }
    if !(stretch >= 1.0) || !stretch.is_finite() {
        return param(format!("stretch must be >= 1, got {stretch}"));
    }
    if !(0.0..=y_max).contains(&focus) {
        return param(format!("focus {focus} outside [0, {y_max}]"));
    }
    let beta = ((n - 1) as f64 * stretch.ln()).min(700.0);
    if beta < 1e-10 {
        return Grid::uniform(0.0, y_max, n);
    }
    // x(ξ) = focus + c sinh(β(ξ − ξ0)) with x(0) = 0, x(1) = y_max
    let g = |xi0: f64| focus * (beta * (1.0 - xi0)).sinh() - (y_max - focus) * (beta * xi0).sinh();
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let xi0 = 0.5 * (lo + hi);
    let c = if xi0 > 0.5 {
        focus / (beta * xi0).sinh()
    } else {
        (y_max - focus) / (beta * (1.0 - xi0)).sinh()
    };
    let mut nodes: Vec<f64> = (0..n)
        .map(|i| {
            let xi = i as f64 / (n - 1) as f64;
            focus + c * (beta * (xi - xi0)).sinh()
        })
        .collect();
    nodes[0] = 0.0;
    nodes[n - 1] = y_max;
    Grid::new(nodes)
}

/// Parameters of a remesh beyond the target focus and extent.
#[derive(Debug, Clone, Copy)]
pub struct RemeshParams {
    pub n: usize,
    pub stretch: f64,
    /// Largest admissible |value| near the old right boundary.
    pub threshold: f64,
}

/// Rebuild the field on a new grid focused at `new_focus` on
/// `[0, new_y_max]`; zeros are padded beyond the old domain.
pub fn remesh(field: &Field, new_focus: f64, new_y_max: f64, p: RemeshParams) -> Result<Field> {
    let old = field.grid();
    if new_y_max < old.end() * (1.0 - 1e-12) {
        return param(format!("remesh cannot shrink the domain ({} < {})", new_y_max, old.end()));
    }
    let v = field.values();
    let zone = (v.len() / 100).max(3);
    let edge = v[v.len() - zone..].iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if edge > p.threshold {
        return Err(Error::DomainTruncation { value: edge, threshold: p.threshold });
    }
    let grid = build_grid(new_y_max, p.n, p.stretch, new_focus)?;
    let mc = MonotoneCubic::new(field);
    let values = grid
        .nodes()
        .iter()
        .map(|&y| if y <= old.end() { mc.eval_clamped(y.max(old.start())) } else { 0.0 })
        .collect();
    Field::new(grid, values)
}
