//! Sampled functions on the free surface ℰ = {|x| > 1}, on a truncated line,
//! and points of the fluid domain; the reflection x ↦ 1/x between them.

use crate::cauchy::Piecewise;
use crate::error::{invalid, Error, Result};
use std::sync::Arc;

/// Uniform nodes on [−L, −1] ∪ [1, L], `n` per half-line.
///
/// Index `0..n` runs over the left half from −L to −1, `n..2n` over the right
/// half from 1 to L, so node `i` and node `2n − 1 − i` are mirror images.
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceGrid {
    l: f64,
    n: usize,
    dx: f64,
    nodes: Vec<f64>,
}

impl SurfaceGrid {
    pub fn new(l: f64, n: usize) -> Result<Self> {
        if !(l > 1.0) || !l.is_finite() {
            return Err(invalid(format!("L must exceed 1 (got {l})")));
        }
        if n < 2 {
            return Err(invalid(format!("need at least 2 nodes per half-line (got {n})")));
        }
        let dx = (l - 1.0) / (n - 1) as f64;
        let mut nodes = vec![0.0; 2 * n];
        for k in 0..n {
            let x = if k == 0 { 1.0 } else if k == n - 1 { l } else { 1.0 + k as f64 * dx };
            nodes[n + k] = x;
            nodes[n - 1 - k] = -x;
        }
        Ok(Self { l, n, dx, nodes })
    }

    pub fn l(&self) -> f64 {
        self.l
    }
    /// Points per half-line.
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn len(&self) -> usize {
        2 * self.n
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    pub fn dx(&self) -> f64 {
        self.dx
    }
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }
    pub fn mirror(&self, i: usize) -> usize {
        2 * self.n - 1 - i
    }
    /// Index of the node at −1 and at +1.
    pub fn endpoint_indices(&self) -> (usize, usize) {
        (self.n - 1, self.n)
    }

    /// Trapezoid weights on each half-line.
    pub fn weights(&self) -> Vec<f64> {
        let mut w = vec![self.dx; 2 * self.n];
        for i in [0, self.n - 1, self.n, 2 * self.n - 1] {
            w[i] = 0.5 * self.dx;
        }
        w
    }
}

/// Grid constructor with the production floor `n ≥ 8`.
pub fn build_surface_grid(l: f64, n: usize) -> Result<SurfaceGrid> {
    if n < 8 {
        return Err(invalid(format!("n must be at least 8 (got {n})")));
    }
    SurfaceGrid::new(l, n)
}

#[derive(Clone, Debug)]
pub struct SurfaceFunction {
    grid: Arc<SurfaceGrid>,
    values: Vec<f64>,
}

impl SurfaceFunction {
    pub fn new(grid: Arc<SurfaceGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("non-finite value at node {i}")));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: &Arc<SurfaceGrid>, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.nodes().iter().map(|&x| f(x)).collect();
        Self { grid: grid.clone(), values }
    }

    pub fn zeros(grid: &Arc<SurfaceGrid>) -> Self {
        Self { grid: grid.clone(), values: vec![0.0; grid.len()] }
    }

    pub fn grid(&self) -> &Arc<SurfaceGrid> {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub(crate) fn with_values(&self, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        Self { grid: self.grid.clone(), values }
    }

    /// Nodal derivative on each half-line, finite differences of order 2 or 4
    /// (centered inside, one-sided at ±1 and ±L).
    pub fn derivative(&self, order: usize) -> SurfaceFunction {
        let n = self.grid.n;
        let h = self.grid.dx;
        let mut out = vec![0.0; 2 * n];
        let right: Vec<f64> = self.values[n..].to_vec();
        let left: Vec<f64> = self.values[..n].iter().rev().copied().collect();
        let dr = fd_derivative(&right, h, order);
        let dl = fd_derivative(&left, h, order);
        for k in 0..n {
            out[n + k] = dr[k];
            // left half is stored by decreasing |x|; d/dx = −d/d|x|
            out[n - 1 - k] = -dl[k];
        }
        self.with_values(out)
    }

    /// Piecewise cubic Hermite interpolant (4th-order slopes), zero off [1, L].
    pub fn interpolant(&self) -> Piecewise {
        let d = self.derivative(4);
        let x = self.grid.nodes();
        let mut p = Piecewise::cubic();
        for i in 0..self.values.len() - 1 {
            if i == self.grid.n - 1 {
                continue;
            }
            p.push_hermite(
                x[i],
                x[i + 1],
                [self.values[i], self.values[i + 1]],
                [d.values[i], d.values[i + 1]],
            );
        }
        p
    }

    /// Hermite evaluator at arbitrary abscissae (zero where |x| < 1 or |x| > L).
    pub fn sampler(&self) -> HermiteSampler<'_> {
        HermiteSampler { f: self, slopes: self.derivative(4).values }
    }

    pub fn norm(&self, kind: NormKind) -> f64 {
        let w = self.grid.weights();
        let l2: f64 = self.values.iter().zip(&w).map(|(v, w)| w * v * v).sum();
        match kind {
            NormKind::L2 => l2.sqrt(),
            NormKind::W12 => {
                let d = self.derivative(2);
                let d2: f64 = d.values.iter().zip(&w).map(|(v, w)| w * v * v).sum();
                (l2 + d2).sqrt()
            }
        }
    }

    pub fn dot(&self, other: &SurfaceFunction) -> f64 {
        let w = self.grid.weights();
        self.values.iter().zip(&other.values).zip(&w).map(|((a, b), w)| w * a * b).sum()
    }

    /// Gagliardo W^{1/2,2}(ℰ) norm by double quadrature, with the region
    /// |t| > L (where v = 0) integrated analytically.
    pub fn gagliardo_half_norm(&self) -> f64 {
        let x = self.grid.nodes();
        let w = self.grid.weights();
        let v = &self.values;
        let dv = self.derivative(4);
        let l = self.grid.l;
        let mut semi = 0.0;
        for i in 0..x.len() {
            let mut row = 0.0;
            for j in 0..x.len() {
                let q = if i == j {
                    dv.values[i] * dv.values[i]
                } else {
                    let r = (v[i] - v[j]) / (x[i] - x[j]);
                    r * r
                };
                row += w[j] * q;
            }
            let gap = |d: f64| 1.0 / d.max(0.5 * self.grid.dx);
            row += 2.0 * v[i] * v[i] * (gap(l - x[i]) + gap(l + x[i]));
            semi += w[i] * row;
        }
        let l2 = self.norm(NormKind::L2);
        (l2 * l2 + semi).sqrt()
    }
}

pub struct HermiteSampler<'a> {
    f: &'a SurfaceFunction,
    slopes: Vec<f64>,
}

impl HermiteSampler<'_> {
    pub fn eval(&self, x: f64) -> f64 {
        let g = &self.f.grid;
        let a = x.abs();
        if !(1.0..=g.l).contains(&a) {
            return 0.0;
        }
        let s = (a - 1.0) / g.dx;
        let k = (s.floor() as usize).min(g.n - 2);
        let t = s - k as f64;
        let r = s.round();
        if (s - r).abs() < 1e-9 {
            let j = r as usize;
            return self.f.values[if x > 0.0 { g.n + j } else { g.n - 1 - j }];
        }
        let (i0, i1, sgn) =
            if x > 0.0 { (g.n + k, g.n + k + 1, 1.0) } else { (g.n - 1 - k, g.n - 2 - k, -1.0) };
        let (y0, y1) = (self.f.values[i0], self.f.values[i1]);
        // slopes along |x|
        let (d0, d1) = (sgn * self.slopes[i0] * g.dx, sgn * self.slopes[i1] * g.dx);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * d0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * d1
    }
}

fn fd_derivative(f: &[f64], h: f64, order: usize) -> Vec<f64> {
    let n = f.len();
    let mut d = vec![0.0; n];
    if order >= 4 && n >= 5 {
        for i in 2..n - 2 {
            d[i] = (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) / (12.0 * h);
        }
        let one = |f: &dyn Fn(usize) -> f64| {
            (
                (-25.0 * f(0) + 48.0 * f(1) - 36.0 * f(2) + 16.0 * f(3) - 3.0 * f(4)) / (12.0 * h),
                (-3.0 * f(0) - 10.0 * f(1) + 18.0 * f(2) - 6.0 * f(3) + f(4)) / (12.0 * h),
            )
        };
        let (a, b) = one(&|k| f[k]);
        d[0] = a;
        d[1] = b;
        let (a, b) = one(&|k| f[n - 1 - k]);
        d[n - 1] = -a;
        d[n - 2] = -b;
    } else if n >= 3 {
        for i in 1..n - 1 {
            d[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
        }
        d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
        d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
    } else {
        let s = (f[1] - f[0]) / h;
        d.iter_mut().for_each(|x| *x = s);
    }
    d
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormKind {
    L2,
    W12,
}

/// Uniform grid on [−M, M) with a power-of-two node count; x₀ = −M, and 0 is
/// a node.
#[derive(Clone, Debug, PartialEq)]
pub struct LineGrid {
    m: f64,
    len: usize,
    dx: f64,
}

impl LineGrid {
    pub fn new(m: f64, len: usize) -> Result<Self> {
        if !(m > 0.0) || !m.is_finite() {
            return Err(invalid(format!("line half-width must be positive (got {m})")));
        }
        if len < 4 || !len.is_power_of_two() {
            return Err(invalid(format!("line node count must be a power of two ≥ 4 (got {len})")));
        }
        Ok(Self { m, len, dx: 2.0 * m / len as f64 })
    }
    pub fn m(&self) -> f64 {
        self.m
    }
    pub fn len(&self) -> usize {
        self.len
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    pub fn dx(&self) -> f64 {
        self.dx
    }
    pub fn x(&self, k: usize) -> f64 {
        -self.m + k as f64 * self.dx
    }
    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len).map(|k| self.x(k)).collect()
    }
}

#[derive(Clone, Debug)]
pub struct LineFunction {
    grid: Arc<LineGrid>,
    values: Vec<f64>,
}

impl LineFunction {
    pub fn new(grid: Arc<LineGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a line of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: &Arc<LineGrid>, f: impl Fn(f64) -> f64) -> Self {
        let values = (0..grid.len()).map(|k| f(grid.x(k))).collect();
        Self { grid: grid.clone(), values }
    }

    pub fn grid(&self) -> &Arc<LineGrid> {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
    pub(crate) fn with_values(&self, values: Vec<f64>) -> Self {
        Self { grid: self.grid.clone(), values }
    }

    /// Centered finite-difference derivative (4th order inside, one-sided at
    /// the ends).
    pub fn derivative(&self) -> LineFunction {
        self.with_values(fd_derivative(&self.values, self.grid.dx, 4))
    }

    /// Piecewise-linear interpolant.
    pub fn linear_interpolant(&self) -> Piecewise {
        let mut p = Piecewise::linear();
        for k in 0..self.values.len() - 1 {
            p.push_linear(self.grid.x(k), self.grid.x(k + 1), self.values[k], self.values[k + 1]);
        }
        p
    }

    /// Piecewise cubic Hermite interpolant with 4th-order slopes.
    pub fn cubic_interpolant(&self) -> Piecewise {
        let d = self.derivative();
        let mut p = Piecewise::cubic();
        for k in 0..self.values.len() - 1 {
            p.push_hermite(
                self.grid.x(k),
                self.grid.x(k + 1),
                [self.values[k], self.values[k + 1]],
                [d.values[k], d.values[k + 1]],
            );
        }
        p
    }

    /// Linear interpolation at `x`; zero outside the grid.
    pub fn interp(&self, x: f64) -> f64 {
        let s = (x + self.grid.m) / self.grid.dx;
        if s < 0.0 || s > (self.grid.len - 1) as f64 {
            return 0.0;
        }
        let k = (s.floor() as usize).min(self.grid.len - 2);
        let t = s - k as f64;
        (1.0 - t) * self.values[k] + t * self.values[k + 1]
    }

    pub fn norm(&self, kind: NormKind) -> f64 {
        let h = self.grid.dx;
        let l2: f64 = self.values.iter().map(|v| v * v).sum::<f64>() * h;
        match kind {
            NormKind::L2 => l2.sqrt(),
            NormKind::W12 => {
                let d2: f64 = self.derivative().values.iter().map(|v| v * v).sum::<f64>() * h;
                (l2 + d2).sqrt()
            }
        }
    }

    pub fn dot(&self, other: &LineFunction) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>() * self.grid.dx
    }
}

/// A point of the closed upper half-plane, x = r sinθ, y = r cosθ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldPoint {
    pub x: f64,
    pub y: f64,
}

impl FieldPoint {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
    pub fn polar(r: f64, theta: f64) -> Self {
        Self { x: r * theta.sin(), y: r * theta.cos() }
    }
    pub fn r(&self) -> f64 {
        self.x.hypot(self.y)
    }
    pub fn theta(&self) -> f64 {
        self.x.atan2(self.y)
    }
}

/// η(v): v on ℰ, v(1/x) on (−1, 1) \ {0}, and η(0) = 0.
pub fn reflect_extend(v: &SurfaceFunction, line: &Arc<LineGrid>) -> LineFunction {
    let s = v.sampler();
    LineFunction::from_fn(line, |x| {
        if x.abs() >= 1.0 {
            s.eval(x)
        } else if x == 0.0 {
            0.0
        } else {
            s.eval(1.0 / x)
        }
    })
}

/// g(v): v′ on ℰ (second-order differences), zero on (−1, 1) and past ±L,
/// sampled on the line by linear interpolation of the nodal derivative.
pub fn zero_extend_derivative(v: &SurfaceFunction, line: &Arc<LineGrid>) -> Result<LineFunction> {
    let g = v.grid();
    if g.n() < 2 {
        return Err(invalid("need at least 2 nodes per half-line"));
    }
    let d = v.derivative(2);
    Ok(LineFunction::from_fn(line, |x| {
        let a = x.abs();
        if a < 1.0 || a > g.l() {
            return 0.0;
        }
        let s = (a - 1.0) / g.dx();
        let k = (s.floor() as usize).min(g.n() - 2);
        let t = s - k as f64;
        let (i0, i1) = if x > 0.0 { (g.n() + k, g.n() + k + 1) } else { (g.n() - 1 - k, g.n() - 2 - k) };
        (1.0 - t) * d.values()[i0] + t * d.values()[i1]
    }))
}

/// (v(1), v(−1)).
pub fn endpoint_values(v: &SurfaceFunction) -> (f64, f64) {
    let (m, p) = v.grid().endpoint_indices();
    (v.values()[p], v.values()[m])
}
