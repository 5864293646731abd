//! The coupled wave/heave system ż = (A + P) z + F(t) on
//! X = W^{1/2,2}(ℰ) × ℝ × L²(ℰ) × ℝ, z = [v, h, u, ℓ].
//!
//! A z = [u, ℓ, −gΛ_Ω v, −(2g/π) h],  P z = [0, 0, −gℓσ, ⟨k, u⟩],
//! Q z = [0, 0, −v, 0],  F = [0, 0, 0, f(t)/ρ],  σ(x) = 1/x².

use crate::error::{invalid, Error, Result};
use crate::grid_space::{SurfaceFunction, SurfaceGrid};
use crate::linalg::matvec;
use crate::omega_dtn::{DtnOperator, OmegaExtension};
use crate::quad::{composite, gauss_legendre, graded_breaks};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsParams {
    #[serde(default = "default_g")]
    pub g: f64,
    #[serde(default = "default_rho")]
    pub rho: f64,
}

fn default_g() -> f64 {
    9.81
}
fn default_rho() -> f64 {
    1000.0
}

impl Default for PhysicsParams {
    fn default() -> Self {
        Self { g: default_g(), rho: default_rho() }
    }
}

impl PhysicsParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.g > 0.0) {
            return Err(invalid(format!("g must be positive (got {})", self.g)));
        }
        if !(self.rho > 0.0) {
            return Err(invalid(format!("rho must be positive (got {})", self.rho)));
        }
        Ok(())
    }

    /// ω² of the free heave oscillation, 2g/π.
    pub fn heave_stiffness(&self) -> f64 {
        2.0 * self.g / PI
    }
}

/// Applied vertical force per unit length, f(t).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Forcing {
    Zero,
    Constant { value: f64 },
    Sinusoid { amplitude: f64, omega: f64, #[serde(default)] phase: f64 },
    /// amplitude · exp(−((t − t0)/width)²)
    Pulse { amplitude: f64, t0: f64, width: f64 },
    /// Piecewise linear through (t, f) samples.
    Table { t: Vec<f64>, f: Vec<f64> },
}

impl Default for Forcing {
    fn default() -> Self {
        Forcing::Zero
    }
}

impl Forcing {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            Forcing::Zero => 0.0,
            Forcing::Constant { value } => *value,
            Forcing::Sinusoid { amplitude, omega, phase } => amplitude * (omega * t + phase).sin(),
            Forcing::Pulse { amplitude, t0, width } => amplitude * (-((t - t0) / width).powi(2)).exp(),
            Forcing::Table { t: ts, f } => {
                let k = ts.partition_point(|s| *s <= t).clamp(1, ts.len() - 1);
                let (t0, t1) = (ts[k - 1], ts[k]);
                let s = (t - t0) / (t1 - t0);
                (1.0 - s) * f[k - 1] + s * f[k]
            }
        }
    }

    pub fn validate(&self, t_end: f64) -> Result<()> {
        match self {
            Forcing::Pulse { width, .. } if !(*width > 0.0) => Err(invalid("pulse width must be positive")),
            Forcing::Table { t, f } => {
                if t.len() < 2 || t.len() != f.len() {
                    return Err(invalid("forcing table needs ≥ 2 (t, f) pairs of equal length"));
                }
                if t.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(invalid("forcing table times must increase"));
                }
                if t[0] > 0.0 || *t.last().unwrap() < t_end {
                    return Err(invalid("forcing table does not cover simulation window"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// K(x̃) = I₁(x̃) + I₂(x̃), the surface kernel of the added force.
#[derive(Clone, Debug)]
pub struct HeaveKernel {
    grid: Arc<SurfaceGrid>,
    k: Vec<f64>,
}

fn gl64() -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(64);
    // map to [0, π/2]
    (x.iter().map(|s| FRAC_PI_2 * 0.5 * (s + 1.0)).collect(), w.iter().map(|w| FRAC_PI_2 * 0.5 * w).collect())
}

/// I₁(x̃) = ∫₀^{π/2} cos²θ /(x̃² + 2x̃ sinθ + 1) dθ.
pub fn kernel_i1(xt: f64) -> f64 {
    let (th, w) = gl64();
    th.iter().zip(&w).map(|(t, w)| w * t.cos().powi(2) / (xt * xt + 2.0 * xt * t.sin() + 1.0)).sum()
}

/// I₂(x̃) = ∫₀^{π/2} cos²θ /(x̃² − 2x̃ sinθ + 1) dθ = I₁(−x̃).
pub fn kernel_i2(xt: f64) -> f64 {
    kernel_i1(-xt)
}

/// Upper bound for I₁ on x̃ > 1: (1/x̃) ln(x̃ + 1) − (1/(2x̃)) ln(x̃² + 1).
pub fn kernel_i1_bound(xt: f64) -> f64 {
    (xt + 1.0).ln() / xt - (xt * xt + 1.0).ln() / (2.0 * xt)
}

pub fn heave_kernel(grid: &Arc<SurfaceGrid>) -> HeaveKernel {
    let raw: Vec<f64> = grid.nodes().iter().map(|&x| kernel_i1(x) + kernel_i2(x)).collect();
    let k = (0..raw.len()).map(|i| 0.5 * (raw[i] + raw[grid.mirror(i)])).collect();
    HeaveKernel { grid: grid.clone(), k }
}

impl HeaveKernel {
    pub fn values(&self) -> &[f64] {
        &self.k
    }
    pub fn grid(&self) -> &Arc<SurfaceGrid> {
        &self.grid
    }
    /// Weights k with ⟨k, u⟩ = (2/π²) ∫ u K (trapezoid).
    pub fn force_weights(&self) -> Vec<f64> {
        let w = self.grid.weights();
        self.k.iter().zip(&w).map(|(k, w)| 2.0 / (PI * PI) * k * w).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ForceRoute {
    /// (2/π²) ∫_ℰ u K dx̃ by the trapezoid rule.
    Kernel,
    /// (1/π) ∫_{−π/2}^{π/2} (D_Ω u)(sinθ, cosθ) cosθ dθ.
    Field,
}

pub fn added_force(u: &SurfaceFunction, route: ForceRoute, kernel: &HeaveKernel) -> Result<f64> {
    if **u.grid() != *kernel.grid {
        return Err(Error::GridMismatch("u and heave kernel live on different grids".into()));
    }
    Ok(match route {
        ForceRoute::Kernel => kernel.force_weights().iter().zip(u.values()).map(|(k, u)| k * u).sum(),
        ForceRoute::Field => {
            let e = OmegaExtension::new(u);
            let half = graded_breaks(FRAC_PI_2, 0.0, 30, 0.5);
            let mut br: Vec<f64> = half.iter().map(|t| -t).collect();
            br.extend(half.iter().rev().skip(1));
            let (th, w) = composite(&br, 16);
            th.iter().zip(&w).map(|(t, w)| w * e.field(t.sin(), t.cos()) * t.cos()).sum::<f64>() / PI
        }
    })
}

/// z = [v, h, u, ℓ] at time t.
#[derive(Clone, Debug)]
pub struct SystemState {
    pub v: SurfaceFunction,
    pub h: f64,
    pub u: SurfaceFunction,
    pub l: f64,
    pub t: f64,
}

impl SystemState {
    pub fn zeros(grid: &Arc<SurfaceGrid>) -> Self {
        Self { v: SurfaceFunction::zeros(grid), h: 0.0, u: SurfaceFunction::zeros(grid), l: 0.0, t: 0.0 }
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            v: self.v.with_values(self.v.values().iter().map(|x| a * x).collect()),
            h: a * self.h,
            u: self.u.with_values(self.u.values().iter().map(|x| a * x).collect()),
            l: a * self.l,
            t: self.t,
        }
    }

    /// self + a·other (time of self).
    pub fn axpy(&self, a: f64, other: &SystemState) -> Self {
        let comb = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(x, y)| x + a * y).collect();
        Self::from_parts(
            self,
            comb(self.v.values(), other.v.values()),
            self.h + a * other.h,
            comb(self.u.values(), other.u.values()),
            self.l + a * other.l,
            self.t,
        )
    }

    fn from_parts(like: &SystemState, v: Vec<f64>, h: f64, u: Vec<f64>, l: f64, t: f64) -> Self {
        Self { v: like.v.with_values(v), h, u: like.u.with_values(u), l, t }
    }

    fn check_finite(&self) -> Result<()> {
        if !self.v.values().iter().all(|x| x.is_finite()) {
            return Err(Error::Divergence { block: "v", t: self.t });
        }
        if !self.h.is_finite() {
            return Err(Error::Divergence { block: "h", t: self.t });
        }
        if !self.u.values().iter().all(|x| x.is_finite()) {
            return Err(Error::Divergence { block: "u", t: self.t });
        }
        if !self.l.is_finite() {
            return Err(Error::Divergence { block: "l", t: self.t });
        }
        Ok(())
    }
}

fn sigma(grid: &SurfaceGrid) -> Vec<f64> {
    grid.nodes().iter().map(|x| 1.0 / (x * x)).collect()
}

/// A z.
pub fn apply_a(z: &SystemState, params: &PhysicsParams, op: &DtnOperator) -> SystemState {
    let lv = op.apply_sym(z.v.values());
    SystemState::from_parts(
        z,
        z.u.values().to_vec(),
        z.l,
        lv.iter().map(|x| -params.g * x).collect(),
        -params.heave_stiffness() * z.h,
        z.t,
    )
}

/// P z.
pub fn apply_p(z: &SystemState, params: &PhysicsParams, kernel: &HeaveKernel) -> SystemState {
    let s = sigma(&kernel.grid);
    let f: f64 = kernel.force_weights().iter().zip(z.u.values()).map(|(k, u)| k * u).sum();
    SystemState::from_parts(
        z,
        vec![0.0; s.len()],
        0.0,
        s.iter().map(|s| -params.g * z.l * s).collect(),
        f,
        z.t,
    )
}

/// Q z, the bounded shift making A + Q skew-adjoint in X.
pub fn apply_q(z: &SystemState) -> SystemState {
    let n = z.v.values().len();
    SystemState::from_parts(z, vec![0.0; n], 0.0, z.v.values().iter().map(|x| -x).collect(), 0.0, z.t)
}

/// ⟨z₁, z₂⟩_X = ⟨(I + gΛ)v₁, v₂⟩ + (2g/π)h₁h₂ + ⟨u₁, u₂⟩ + ℓ₁ℓ₂.
pub fn x_inner(a: &SystemState, b: &SystemState, params: &PhysicsParams, op: &DtnOperator) -> f64 {
    op.inner(a.v.values(), b.v.values())
        + params.g * op.form(a.v.values(), b.v.values())
        + params.heave_stiffness() * a.h * b.h
        + op.inner(a.u.values(), b.u.values())
        + a.l * b.l
}

/// ‖z‖²_X.
pub fn energy(z: &SystemState, params: &PhysicsParams, op: &DtnOperator) -> f64 {
    x_inner(z, z, params, op)
}

/// ½‖u‖² + (g/2)⟨Λv, v⟩ + ½ℓ² + (g/π)h², conserved by the A-flow.
pub fn wave_energy(z: &SystemState, params: &PhysicsParams, op: &DtnOperator) -> f64 {
    0.5 * op.inner(z.u.values(), z.u.values())
        + 0.5 * params.g * op.form(z.v.values(), z.v.values())
        + 0.5 * z.l * z.l
        + params.g / PI * z.h * z.h
}

/// ‖Q‖ in 𝓛(X): sup ‖v‖/‖(I + gΛ)^{1/2}v‖ = (1 + g λ_min)^{−1/2}.
pub fn q_norm(params: &PhysicsParams, op: &DtnOperator) -> Result<f64> {
    Ok(1.0 / op.min_eigenvalue(params.g)?.sqrt())
}

/// ‖P‖ in 𝓛(X). P maps ℓ into the u-block and u into the ℓ-block, so the
/// norm is max(g‖σ‖, ‖k‖_*), both exact.
pub fn p_norm(params: &PhysicsParams, op: &DtnOperator, kernel: &HeaveKernel) -> f64 {
    let s = sigma(&kernel.grid);
    let k = kernel.force_weights();
    let dual = op.mass().solve(&k).iter().zip(&k).map(|(a, b)| a * b).sum::<f64>().sqrt();
    (params.g * op.inner(&s, &s).sqrt()).max(dual)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    ImplicitMidpoint,
    Rk4,
}

impl Default for Scheme {
    fn default() -> Self {
        Scheme::ImplicitMidpoint
    }
}

/// Which blocks of the generator are active.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Blocks {
    /// Include the coupling P.
    pub coupled: bool,
    /// Include the skew shift Q (gives the unitary Ã = A + Q flow).
    pub shifted: bool,
}

impl Blocks {
    pub const FULL: Blocks = Blocks { coupled: true, shifted: false };
    pub const DECOUPLED: Blocks = Blocks { coupled: false, shifted: false };
    pub const SKEW: Blocks = Blocks { coupled: false, shifted: true };
}

/// One-step map for a fixed (operator, dt, scheme). Implicit midpoint solves
/// (I − (dt/2)A₁) z⁺ = (I + (dt/2)A₁) z + dt F(t + dt/2) by eliminating
/// v⁺, h⁺ and the rank-one couplings, so the only dense solve is with
/// (1 + a²q)M + a²gA (a = dt/2), done in the operator's eigenbasis.
pub struct Stepper<'a> {
    op: &'a DtnOperator,
    params: PhysicsParams,
    blocks: Blocks,
    scheme: Scheme,
    dt: f64,
    sigma: Vec<f64>,
    k: Vec<f64>,
    w: Vec<f64>,
    denom: f64,
}

impl<'a> Stepper<'a> {
    pub fn new(
        op: &'a DtnOperator,
        kernel: &HeaveKernel,
        params: PhysicsParams,
        dt: f64,
        scheme: Scheme,
        blocks: Blocks,
    ) -> Result<Self> {
        params.validate()?;
        if !(dt > 0.0) {
            return Err(invalid(format!("dt must be positive (got {dt})")));
        }
        if **op.grid() != *kernel.grid {
            return Err(Error::GridMismatch("operator and heave kernel grids differ".into()));
        }
        let sigma = sigma(&kernel.grid);
        let k = kernel.force_weights();
        let mut s = Self { op, params, blocks, scheme, dt, sigma, k, w: vec![], denom: 1.0 };
        if scheme == Scheme::ImplicitMidpoint {
            let a = 0.5 * dt;
            let (alpha, beta) = s.shift(a);
            let e = op.eigen()?;
            let ms = op.mass().mul(&s.sigma);
            s.w = e.solve_shifted(alpha, beta, &ms);
            let p = if blocks.coupled { 1.0 } else { 0.0 };
            let kw: f64 = s.k.iter().zip(&s.w).map(|(a, b)| a * b).sum();
            s.denom = 1.0 + a * a * params.heave_stiffness() + a * a * params.g * p * kw;
        }
        Ok(s)
    }

    fn shift(&self, a: f64) -> (f64, f64) {
        let q = if self.blocks.shifted { 1.0 } else { 0.0 };
        (1.0 + a * a * q, a * a * self.params.g)
    }

    /// A₁ z (without forcing) as raw blocks.
    fn rhs(&self, v: &[f64], h: f64, u: &[f64], l: f64) -> (Vec<f64>, f64, Vec<f64>, f64) {
        let g = self.params.g;
        let lv = self.op.apply_sym(v);
        let p = if self.blocks.coupled { 1.0 } else { 0.0 };
        let q = if self.blocks.shifted { 1.0 } else { 0.0 };
        let du: Vec<f64> =
            (0..v.len()).map(|i| -g * lv[i] - q * v[i] - p * g * l * self.sigma[i]).collect();
        let force: f64 = self.k.iter().zip(u).map(|(a, b)| a * b).sum();
        (u.to_vec(), l, du, -self.params.heave_stiffness() * h + p * force)
    }

    pub fn step(&self, z: &SystemState, forcing: &Forcing) -> Result<SystemState> {
        let dt = self.dt;
        let fz = |t: f64| forcing.value(t) / self.params.rho;
        let out = match self.scheme {
            Scheme::ImplicitMidpoint => {
                let a = 0.5 * dt;
                let (v, u) = (z.v.values(), z.u.values());
                let (dv, dh, du, dl) = self.rhs(v, z.h, u, z.l);
                let r1: Vec<f64> = v.iter().zip(&dv).map(|(x, d)| x + a * d).collect();
                let r2 = z.h + a * dh;
                let r3: Vec<f64> = u.iter().zip(&du).map(|(x, d)| x + a * d).collect();
                let r4 = z.l + a * dl + dt * fz(z.t + a);

                let g = self.params.g;
                let ch = self.params.heave_stiffness();
                let p = if self.blocks.coupled { 1.0 } else { 0.0 };
                let q = if self.blocks.shifted { 1.0 } else { 0.0 };
                let ar1 = matvec(self.op.stiffness(), &r1);
                let mr1 = self.op.mass().mul(&r1);
                let mr3 = self.op.mass().mul(&r3);
                let b0: Vec<f64> =
                    (0..r1.len()).map(|i| mr3[i] - a * (g * ar1[i] + q * mr1[i])).collect();
                let (alpha, beta) = self.shift(a);
                let cb0 = self.op.eigen()?.solve_shifted(alpha, beta, &b0);
                let kc: f64 = self.k.iter().zip(&cb0).map(|(a, b)| a * b).sum();
                let l_new = (r4 - a * ch * r2 + a * p * kc) / self.denom;
                let u_new: Vec<f64> =
                    cb0.iter().zip(&self.w).map(|(c, w)| c - a * g * p * l_new * w).collect();
                let v_new: Vec<f64> = r1.iter().zip(&u_new).map(|(r, u)| r + a * u).collect();
                SystemState::from_parts(z, v_new, r2 + a * l_new, u_new, l_new, z.t + dt)
            }
            Scheme::Rk4 => {
                let eval = |v: &[f64], h: f64, u: &[f64], l: f64, t: f64| {
                    let (a, b, c, mut d) = self.rhs(v, h, u, l);
                    d += fz(t);
                    (a, b, c, d)
                };
                let axpy = |x: &[f64], s: f64, y: &[f64]| -> Vec<f64> {
                    x.iter().zip(y).map(|(a, b)| a + s * b).collect()
                };
                let (v, u, h, l, t) = (z.v.values(), z.u.values(), z.h, z.l, z.t);
                let k1 = eval(v, h, u, l, t);
                let k2 = eval(&axpy(v, dt / 2.0, &k1.0), h + dt / 2.0 * k1.1, &axpy(u, dt / 2.0, &k1.2), l + dt / 2.0 * k1.3, t + dt / 2.0);
                let k3 = eval(&axpy(v, dt / 2.0, &k2.0), h + dt / 2.0 * k2.1, &axpy(u, dt / 2.0, &k2.2), l + dt / 2.0 * k2.3, t + dt / 2.0);
                let k4 = eval(&axpy(v, dt, &k3.0), h + dt * k3.1, &axpy(u, dt, &k3.2), l + dt * k3.3, t + dt);
                let comb = |x: &[f64], a: &[f64], b: &[f64], c: &[f64], d: &[f64]| -> Vec<f64> {
                    (0..x.len()).map(|i| x[i] + dt / 6.0 * (a[i] + 2.0 * b[i] + 2.0 * c[i] + d[i])).collect()
                };
                SystemState::from_parts(
                    z,
                    comb(v, &k1.0, &k2.0, &k3.0, &k4.0),
                    h + dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
                    comb(u, &k1.2, &k2.2, &k3.2, &k4.2),
                    l + dt / 6.0 * (k1.3 + 2.0 * k2.3 + 2.0 * k3.3 + k4.3),
                    t + dt,
                )
            }
        };
        out.check_finite()?;
        Ok(out)
    }
}

/// Single step of the full system A₁ = A + P.
pub fn step(
    z: &SystemState,
    dt: f64,
    scheme: Scheme,
    params: &PhysicsParams,
    op: &DtnOperator,
    kernel: &HeaveKernel,
    forcing: &Forcing,
) -> Result<SystemState> {
    Stepper::new(op, kernel, *params, dt, scheme, Blocks::FULL)?.step(z, forcing)
}

/// One trajectory row.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Record {
    pub t: f64,
    pub h: f64,
    pub hdot: f64,
    pub energy: f64,
    pub v_l2: f64,
    pub v_half_norm: f64,
}

impl Record {
    pub const HEADER: [&'static str; 6] = ["t", "h", "hdot", "energy", "v_l2", "v_half_norm"];

    pub fn row(&self) -> Vec<f64> {
        vec![self.t, self.h, self.hdot, self.energy, self.v_l2, self.v_half_norm]
    }
}

#[derive(Clone, Debug)]
pub struct Snapshot {
    pub t: f64,
    pub v: SurfaceFunction,
    pub u: SurfaceFunction,
}

impl Snapshot {
    pub const HEADER: [&'static str; 3] = ["x", "v", "u"];

    pub fn rows(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        let x = self.v.grid().nodes();
        (0..x.len()).map(move |i| vec![x[i], self.v.values()[i], self.u.values()[i]])
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub records: Vec<Record>,
    pub snapshots: Vec<Snapshot>,
    pub final_state: SystemState,
    pub manifest: serde_json::Value,
}

fn record(z: &SystemState, params: &PhysicsParams, op: &DtnOperator) -> Record {
    let v = z.v.values();
    Record {
        t: z.t,
        h: z.h,
        hdot: z.l,
        energy: energy(z, params, op),
        v_l2: op.inner(v, v).max(0.0).sqrt(),
        v_half_norm: (op.inner(v, v) + params.g * op.form(v, v)).max(0.0).sqrt(),
    }
}

/// Builds and factorizes the operator a config asks for.
pub fn build_operator(config: &crate::cli_io::SimConfig) -> Result<DtnOperator> {
    let mut op = build_operator_with(config, false)?;
    op.factorize();
    op.eigen()?;
    Ok(op)
}

pub fn build_operator_with(config: &crate::cli_io::SimConfig, factorize: bool) -> Result<DtnOperator> {
    use crate::cli_io::RouteName;
    use crate::grid_space::LineGrid;
    use crate::omega_dtn::{assemble_dtn, default_line, DtnRoute};
    let grid = Arc::new(crate::grid_space::build_surface_grid(config.l, config.n)?);
    let route = match config.route {
        RouteName::Variational => DtnRoute::Variational,
        RouteName::Direct => DtnRoute::Direct,
        RouteName::Reflect => DtnRoute::Reflect(match (config.m, config.line_nodes) {
            (None, None) => default_line(&grid),
            (m, k) => {
                let d = default_line(&grid);
                Arc::new(LineGrid::new(m.unwrap_or(d.m()), k.unwrap_or(d.len()))?)
            }
        }),
    };
    assemble_dtn(&grid, &route, factorize)
}

/// Initial state [v₀, h₀, v₁, h₁] from a config.
pub fn initial_state(config: &crate::cli_io::SimConfig, grid: &Arc<SurfaceGrid>) -> Result<SystemState> {
    let v = SurfaceFunction::new(grid.clone(), config.initial.v0.sample(grid)?)?;
    let u = SurfaceFunction::new(grid.clone(), config.initial.v1.sample(grid)?)?;
    Ok(SystemState { v, h: config.initial.h0, u, l: config.initial.h1, t: 0.0 })
}

/// Runs a config from t = 0 to T.
pub fn simulate(config: &crate::cli_io::SimConfig) -> Result<Trajectory> {
    config.validate()?;
    let t0 = std::time::Instant::now();
    let op = build_operator(config)?;
    let kernel = heave_kernel(op.grid());
    let t_assembly = t0.elapsed().as_secs_f64();
    let z0 = initial_state(config, op.grid())?;
    simulate_with(config, &op, &kernel, z0, t_assembly)
}

/// Time loop for a prebuilt operator and initial state.
pub fn simulate_with(
    config: &crate::cli_io::SimConfig,
    op: &DtnOperator,
    kernel: &HeaveKernel,
    z0: SystemState,
    t_assembly: f64,
) -> Result<Trajectory> {
    let params = config.physics();
    let blocks = if config.coupled { Blocks::FULL } else { Blocks::DECOUPLED };
    let t0 = std::time::Instant::now();
    let stepper = Stepper::new(op, kernel, params, config.dt, config.scheme, blocks)?;
    let t_factor = t0.elapsed().as_secs_f64();
    let steps = config.steps();
    let snap_steps: Vec<usize> =
        config.snapshot_times.iter().map(|t| ((t / config.dt).round() as usize).min(steps)).collect();

    let t0 = std::time::Instant::now();
    let mut z = z0;
    let e0 = energy(&z, &params, op);
    let mut records = vec![record(&z, &params, op)];
    let mut snapshots = vec![];
    let mut work = 0.0;
    for k in 0..=steps {
        for (i, s) in snap_steps.iter().enumerate() {
            if *s == k {
                snapshots.push((i, Snapshot { t: z.t, v: z.v.clone(), u: z.u.clone() }));
            }
        }
        if k == steps {
            break;
        }
        let next = stepper.step(&z, &config.forcing)?;
        let tm = z.t + 0.5 * config.dt;
        work += config.dt * (z.l + next.l) * config.forcing.value(tm) / params.rho;
        z = next;
        if (k + 1) % config.stride == 0 || k + 1 == steps {
            records.push(record(&z, &params, op));
        }
    }
    snapshots.sort_by_key(|(i, _)| *i);
    let t_loop = t0.elapsed().as_secs_f64();

    let v0 = SurfaceFunction::new(op.grid().clone(), config.initial.v0.sample(op.grid())?)?;
    let v1 = SurfaceFunction::new(op.grid().clone(), config.initial.v1.sample(op.grid())?)?;
    let half = |v: &SurfaceFunction| crate::omega_dtn::sqrt_norm(v, params.g, op);
    let pn = p_norm(&params, op, kernel);
    let qn = q_norm(&params, op)?;
    let manifest = serde_json::json!({
        "program": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "config": config,
        "steps": steps,
        "t_final": z.t,
        "operator": op.diagnostics(),
        "bounds": { "p_norm": pn, "q_norm": qn, "growth_rate_bound": pn + qn },
        "initial_data": {
            "v0_w12_norm": v0.norm(crate::grid_space::NormKind::W12),
            "v0_half_norm": half(&v0)?,
            "v1_l2_norm": v1.norm(crate::grid_space::NormKind::L2),
            "v1_half_norm": half(&v1)?,
        },
        "energy_balance": {
            "initial": e0,
            "final": records.last().map(|r| r.energy),
            "forcing_work": work,
        },
        "timing_seconds": { "assembly": t_assembly, "factorization": t_factor, "time_loop": t_loop },
    });
    Ok(Trajectory { records, snapshots: snapshots.into_iter().map(|(_, s)| s).collect(), final_state: z, manifest })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli_io::SimConfig;
    use crate::omega_dtn::{assemble_dtn, DtnRoute};
    use proptest::prelude::*;

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        let n = 4000;
        let h = (b - a) / n as f64;
        let s: f64 = (1..n).map(|i| f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 }).sum();
        (s + f(a) + f(b)) * h / 3.0
    }

    #[test]
    fn kernel_integrals_match_simpson() {
        for x in [1.0, 1.7, 4.0, 30.0, -2.5] {
            let exact = simpson(|t| t.cos().powi(2) / (x * x + 2.0 * x * t.sin() + 1.0), 0.0, FRAC_PI_2);
            assert!((kernel_i1(x) - exact).abs() < 1e-12 * exact.max(1.0), "x = {x}");
            assert_eq!(kernel_i2(x), kernel_i1(-x));
        }
    }

    #[test]
    fn kernel_bound_holds_beyond_the_body() {
        for k in 1..200 {
            let x = 1.0 + 0.25 * k as f64;
            assert!(kernel_i1(x) <= kernel_i1_bound(x));
        }
    }

    #[test]
    fn table_forcing_validation() {
        let ok = Forcing::Table { t: vec![0.0, 1.0, 2.0], f: vec![0.0, 2.0, 0.0] };
        assert!(ok.validate(2.0).is_ok());
        assert_eq!(ok.value(0.5), 1.0);
        assert_eq!(ok.value(1.5), 1.0);
        let err = ok.validate(3.0).unwrap_err().to_string();
        assert!(err.contains("does not cover"), "{err}");
        assert!(Forcing::Table { t: vec![0.0, 0.0], f: vec![1.0, 1.0] }.validate(0.0).is_err());
        assert!(Forcing::Pulse { amplitude: 1.0, t0: 0.0, width: 0.0 }.validate(1.0).is_err());
    }

    proptest! {
        #[test]
        fn table_reproduces_linear_forcing(a in -5.0..5.0f64, b in -5.0..5.0f64, t in 0.0..4.0f64) {
            let ts = vec![0.0, 0.7, 1.9, 4.0];
            let f = Forcing::Table { t: ts.clone(), f: ts.iter().map(|s| a + b * s).collect() };
            prop_assert!((f.value(t) - (a + b * t)).abs() < 1e-12);
        }
    }

    fn random_state(grid: &Arc<SurfaceGrid>, seed: u64) -> SystemState {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut r = || {
            let vals = (0..grid.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
            SurfaceFunction::new(grid.clone(), vals).unwrap()
        };
        SystemState { v: r(), h: 0.3, u: r(), l: -0.2, t: 0.0 }
    }

    #[test]
    fn step_is_linear_and_rk4_agrees() {
        let grid = Arc::new(SurfaceGrid::new(10.0, 32).unwrap());
        let op = assemble_dtn(&grid, &DtnRoute::Variational, true).unwrap();
        let k = heave_kernel(&grid);
        let p = PhysicsParams::default();
        let (a, b) = (random_state(&grid, 1), random_state(&grid, 2));
        let s = |z: &SystemState| step(z, 1e-3, Scheme::ImplicitMidpoint, &p, &op, &k, &Forcing::Zero).unwrap();
        let lhs = s(&a.axpy(2.0, &b));
        let rhs = s(&a).axpy(2.0, &s(&b));
        assert!((lhs.h - rhs.h).abs() < 1e-12 && (lhs.l - rhs.l).abs() < 1e-12);
        let r = step(&a, 1e-3, Scheme::Rk4, &p, &op, &k, &Forcing::Zero).unwrap();
        assert!((r.h - s(&a).h).abs() < 1e-6);
    }

    #[test]
    fn nan_state_is_reported_as_divergence() {
        let grid = Arc::new(SurfaceGrid::new(10.0, 16).unwrap());
        let mut z = SystemState::zeros(&grid);
        z.l = f64::NAN;
        assert!(matches!(z.check_finite(), Err(Error::Divergence { .. })));
    }

    #[test]
    fn zero_data_stays_at_rest() {
        let tr = simulate(&SimConfig::new(8.0, 16, 0.05, 0.5)).unwrap();
        assert_eq!(tr.records.len(), 11);
        assert!(tr.records.iter().all(|r| r.h == 0.0 && r.energy == 0.0));
    }

    #[test]
    fn constant_force_equilibrium() {
        // static balance: (2g/π) h = f/ρ with waves frozen out
        let p = PhysicsParams::default();
        let grid = Arc::new(SurfaceGrid::new(10.0, 16).unwrap());
        let op = assemble_dtn(&grid, &DtnRoute::Variational, true).unwrap();
        let k = heave_kernel(&grid);
        let f = Forcing::Constant { value: 500.0 };
        let heq = 500.0 / p.rho / p.heave_stiffness();
        let mut z = SystemState::zeros(&grid);
        z.h = heq;
        let st = Stepper::new(&op, &k, p, 0.01, Scheme::ImplicitMidpoint, Blocks::DECOUPLED).unwrap();
        for _ in 0..50 {
            z = st.step(&z, &f).unwrap();
        }
        assert!((z.h - heq).abs() < 1e-14 && z.l.abs() < 1e-14);
    }
}
