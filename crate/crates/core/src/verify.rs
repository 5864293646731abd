//! Verification harness: every identity, inequality and equivalence the
//! solver relies on, run at a chosen resolution and reported as pass/fail.

use crate::coupling::{
    added_force, apply_a, apply_q, energy, heave_kernel, kernel_i1, kernel_i1_bound, p_norm, q_norm,
    simulate_with, wave_energy, x_inner, Blocks, ForceRoute, Forcing, PhysicsParams, Scheme, Stepper,
    SystemState,
};
use crate::cli_io::{Profile, SimConfig};
use crate::error::{invalid, Result};
use crate::grid_space::{FieldPoint, LineFunction, LineGrid, NormKind, SurfaceFunction, SurfaceGrid};
use crate::halfplane::{
    dirichlet_extend_h, dirichlet_extend_h_grad, h_half_norm_sq, hilbert_fft, hilbert_pv, lambda_h, lambda_h_at,
    LambdaHRoute,
};
use crate::omega_dtn::{
    assemble_dtn, default_line, dirichlet_energy, lambda_omega_direct, lambda_omega_direct_with,
    lambda_omega_reflect, phi1, resolvent_solve, DirectOptions, DtnOperator, DtnRoute, FormulaReading,
    OmegaExtension,
};
use crate::quad::composite;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

/// Sample lattice in a box inside Ω.
#[derive(Clone, Copy, Debug)]
pub struct FieldBox {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    /// Lattice points per side.
    pub samples: usize,
}

impl FieldBox {
    fn points(&self) -> Vec<(f64, f64)> {
        let k = self.samples.max(2);
        let mut out = Vec::with_capacity(k * k);
        for i in 0..k {
            for j in 0..k {
                let s = i as f64 / (k - 1) as f64;
                let t = j as f64 / (k - 1) as f64;
                out.push((self.x0 + s * (self.x1 - self.x0), self.y0 + t * (self.y1 - self.y0)));
            }
        }
        out
    }
}

fn in_omega(x: f64, y: f64) -> bool {
    y > 0.0 && x * x + y * y > 1.0
}

/// Max |5-point Laplacian| of `field` over the lattice of `bx`.
pub fn harmonic_residual(field: &(dyn Fn(f64, f64) -> f64 + Sync), bx: &FieldBox, h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(invalid(format!("stencil step must be positive (got {h})")));
    }
    let pts = bx.points();
    for &(x, y) in &pts {
        for (a, b) in [(x, y), (x + h, y), (x - h, y), (x, y + h), (x, y - h)] {
            if !in_omega(a, b) {
                return Err(invalid(format!("stencil at ({x}, {y}) with step {h} leaves Ω")));
            }
        }
    }
    Ok(pts
        .par_iter()
        .map(|&(x, y)| {
            let lap = field(x + h, y) + field(x - h, y) + field(x, y + h) + field(x, y - h) - 4.0 * field(x, y);
            (lap / (h * h)).abs()
        })
        .reduce(|| 0.0, f64::max))
}

/// max over θ of |∂_r field(1, θ) − target(θ)|, the radial derivative taken
/// one-sided with steps δr and δr/2 and Richardson-extrapolated.
pub fn neumann_residual(
    field: &(dyn Fn(f64, f64) -> f64 + Sync),
    thetas: &[f64],
    dr: f64,
    target: &(dyn Fn(f64) -> f64 + Sync),
) -> Result<f64> {
    if !(dr > 0.0) {
        return Err(invalid(format!("radial step must be positive (got {dr})")));
    }
    if let Some(t) = thetas.iter().find(|t| !(t.abs() < PI / 2.0)) {
        return Err(invalid(format!("θ = {t} outside (−π/2, π/2)")));
    }
    Ok(thetas
        .par_iter()
        .map(|&t| {
            let at = |r: f64| field(r * t.sin(), r * t.cos());
            let f0 = at(1.0);
            let d1 = (at(1.0 + dr) - f0) / dr;
            let d2 = (at(1.0 + 0.5 * dr) - f0) / (0.5 * dr);
            (2.0 * d2 - d1 - target(t)).abs()
        })
        .reduce(|| 0.0, f64::max))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Level {
    Quick,
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Comparator {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
}

/// One row of the tolerance table.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Tolerance {
    pub id: &'static str,
    pub anchor: &'static str,
    pub quantity: &'static str,
    pub cmp: Comparator,
    pub tol: f64,
}

pub const TOLERANCE_TABLE_VERSION: u32 = 1;

const fn row(id: &'static str, anchor: &'static str, quantity: &'static str, cmp: Comparator, tol: f64) -> Tolerance {
    Tolerance { id, anchor, quantity, cmp, tol }
}

use Comparator::{AtLeast, AtMost};

/// Every tolerance the suite applies, in report order.
pub const TOLERANCES: &[Tolerance] = &[
    row("hilbert-routes", "Hilbert transform: principal value vs multiplier −i sgn ξ", "max relative L² discrepancy over 3 functions", AtMost, 1e-5),
    row("hilbert-closed-form", "Hilbert transform of 1/(1+x²) is x/(1+x²)", "relative L² error", AtMost, 1e-4),
    row("dtn-h-routes", "Λ_ℍ = 𝓗∂ₓ = |ξ| multiplier", "relative L² discrepancy", AtMost, 1e-5),
    row("dtn-h-closed-form", "Λ_ℍ[1/(1+x²)] = (1−x²)/(1+x²)²", "relative L² error", AtMost, 1e-4),
    row("poisson-semigroup", "Poisson extension of 1/(1+x²) is (1+y)/(x²+(1+y)²)", "max relative error at 100 random points", AtMost, 1e-5),
    row("trace-limit-monotone", "∂_y D_ℍη → −Λ_ℍη as y → 0", "number of non-decreasing steps over y = 0.2, 0.1, 0.05, 0.025", AtMost, 0.0),
    row("trace-limit-final", "∂_y D_ℍη → −Λ_ℍη as y → 0", "‖∂_y D_ℍη + Λ_ℍη‖ at y = 0.025 over ‖η‖_{W^{1,2}}", AtMost, 5e-3),
    row("halfplane-energy", "∫_ℍ ∇D_ℍη₁·∇D_ℍη₂ = ⟨Λ_ℍη₁, η₂⟩", "relative discrepancy, box-truncated quadrature", AtMost, 2e-2),
    row("gradient-bound", "‖∇D_ℍη‖² ≤ ½∫(1+|ξ|)|η̂|²", "max over random η of lhs − rhs", AtMost, 1e-3),
    row("omega-trace", "D_Ω v = v on ℰ", "max nodal |D_Ω v − v|", AtMost, 1e-13),
    row("omega-neumann", "∂_r D_Ω v = 0 on the half-circle", "Richardson residual over ‖v‖_{W^{1,2}}", AtMost, 1e-3),
    row("omega-harmonic-order", "Δ D_Ω v = 0 in Ω", "|residual ratio under stencil halving − 4|", AtMost, 0.5),
    row("phi1-neumann", "∂_r φ₁ = cos θ on the half-circle", "max |∂_r φ₁ − cos θ|", AtMost, 1e-6),
    row("phi1-harmonic", "Δφ₁ = 0 in Ω", "max 5-point residual", AtMost, 1e-9),
    row("dtn-omega-routes", "Λ_Ω by reflection vs singular-integral formula", "max relative L² discrepancy over 10 functions", AtMost, 1e-4),
    row("dtn-omega-mutation", "endpoint term (v(1) − v(−1))/(πx)", "discrepancy with endpoint sign flipped", AtLeast, 1e-2),
    row("dtn-omega-symmetry", "⟨Λ_Ω v, u⟩ = ⟨v, Λ_Ω u⟩", "relative asymmetry of the assembled operator", AtMost, 1e-6),
    row("dtn-omega-positivity", "Λ_Ω ≥ 0", "1 − min eigenvalue of I + gΛ_Ω", AtMost, 1e-8),
    row("omega-energy", "∫_Ω ∇D_Ωv·∇D_Ωu = ⟨Λ_Ω v, u⟩", "max relative discrepancy over two pairs", AtMost, 2e-2),
    row("omega-energy-parity", "∫_Ω ∇D_Ωv·∇D_Ωu = ⟨Λ_Ω v, u⟩", "max |value| for an even/odd pair", AtMost, 1e-6),
    row("resolvent-norm", "‖(I + Λ_Ω)⁻¹‖ ≤ 1", "power-iteration norm", AtMost, 1.0 + 1e-6),
    row("resolvent-recovery", "(I + gΛ_Ω)v = f is uniquely solvable", "relative error on a manufactured solution", AtMost, 1e-8),
    row("sigma-norm", "‖σ‖²_{L²(ℰ)} = 2/3", "|quadrature − 2/3|", AtMost, 1e-6),
    row("kernel-shape", "K = I₁ + I₂ is positive and even", "number of violating nodes", AtMost, 0.0),
    row("kernel-i1-bound", "I₁(x) ≤ ln(x+1)/x − ln(x²+1)/(2x) for x > 1", "number of violating nodes", AtMost, 0.0),
    row("kernel-far-field", "K(x)·x² → π/2", "max |2K x²/π − 1| for |x| ≥ 20", AtMost, 5e-2),
    row("added-force-routes", "(1/π)∫D_Ωu(sinθ,cosθ)cosθ dθ = (2/π²)∫uK", "relative discrepancy, u = exp(−(|x|−1))", AtMost, 1e-3),
    row("p-norm-stability", "P is bounded on X", "relative change of ‖P‖ under grid refinement", AtMost, 1e-2),
    row("skew-adjoint", "Ã = A + Q is skew-adjoint on X", "max relative ⟨Ãz₁,z₂⟩ + ⟨z₁,Ãz₂⟩ over 20 random pairs", AtMost, 1e-10),
    row("skew-energy-step", "Ã generates a unitary group", "relative change of ‖z‖²_X over one midpoint step", AtMost, 1e-12),
    row("wave-energy-step", "½‖u‖² + (g/2)⟨Λv,v⟩ + ½ℓ² + (g/π)h² is conserved by A", "relative change over one midpoint step", AtMost, 1e-12),
    row("heave-oscillator", "ḧ = −(2g/π)h", "|h(T) − 1| after one period, dt = T/1000", AtMost, 1e-6),
    row("flow-linearity", "the flow map is linear", "relative ‖S(αz₀) − αS(z₀)‖", AtMost, 1e-12),
    row("flow-determinism", "plumbing", "number of differing bits between reruns", AtMost, 0.0),
    row("self-convergence", "A₁ = A + P generates a C⁰ semigroup", "|observed order in (h, energy) − 2|", AtMost, 0.2),
    row("growth-bound", "‖z(t)‖ ≤ Ce^{ωt}‖z₀‖, ω ≤ ‖P‖ + ‖Q‖", "measured ω minus ‖P‖ + ‖Q‖", AtMost, 0.0),
];

pub fn tolerance(id: &str) -> &'static Tolerance {
    TOLERANCES.iter().find(|t| t.id == id).unwrap_or_else(|| panic!("no tolerance row `{id}`"))
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub id: String,
    pub anchor: String,
    pub quantity: String,
    pub measured: f64,
    pub comparator: Comparator,
    pub tolerance: f64,
    pub passed: bool,
    pub runtime_s: f64,
    pub fingerprint: String,
    pub skipped: Option<String>,
}

impl CheckReport {
    fn new(tol: &Tolerance, measured: f64, runtime: f64, fingerprint: String) -> Self {
        let passed = match tol.cmp {
            AtMost => measured <= tol.tol,
            AtLeast => measured >= tol.tol,
        };
        Self {
            id: tol.id.into(),
            anchor: tol.anchor.into(),
            quantity: tol.quantity.into(),
            measured,
            comparator: tol.cmp,
            tolerance: tol.tol,
            passed,
            runtime_s: runtime,
            fingerprint,
            skipped: None,
        }
    }

    fn failed(tol: &Tolerance, reason: String, fingerprint: String) -> Self {
        Self { passed: false, skipped: Some(reason), ..Self::new(tol, f64::NAN, 0.0, fingerprint) }
    }

    pub fn json_line(&self) -> String {
        serde_json::to_string(self).expect("reports serialize")
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SuiteConfig {
    pub level: Level,
    pub seed: u64,
    pub g: f64,
}

impl SuiteConfig {
    pub fn new(level: Level) -> Self {
        Self { level, seed: 20_240_917, g: PhysicsParams::default().g }
    }
}

/// Resolutions per level.
struct Res {
    line_m: f64,
    line_len: usize,
    pv_len: usize,
    surf_l: f64,
    surf_n: usize,
    op_n: usize,
    conv_n: [usize; 3],
    energy_n: usize,
    random_eta: usize,
}

impl Res {
    fn of(level: Level) -> Self {
        match level {
            Level::Quick => Res {
                line_m: 100.0,
                line_len: 1 << 14,
                pv_len: 1 << 16,
                surf_l: 50.0,
                surf_n: 2048,
                op_n: 192,
                conv_n: [128, 256, 512],
                energy_n: 512,
                random_eta: 6,
            },
            Level::Full => Res {
                line_m: 100.0,
                line_len: 1 << 14,
                pv_len: 1 << 16,
                surf_l: 50.0,
                surf_n: 2048,
                op_n: 512,
                conv_n: [128, 256, 512],
                energy_n: 1024,
                random_eta: 20,
            },
        }
    }
}

fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

fn weighted_rel_l2(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = (0..a.len()).map(|i| w[i] * (a[i] - b[i]).powi(2)).sum();
    let den: f64 = (0..a.len()).map(|i| w[i] * b[i] * b[i]).sum();
    (num / den).sqrt()
}

type Probe = Box<dyn Fn(f64) -> f64 + Send + Sync>;

/// Data flat at the body corners (v′(±1) = 0) and concentrated near the
/// body, where both Λ_Ω routes are resolved.
pub fn route_test_functions() -> Vec<(&'static str, Probe)> {
    let q = |x: f64| x * x - 1.0;
    vec![
        ("even bump", Box::new(move |x| (-q(x).powi(2)).exp())),
        ("odd bump", Box::new(move |x| x.signum() * (-q(x).powi(2)).exp())),
        ("mixed bump", Box::new(move |x| (0.3 + 0.7 * x.signum()) * (-0.5 * q(x).powi(2)).exp())),
        ("wide mixed bump", Box::new(move |x| (1.0 - 0.5 * x.signum()) * (-0.25 * q(x).powi(2)).exp())),
        ("wide odd bump", Box::new(move |x| x.signum() * (-0.5 * q(x).powi(2)).exp())),
        ("wide even bump", Box::new(move |x| (-0.25 * q(x).powi(2)).exp())),
        ("wide oscillating bump", Box::new(move |x| (-0.25 * q(x).powi(2)).exp() * (0.5 * PI * q(x)).cos())),
        ("zero-trace bump", Box::new(move |x| q(x).powi(2) * (-0.3 * q(x).powi(2)).exp())),
        ("odd shoulder", Box::new(move |x| x.signum() * (-0.3 * q(x).powi(2)).exp() * (1.0 + 0.5 * q(x).powi(2)))),
        ("skewed bump", Box::new(move |x| (-0.5 * q(x).powi(2)).exp() * (1.0 + 0.3 * x.signum() * q(x).powi(2)))),
    ]
}

struct Ctx {
    cfg: SuiteConfig,
    res: Res,
    fp: String,
}

type CheckFn = fn(&Ctx) -> Result<Vec<(&'static str, f64)>>;

/// Runs every check. Check failures are recorded in the reports; only
/// infrastructure errors surface as `Err`.
pub fn run_suite(cfg: &SuiteConfig) -> Result<Vec<CheckReport>> {
    let res = Res::of(cfg.level);
    let fp = format!(
        "level={:?} seed={} g={} line=({},{}) surface=({},{}) op_n={} tolerances=v{}",
        cfg.level, cfg.seed, cfg.g, res.line_m, res.line_len, res.surf_l, res.surf_n, res.op_n, TOLERANCE_TABLE_VERSION
    );
    let ctx = Ctx { cfg: *cfg, res, fp };
    let groups: Vec<(&[&str], CheckFn)> = vec![
        (&["hilbert-routes", "hilbert-closed-form"], check_hilbert),
        (&["dtn-h-routes", "dtn-h-closed-form"], check_dtn_h),
        (&["poisson-semigroup"], check_poisson),
        (&["trace-limit-monotone", "trace-limit-final"], check_trace_limit),
        (&["halfplane-energy"], check_halfplane_energy),
        (&["gradient-bound"], check_gradient_bound),
        (&["omega-trace", "omega-neumann", "omega-harmonic-order"], check_omega_field),
        (&["phi1-neumann", "phi1-harmonic"], check_phi1),
        (&["dtn-omega-routes", "dtn-omega-mutation"], check_dtn_routes),
        (&["dtn-omega-symmetry", "dtn-omega-positivity", "resolvent-norm", "resolvent-recovery"], check_operator),
        (&["omega-energy", "omega-energy-parity"], check_omega_energy),
        (&["sigma-norm", "kernel-shape", "kernel-i1-bound", "kernel-far-field"], check_kernel),
        (&["added-force-routes", "p-norm-stability"], check_added_force),
        (&["skew-adjoint", "skew-energy-step", "wave-energy-step", "heave-oscillator"], check_generator),
        (&["flow-linearity", "flow-determinism", "self-convergence", "growth-bound"], check_flow),
    ];
    let out: Vec<Vec<CheckReport>> = groups
        .par_iter()
        .map(|(ids, f)| {
            let t0 = Instant::now();
            let r = f(&ctx);
            let dt = t0.elapsed().as_secs_f64();
            match r {
                Ok(vals) => vals
                    .into_iter()
                    .map(|(id, m)| CheckReport::new(tolerance(id), m, dt, ctx.fp.clone()))
                    .collect(),
                Err(e) => ids
                    .iter()
                    .map(|id| CheckReport::failed(tolerance(id), format!("check errored: {e}"), ctx.fp.clone()))
                    .collect(),
            }
        })
        .collect();
    Ok(out.into_iter().flatten().collect())
}

/// Human-readable table of reports.
pub fn summary_table(reports: &[CheckReport]) -> String {
    let mut s = format!("{:<24} {:>12} {:>2} {:>10} {:>8}  {}\n", "check", "measured", "", "tolerance", "time", "result");
    for r in reports {
        let cmp = match r.comparator {
            AtMost => "<=",
            AtLeast => ">=",
        };
        s += &format!(
            "{:<24} {:>12.4e} {:>2} {:>10.2e} {:>7.2}s  {}\n",
            r.id,
            r.measured,
            cmp,
            r.tolerance,
            r.runtime_s,
            if r.passed { "PASS" } else if r.skipped.is_some() { "ERROR" } else { "FAIL" }
        );
    }
    let failed = reports.iter().filter(|r| !r.passed).count();
    s += &format!("{} checks, {} passed, {} failed\n", reports.len(), reports.len() - failed, failed);
    s
}

fn line(m: f64, len: usize) -> Result<Arc<LineGrid>> {
    Ok(Arc::new(LineGrid::new(m, len)?))
}

fn check_hilbert(c: &Ctx) -> Result<Vec<(&'static str, f64)>> {
    let grid = line(c.res.line_m, c.res.pv_len)?;
    let idx: Vec<usize> = (0..grid.len()).step_by(8).filter(|&k| grid.x(k).abs() <= 10.0).collect();
    let targets: Vec<f64> = idx.iter().map(|&k| grid.x(k)).collect();
    let fs: [fn(f64) -> f64; 3] = [|x| (-x * x).exp(), |x| 1.0 / (1.0 + x * x), |x| x * (-x * x).exp()];
    let mut worst: f64 = 0.0;
    let mut closed = 0.0;
    for (k, f) in fs.iter().enumerate() {
        let lf = LineFunction::from_fn(&grid, f);
        let fft = hilbert_fft(&lf).values;
        let fft_t: Vec<f64> = idx.iter().map(|&i| fft.values()[i]).collect();
        let pv = hilbert_pv(&lf, &targets).values;
        worst = worst.max(rel_l2(&fft_t, &pv));
        if k == 1 {
            let exact: Vec<f64> = targets.iter().map(|x| x / (1.0 + x * x)).collect();
            closed = rel_l2(&fft_t, &exact).max(rel_l2(&pv, &exact));
        }
    }
    Ok(vec![("hilbert-routes", worst), ("hilbert-closed-form", closed)])
}

fn check_dtn_h(c: &Ctx) -> Result<Vec<(&'static str, f64)>> {
    let grid = line(c.res.line_m, c.res.line_len)?;
    let eta = LineFunction::from_fn(&grid, |x| 1.0 / (1.0 + x * x));
    let a = lambda_h(&eta, LambdaHRoute::Hilbert);
    let b = lambda_h(&eta, LambdaHRoute::Multiplier);
    let exact: Vec<f64> = (0..grid.len()).map(|k| {
        let x = grid.x(k);
        (1.0 - x * x) / (1.0 + x * x).powi(2)
    }).collect();
    Ok(vec![
        ("dtn-h-routes", rel_l2(a.values(), b.values())),
        ("dtn-h-closed-form", rel_l2(b.values(), &exact).max(rel_l2(a.values(), &exact))),
    ])
}

fn check_poisson(c: &Ctx) -> Result<Vec<(&'static str, f64)>> {
    let grid = line(c.res.line_m, c.res.line_len)?;
    let eta = LineFunction::from_fn(&grid, |x| 1.0 / (1.0 + x * x));
    let mut rng = ChaCha8Rng::seed_from_u64(c.cfg.seed);
    let pts: Vec<FieldPoint> =
        (0..100).map(|_| FieldPoint::new(rng.random_range(-5.0..5.0), rng.random_range(0.05..3.0))).collect();
    let d = dirichlet_extend_h(&eta, &pts)?;
    Ok(vec![(
        "poisson-semigroup",
        pts.iter()
            .zip(&d)
            .map(|(p, v)| {
                let e = (1.0 + p.y) / (p.x * p.x + (1.0 + p.y).powi(2));
                ((v - e) / e).abs()
            })
            .fold(0.0, f64::max),
    )])
}

fn check_trace_limit(c: &Ctx) -> Result<Vec<(&'static str, f64)>> {
    let grid = line(c.res.line_m, c.res.line_len)?;
    let eta = LineFunction::from_fn(&grid, |x| (-x * x / 16.0).exp());
    let xs: Vec<f64> = (0..=1200).map(|k| -60.0 + 0.1 * k as f64).collect();
    let lam = lambda_h_at(&eta, &xs);
    let mut vals = vec![];
    for y in [0.2, 0.1, 0.05, 0.025] {
        let pts: Vec<FieldPoint> = xs.iter().map(|&x| FieldPoint::new(x, y)).collect();
        let gr = dirichlet_extend_h_grad(&eta, &pts)?;
        let s: f64 = gr.iter().zip(&lam).map(|(g, l)| (g[1] + l).powi(2)).sum::<f64>() * 0.1;
        vals.push(s.sqrt());
    }
    let up = vals.windows(2).filter(|w| !(w[1] < w[0])).count() as f64;
    Ok(vec![("trace-limit-monotone", up), ("trace-limit-final", vals[3] / eta.norm(NormKind::W12))])
}

/// Tensor Gauss–Legendre rule on [−b, b] × [0, b], graded toward y = 0 and
/// refined where the data live (|x| ≲ 10).
fn box_rule(b: f64, order: usize) -> Vec<(f64, f64, f64)> {
    let mut xb: Vec<f64> = (-20..=20).map(|k| 0.5 * k as f64).collect();
    let mut t = 10.0;
    while t < b {
        t = (t * 1.35).min(b);
        xb.push(t);
        xb.insert(0, -t);
    }
    let mut yb = vec![0.0];
    let mut y = 1e-3;
    while y < b {
        yb.push(y);
        y *= 1.8;
    }
    yb.push(b);
    let (xs, wx) = composite(&xb, order);
    let (ys, wy) = composite(&yb, order);
    let mut out = Vec::with_capacity(xs.len() * ys.len());
    for (x, a) in xs.iter().zip(&wx) {
        for (y, c) in ys.iter().zip(&wy) {
            out.push((*x, *y, a * c));
        }
    }
    out
}

fn grad_energy(e1: &LineFunction, e2: &LineFunction, b: f64, order: usize) -> Result<f64> {
    let rule = box_rule(b, order);
    let pts: Vec<FieldPoint> = rule.iter().map(|&(x, y, _)| FieldPoint::new(x, y)).collect();
    let g1 = dirichlet_extend_h_grad(e1, &pts)?;
    let g2 = if std::ptr::eq(e1, e2) { g1.clone() } else { dirichlet_extend_h_grad(e2, &pts)? };
    Ok(rule.iter().zip(g1.iter().zip(&g2)).map(|(r, (a, b))| r.2 * (a[0] * b[0] + a[1] * b[1])).sum())
}

fn check_halfplane_energy(_c: &Ctx) -> Result<Vec<(&'static str, f64)>> {
    let grid = line(20.0, 1 << 11)?;
    let e1 = LineFunction::from_fn(&grid, |x| (-x * x).exp());
    let e2 = LineFunction::from_fn(&grid, |x| (-0.5 * (x - 0.5).powi(2)).exp());
    let quad = grad_energy(&e1, &e2, 40.0, 6)?;
    let lam = lambda_h(&e1, LambdaHRoute::Multiplier);
    let form = lam.dot(&e2);
    Ok(vec![("halfplane-energy", ((quad - form) / form).abs())])
}

fn check_gradient_bound(c: &Ctx) -> Result<Vec<(&'static str, f64)>> {
    let grid = line(20.0, 1 << 11)?;
    let mut rng = ChaCha8Rng::seed_from_u64(c.cfg.seed ^ 0x5eed);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..c.res.random_eta {
        let modes: Vec<(f64, f64, f64)> = (0..3)
            .map(|_| (rng.random_range(-1.0..1.0), rng.random_range(0.0..3.0), rng.random_range(0.0..2.0 * PI)))
            .collect();
        let eta = LineFunction::from_fn(&grid, |x| {
            (-x * x / 4.0).exp() * modes.iter().map(|(a, k, p)| a * (k * x + p).cos()).sum::<f64>()
        });
        let lhs = grad_energy(&eta, &eta, 20.0, 4)?;
        let rhs = 0.5 * h_half_norm_sq(&eta);
        worst = worst.max(lhs - rhs);
    }
    Ok(vec![("gradient-bound", worst)])
}

fn check_omega_field(_c: &Ctx) -> Result<Vec<(&'static str, f64)>> {
    let grid = Arc::new(SurfaceGrid::new(20.0, 512)?);
    let v = SurfaceFunction::from_fn(&grid, |x| (0.3 + 0.7 * x.signum()) * (-0.5 * (x * x - 1.0).powi(2)).exp());
    let ext = OmegaExtension::new(&v);
    let trace = grid
        .nodes()
        .iter()
        .zip(v.values())
        .map(|(&x, &val)| ext.eval(FieldPoint::new(x, 0.0)).map(|d| (d - val).abs()))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let f = |x: f64, y: f64| ext.field(x, y);
    let thetas: Vec<f64> = (0..=40).map(|k| -1.4 + 2.8 * k as f64 / 40.0).collect();
    let neu = neumann_residual(&f, &thetas, 1e-3, &|_| 0.0)? / v.norm(NormKind::W12);
    let bx = FieldBox { x0: 1.2, x1: 3.0, y0: 0.6, y1: 2.0, samples: 6 };
    let r1 = harmonic_residual(&f, &bx, 0.04)?;
    let r2 = harmonic_residual(&f, &bx, 0.02)?;
    Ok(vec![("omega-trace", trace), ("omega-neumann", neu), ("omega-harmonic-order", (r1 / r2 - 4.0).abs())])
}

fn check_phi1(_c: &Ctx) -> Result<Vec<(&'static str, f64)>> {
    let f = |x: f64, y: f64| phi1(FieldPoint::new(x, y)).map(|p| p.0).unwrap_or(f64::NAN);
    let thetas: Vec<f64> = (0..=60).map(|k| -1.5 + 3.0 * k as f64 / 60.0).collect();
    let neu = neumann_residual(&f, &thetas, 1e-4, &|t: f64| t.cos())?;
    let bx = FieldBox { x0: 6.0, x1: 9.0, y0: 6.0, y1: 9.0, samples: 8 };
    let har = harmonic_residual(&f, &bx, 1e-3)?;
    Ok(vec![("phi1-neumann", neu), ("phi1-harmonic", har)])
}

fn check_dtn_routes(c: &Ctx) -> Result<Vec<(&'static str, f64)>> {
    let grid = Arc::new(SurfaceGrid::new(c.res.surf_l, c.res.surf_n)?);
    let ln = default_line(&grid);
    let w = grid.weights();
    let fs = route_test_functions();
    let errs: Vec<f64> = fs
        .par_iter()
        .map(|(_, f)| {
            let v = SurfaceFunction::from_fn(&grid, f);
            let a = lambda_omega_direct(&v)?.lambda;
            let b = lambda_omega_reflect(&v, &ln);
            Ok(weighted_rel_l2(&w, a.values(), b.values()))
        })
        .collect::<Result<_>>()?;
    let v = SurfaceFunction::from_fn(&grid, &fs[2].1);
    let mutated = lambda_omega_direct_with(&v, DirectOptions { reading: FormulaReading::Corrected, endpoint_sign: -1.0 })?;
    let b = lambda_omega_reflect(&v, &ln);
    Ok(vec![
        ("dtn-omega-routes", errs.iter().copied().fold(0.0, f64::max)),
        ("dtn-omega-mutation", weighted_rel_l2(&w, mutated.lambda.values(), b.values())),
    ])
}

fn operator(l: f64, n: usize) -> Result<DtnOperator> {
    let grid = Arc::new(SurfaceGrid::new(l, n)?);
    assemble_dtn(&grid, &DtnRoute::Variational, true)
}

fn check_operator(c: &Ctx) -> Result<Vec<(&'static str, f64)>> {
    let op = operator(20.0, c.res.op_n)?;
    let pos = 1.0 - op.min_eigenvalue(c.cfg.g)?;
    // power iteration for ‖(I + Λ)⁻¹‖ in the operator's L² norm
    let grid = op.grid().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(c.cfg.seed);
    let mut x = SurfaceFunction::new(grid.clone(), (0..grid.len()).map(|_| rng.random_range(-1.0..1.0)).collect())?;
    let norm = |v: &SurfaceFunction| op.inner(v.values(), v.values()).sqrt();
    let mut est = 0.0;
    for _ in 0..200 {
        let nx = norm(&x);
        let y = resolvent_solve(&x, 1.0, &op)?;
        est = norm(&y) / nx;
        let ny = norm(&y);
        x = SurfaceFunction::new(grid.clone(), y.values().iter().map(|a| a / ny).collect())?;
    }
    let vstar = SurfaceFunction::from_fn(&grid, |t| (-0.5 * (t * t - 1.0).powi(2)).exp() * (1.0 + 0.2 * t.signum()));
    let g = c.cfg.g;
    let lv = op.apply_sym(vstar.values());
    let f = SurfaceFunction::new(grid.clone(), vstar.values().iter().zip(&lv).map(|(a, b)| a + g * b).collect())?;
    let rec = resolvent_solve(&f, g, &op)?;
    Ok(vec![
        ("dtn-omega-symmetry", op.asymmetry_defect()),
        ("dtn-omega-positivity", pos),
        ("resolvent-norm", est),
        ("resolvent-recovery", rel_l2(rec.values(), vstar.values())),
    ])
}

fn check_omega_energy(c: &Ctx) -> Result<Vec<(&'static str, f64)>> {
    let grid = Arc::new(SurfaceGrid::new(20.0, c.res.energy_n)?);
    let op = assemble_dtn(&grid, &DtnRoute::Variational, false)?;
    // the quadrature only needs the field of a well-resolved interpolant
    let coarse = Arc::new(SurfaceGrid::new(20.0, 256)?);
    let q = |x: f64| x * x - 1.0;
    let pairs: [(Probe, Probe); 3] = [
        (Box::new(move |x| (-q(x).powi(2)).exp()), Box::new(move |x| (-q(x).powi(2)).exp())),
        (
            Box::new(move |x| (0.3 + 0.7 * x.signum()) * (-0.5 * q(x).powi(2)).exp()),
            Box::new(|x| (-(x - 3.0).powi(2)).exp()),
        ),
        (Box::new(move |x| (-q(x).powi(2)).exp()), Box::new(move |x| x.signum() * (-q(x).powi(2)).exp())),
    ];
    let vals: Vec<(f64, f64)> = pairs
        .iter()
        .map(|(a, b)| {
            let (v, u) = (SurfaceFunction::from_fn(&grid, a), SurfaceFunction::from_fn(&grid, b));
            let (vc, uc) = (SurfaceFunction::from_fn(&coarse, a), SurfaceFunction::from_fn(&coarse, b));
            Ok((dirichlet_energy(&vc, &uc, 50.0)?, op.form(v.values(), u.values())))
        })
        .collect::<Result<_>>()?;
    let rel = vals[..2].iter().map(|(a, b)| ((a - b) / b).abs()).fold(0.0, f64::max);
    Ok(vec![("omega-energy", rel), ("omega-energy-parity", vals[2].0.abs().max(vals[2].1.abs()))])
}

fn check_kernel(_c: &Ctx) -> Result<Vec<(&'static str, f64)>> {
    let fine = SurfaceGrid::new(200.0, 1 << 18)?;
    let w = fine.weights();
    let s: f64 = fine.nodes().iter().zip(&w).map(|(x, w)| w / x.powi(4)).sum();
    let grid = Arc::new(SurfaceGrid::new(50.0, 2048)?);
    let k = heave_kernel(&grid);
    let kv = k.values();
    let shape = (0..kv.len()).filter(|&i| !(kv[i] > 0.0) || kv[i] != kv[grid.mirror(i)]).count();
    let bound = grid
        .nodes()
        .iter()
        .filter(|&&x| x > 1.0)
        .filter(|&&x| kernel_i1(x) > kernel_i1_bound(x))
        .count();
    let far = grid
        .nodes()
        .iter()
        .zip(kv)
        .filter(|(x, _)| x.abs() >= 20.0)
        .map(|(x, k)| (2.0 * k * x * x / PI - 1.0).abs())
        .fold(0.0, f64::max);
    Ok(vec![
        ("sigma-norm", (s - 2.0 / 3.0).abs()),
        ("kernel-shape", shape as f64),
        ("kernel-i1-bound", bound as f64),
        ("kernel-far-field", far),
    ])
}

fn check_added_force(c: &Ctx) -> Result<Vec<(&'static str, f64)>> {
    let grid = Arc::new(SurfaceGrid::new(c.res.surf_l, c.res.surf_n)?);
    let k = heave_kernel(&grid);
    let u = SurfaceFunction::from_fn(&grid, |x| (-(x.abs() - 1.0)).exp());
    let a = added_force(&u, ForceRoute::Kernel, &k)?;
    let b = added_force(&u, ForceRoute::Field, &k)?;
    let params = PhysicsParams { g: c.cfg.g, ..Default::default() };
    let pn = |n: usize| -> Result<f64> {
        let op = operator(20.0, n)?;
        Ok(p_norm(&params, &op, &heave_kernel(op.grid())))
    };
    let (p1, p2) = (pn(192)?, pn(384)?);
    Ok(vec![("added-force-routes", ((a - b) / b).abs()), ("p-norm-stability", ((p1 - p2) / p2).abs())])
}

fn random_state(grid: &Arc<SurfaceGrid>, rng: &mut ChaCha8Rng) -> Result<SystemState> {
    let mut r = || (0..grid.len()).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<f64>>();
    let (v, u) = (r(), r());
    Ok(SystemState {
        v: SurfaceFunction::new(grid.clone(), v)?,
        h: rng.random_range(-1.0..1.0),
        u: SurfaceFunction::new(grid.clone(), u)?,
        l: rng.random_range(-1.0..1.0),
        t: 0.0,
    })
}

fn check_generator(c: &Ctx) -> Result<Vec<(&'static str, f64)>> {
    let op = operator(20.0, 128)?;
    let grid = op.grid().clone();
    let kernel = heave_kernel(&grid);
    let p = PhysicsParams { g: c.cfg.g, ..Default::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(c.cfg.seed);
    let at = |z: &SystemState| apply_a(z, &p, &op).axpy(1.0, &apply_q(z));
    let mut skew: f64 = 0.0;
    for _ in 0..20 {
        let z1 = random_state(&grid, &mut rng)?;
        let z2 = random_state(&grid, &mut rng)?;
        let (a1, a2) = (at(&z1), at(&z2));
        let s = x_inner(&a1, &z2, &p, &op) + x_inner(&z1, &a2, &p, &op);
        skew = skew.max(s.abs() / (energy(&a1, &p, &op) * energy(&z2, &p, &op)).sqrt());
    }
    let z = random_state(&grid, &mut rng)?;
    let st = Stepper::new(&op, &kernel, p, 0.01, Scheme::ImplicitMidpoint, Blocks::SKEW)?;
    let z1 = st.step(&z, &Forcing::Zero)?;
    let skew_step = (energy(&z1, &p, &op) / energy(&z, &p, &op) - 1.0).abs();
    let st = Stepper::new(&op, &kernel, p, 0.01, Scheme::ImplicitMidpoint, Blocks::DECOUPLED)?;
    let z1 = st.step(&z, &Forcing::Zero)?;
    let wave_step = (wave_energy(&z1, &p, &op) / wave_energy(&z, &p, &op) - 1.0).abs();
    let period = 2.0 * PI / p.heave_stiffness().sqrt();
    let st = Stepper::new(&op, &kernel, p, period / 1000.0, Scheme::ImplicitMidpoint, Blocks::DECOUPLED)?;
    let mut z = SystemState::zeros(&grid);
    z.h = 1.0;
    for _ in 0..1000 {
        z = st.step(&z, &Forcing::Zero)?;
    }
    Ok(vec![
        ("skew-adjoint", skew),
        ("skew-energy-step", skew_step),
        ("wave-energy-step", wave_step),
        ("heave-oscillator", (z.h - 1.0).abs()),
    ])
}

/// Coupled-run configuration used by the flow checks.
pub fn flow_config(n: usize, dt: f64, t_end: f64, g: f64) -> SimConfig {
    let mut c = SimConfig::new(20.0, n, dt, t_end);
    c.g = g;
    c.initial.h0 = 0.1;
    c.initial.v0 = Profile::Bump { even: 0.05, odd: 0.02, sharpness: 1.0 };
    c.initial.v1 = Profile::Bump { even: 0.0, odd: 0.03, sharpness: 0.5 };
    c
}

fn run(cfg: &SimConfig) -> Result<crate::coupling::Trajectory> {
    crate::coupling::simulate(cfg)
}

fn check_flow(c: &Ctx) -> Result<Vec<(&'static str, f64)>> {
    let g = c.cfg.g;
    // linearity and determinism on a small grid
    let base = flow_config(64, 0.02, 1.0, g);
    let op = crate::coupling::build_operator(&base)?;
    let kernel = heave_kernel(op.grid());
    let z0 = crate::coupling::initial_state(&base, op.grid())?;
    let a = simulate_with(&base, &op, &kernel, z0.clone(), 0.0)?;
    let b = simulate_with(&base, &op, &kernel, z0.clone(), 0.0)?;
    let bits = a
        .records
        .iter()
        .zip(&b.records)
        .flat_map(|(x, y)| x.row().into_iter().zip(y.row()))
        .filter(|(x, y)| x.to_bits() != y.to_bits())
        .count();
    let alpha = -2.5;
    let s = simulate_with(&base, &op, &kernel, z0.scaled(alpha), 0.0)?;
    let p = base.physics();
    let diff = s.final_state.axpy(-alpha, &a.final_state);
    let lin = (energy(&diff, &p, &op) / energy(&s.final_state, &p, &op)).sqrt();

    // self-convergence under joint (grid, dt) halving
    let mut hs = vec![];
    for (k, &n) in c.res.conv_n.iter().enumerate() {
        let dt = 0.02 / (1 << k) as f64;
        let tr = run(&flow_config(n, dt, 5.0, g))?;
        let stride = (0.5 / dt).round() as usize;
        let h: Vec<f64> = tr.records.iter().step_by(stride).map(|r| r.h).collect();
        let e: Vec<f64> = tr.records.iter().step_by(stride).map(|r| r.energy).collect();
        hs.push((h, e));
    }
    let d = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let oh = (d(&hs[0].0, &hs[1].0) / d(&hs[1].0, &hs[2].0)).log2();
    let oe = (d(&hs[0].1, &hs[1].1) / d(&hs[1].1, &hs[2].1)).log2();

    // growth over [0, 10]
    let gcfg = flow_config(128, 0.01, 10.0, g);
    let op = crate::coupling::build_operator(&gcfg)?;
    let kernel = heave_kernel(op.grid());
    let z0 = crate::coupling::initial_state(&gcfg, op.grid())?;
    let tr = simulate_with(&gcfg, &op, &kernel, z0, 0.0)?;
    let e0 = tr.records[0].energy;
    let omega = tr
        .records
        .iter()
        .filter(|r| r.t >= 1.0)
        .map(|r| 0.5 * (r.energy / e0).ln() / r.t)
        .fold(f64::NEG_INFINITY, f64::max);
    let bound = p_norm(&p, &op, &kernel) + q_norm(&p, &op)?;
    Ok(vec![
        ("flow-linearity", lin),
        ("flow-determinism", bits as f64),
        ("self-convergence", (oh - 2.0).abs().max((oe - 2.0).abs())),
        ("growth-bound", omega - bound),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerance_ids_are_unique() {
        let mut ids: Vec<&str> = TOLERANCES.iter().map(|t| t.id).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), TOLERANCES.len());
        assert!(TOLERANCES.iter().all(|t| t.tol >= 0.0 || t.cmp == Comparator::AtLeast));
    }

    #[test]
    fn stencil_residual_of_harmonic_polynomial_is_rounding() {
        let bx = FieldBox { x0: 2.0, x1: 3.0, y0: 1.0, y1: 2.0, samples: 4 };
        let r = harmonic_residual(&|x: f64, y: f64| x * x - y * y + 3.0 * x * y, &bx, 0.05).unwrap();
        assert!(r < 1e-9, "{r}");
        let r = harmonic_residual(&|x: f64, y: f64| x * x + y * y, &bx, 0.01).unwrap();
        assert!((r - 4.0).abs() < 1e-6, "{r}");
        let inside = FieldBox { x0: -0.5, x1: 0.5, y0: 0.5, y1: 0.6, samples: 2 };
        assert!(harmonic_residual(&|x, _| x, &inside, 0.01).is_err());
    }

    #[test]
    fn neumann_residual_of_phi1_vanishes() {
        // φ₁ = −cosθ/r, so ∂_r φ₁ = cosθ on r = 1
        let thetas = [-1.0, 0.0, 0.7];
        let f = |x: f64, y: f64| -y / (x * x + y * y);
        let r = neumann_residual(&f, &thetas, 1e-4, &|t: f64| t.cos()).unwrap();
        assert!(r < 1e-7, "{r}");
    }
}
