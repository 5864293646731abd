//! Ω = upper half-plane minus the unit disk: the Dirichlet operator D_Ω, the
//! cylinder potential φ₁, the Dirichlet-to-Neumann map Λ_Ω (reflection route,
//! direct singular-integral route, Galerkin matrix), energies and resolvents.

pub mod galerkin;

use crate::cauchy::Piecewise;
use crate::error::{invalid, Error, Result};
use crate::grid_space::{reflect_extend, FieldPoint, LineGrid, SurfaceFunction, SurfaceGrid};
use crate::halfplane::lambda_h_at;
use crate::linalg::{matvec, spectral_norm, GenEigen, SymTridiag};
use crate::quad::{composite, graded_breaks};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

/// φ₁(x, y) = −y/(x² + y²) and its gradient.
pub fn phi1(p: FieldPoint) -> Result<(f64, [f64; 2])> {
    let r2 = p.x * p.x + p.y * p.y;
    if r2 == 0.0 {
        return Err(invalid("φ₁ is singular at the origin"));
    }
    let r4 = r2 * r2;
    Ok((-p.y / r2, [2.0 * p.x * p.y / r4, (p.y * p.y - p.x * p.x) / r4]))
}

/// D_Ω v as a reusable field: the two-image Poisson integral of the cubic
/// interpolant of v,
/// (1/π) Im[C(z) + C(1/z̄)],  C(z) = ∫_ℰ v(t)/(t − z) dt.
pub struct OmegaExtension {
    v: SurfaceFunction,
    p: Piecewise,
}

impl OmegaExtension {
    pub fn new(v: &SurfaceFunction) -> Self {
        Self { v: v.clone(), p: v.interpolant() }
    }

    pub fn eval(&self, pt: FieldPoint) -> Result<f64> {
        if !(pt.y >= 0.0) || pt.x * pt.x + pt.y * pt.y < 1.0 - 1e-12 {
            return Err(invalid(format!("point ({}, {}) is outside Ω̄", pt.x, pt.y)));
        }
        if pt.y == 0.0 {
            return Ok(self.v.sampler().eval(pt.x));
        }
        Ok(self.field(pt.x, pt.y))
    }

    /// Kernel formula without domain checks (needs y > 0); harmonic in the
    /// whole open upper half-plane.
    pub fn field(&self, x: f64, y: f64) -> f64 {
        let z = Complex64::new(x, y);
        let w = z / z.norm_sqr();
        (self.p.cauchy(z).im + self.p.cauchy(w).im) / PI
    }
}

pub fn dirichlet_extend_omega(v: &SurfaceFunction, points: &[FieldPoint]) -> Result<Vec<f64>> {
    let ext = OmegaExtension::new(v);
    points.par_iter().map(|p| ext.eval(*p)).collect()
}

/// A line grid fine enough for the reflection route on `grid`:
/// M = max(2L, 4) and spacing about half the surface spacing.
pub fn default_line(grid: &SurfaceGrid) -> Arc<LineGrid> {
    let m = (2.0 * grid.l()).max(4.0);
    let want = (0.95 * 4.0 * m / grid.dx()).ceil() as usize;
    Arc::new(LineGrid::new(m, want.next_power_of_two().max(1024)).expect("valid line"))
}

/// Λ_Ω v = (Λ_ℍ η(v))|_ℰ, with Λ_ℍ by the |ξ| multiplier evaluated at the
/// surface nodes.
pub fn lambda_omega_reflect(v: &SurfaceFunction, line: &Arc<LineGrid>) -> SurfaceFunction {
    let eta = reflect_extend(v, line);
    let vals = lambda_h_at(&eta, v.grid().nodes());
    SurfaceFunction::new(v.grid().clone(), vals).expect("finite output")
}

/// Which reading of the singular-integral formula to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FormulaReading {
    /// 𝓗g(x) + x⁻²𝓗g(1/x) + (v(1) − v(−1))/(πx): agrees with the reflection route.
    Corrected,
    /// −𝓗g(x) − x⁻²𝓗g(1/x) − (v(1) − v(−1))/(πx): overall sign reversed.
    SignFlipped,
    /// −(h₁ + h₂)/π with h₂ = (v(1) − v(−1))/x + x⁻²𝓗g(1/x), π on the wrong terms.
    Literal,
}

#[derive(Clone, Copy, Debug)]
pub struct DirectOptions {
    pub reading: FormulaReading,
    /// Multiplies the endpoint term; −1 is the sign-flip mutation.
    pub endpoint_sign: f64,
}

impl Default for DirectOptions {
    fn default() -> Self {
        Self { reading: FormulaReading::Corrected, endpoint_sign: 1.0 }
    }
}

#[derive(Clone, Debug)]
pub struct DirectOutput {
    pub lambda: SurfaceFunction,
    /// h₁(x) = P.V.∫_ℰ g(x̃)/(x − x̃) dx̃ = π𝓗g(x).
    pub h1: SurfaceFunction,
    /// h₂(x) = ∫_{−1}^{1} η′(x̃)/(x − x̃) dx̃ = (v(1) − v(−1))/x + π x⁻² 𝓗g(1/x).
    pub h2: SurfaceFunction,
    /// Coefficient of the log singularity of 𝓗g at ±1, i.e. v′(±1)/π; the
    /// nodal values at ±1 are finite parts when it is nonzero.
    pub corner_log_coefficient: (f64, f64),
}

/// Λ_Ω v from 𝓗 of g(v) = v′ extended by zero, evaluated on ℰ and at 1/x.
///
/// g is differentiated to fourth order and interpolated by cubic Hermite
/// cells, whose principal values are exact.
pub fn lambda_omega_direct(v: &SurfaceFunction) -> Result<DirectOutput> {
    lambda_omega_direct_with(v, DirectOptions::default())
}

pub fn lambda_omega_direct_with(v: &SurfaceFunction, opts: DirectOptions) -> Result<DirectOutput> {
    let grid = v.grid();
    let (im, ip) = grid.endpoint_indices();
    if grid.nodes()[ip] != 1.0 || grid.nodes()[im] != -1.0 {
        return Err(invalid("surface grid lacks the endpoint nodes ±1"));
    }
    let g = v.derivative(4);
    let gp = g.interpolant();
    let x = grid.nodes();
    let hg = |t: f64| -> (f64, f64) {
        let (c, lc) = gp.cauchy_pv(t);
        (-c / PI, lc)
    };
    let rows: Vec<((f64, f64), (f64, f64))> = x.par_iter().map(|&xi| (hg(xi), hg(1.0 / xi))).collect();
    let jump = opts.endpoint_sign * (v.values()[ip] - v.values()[im]);
    let mut lam = vec![0.0; x.len()];
    let mut h1 = vec![0.0; x.len()];
    let mut h2 = vec![0.0; x.len()];
    for (i, &xi) in x.iter().enumerate() {
        let (hx, hr) = (rows[i].0 .0, rows[i].1 .0);
        h1[i] = PI * hx;
        h2[i] = jump / xi + PI * hr / (xi * xi);
        lam[i] = match opts.reading {
            FormulaReading::Corrected => (h1[i] + h2[i]) / PI,
            FormulaReading::SignFlipped => -hx - hr / (xi * xi) - jump / (PI * xi),
            FormulaReading::Literal => -(h1[i] + jump / xi + hr / (xi * xi)) / PI,
        };
    }
    // 𝓗g = −(1/π)·C_pv; the finite-part coefficient of ln|t − x| in C_pv
    let corner = (-rows[im].0 .1 / PI, -rows[ip].0 .1 / PI);
    Ok(DirectOutput {
        lambda: v.with_values(lam),
        h1: v.with_values(h1),
        h2: v.with_values(h2),
        corner_log_coefficient: corner,
    })
}

/// How the matrix of Λ_Ω is built.
#[derive(Clone, Debug)]
pub enum DtnRoute {
    /// Galerkin matrix of the energy form with consistent mass (symmetric by
    /// construction).
    Variational,
    /// Reflection route applied to every nodal unit vector.
    Reflect(Arc<LineGrid>),
    /// Singular-integral route applied to every nodal unit vector.
    Direct,
}

impl DtnRoute {
    pub fn name(&self) -> &'static str {
        match self {
            DtnRoute::Variational => "variational",
            DtnRoute::Reflect(_) => "reflect",
            DtnRoute::Direct => "direct",
        }
    }
}

/// Largest tolerated ‖skew part‖/‖matrix‖ before factorization is refused.
pub const MAX_ASYMMETRY: f64 = 1e-3;

/// Dense realization of Λ_Ω on a surface grid.
///
/// `matrix` maps nodal values to nodal values of Λ_Ω v. The discrete L²
/// inner product is `⟨u, w⟩ = uᵀ·mass·w`; `stiffness` is the symmetrized
/// `mass·matrix`, so Λ_Ω is self-adjoint in that inner product.
#[derive(Clone, Debug)]
pub struct DtnOperator {
    grid: Arc<SurfaceGrid>,
    route: &'static str,
    matrix: DMatrix<f64>,
    stiffness: DMatrix<f64>,
    mass: SymTridiag,
    asymmetry_defect: f64,
    eigen: Option<GenEigen>,
    refusal: Option<String>,
}

pub fn assemble_dtn(grid: &Arc<SurfaceGrid>, route: &DtnRoute, factorize: bool) -> Result<DtnOperator> {
    let n = grid.len();
    let (matrix, stiffness, mass, defect) = match route {
        DtnRoute::Variational => {
            let (a, m) = galerkin::assemble(grid);
            let mut lam = DMatrix::<f64>::zeros(n, n);
            for j in 0..n {
                let col: Vec<f64> = a.column(j).iter().copied().collect();
                lam.set_column(j, &nalgebra::DVector::from_vec(m.solve(&col)));
            }
            let skew = (&a - a.transpose()) * 0.5;
            let defect = spectral_norm(&skew, 30) / spectral_norm(&a, 30).max(f64::MIN_POSITIVE);
            (lam, a, m, defect)
        }
        DtnRoute::Reflect(_) | DtnRoute::Direct => {
            let cols: Vec<Vec<f64>> = (0..n)
                .into_par_iter()
                .map(|j| {
                    let mut e = vec![0.0; n];
                    e[j] = 1.0;
                    let v = SurfaceFunction::new(grid.clone(), e).expect("unit vector");
                    match route {
                        DtnRoute::Reflect(line) => lambda_omega_reflect(&v, line).into_values(),
                        _ => lambda_omega_direct(&v).expect("grid has ±1").lambda.into_values(),
                    }
                })
                .collect();
            let lam = DMatrix::from_fn(n, n, |i, j| cols[j][i]);
            let w = grid.weights();
            let wl = DMatrix::from_fn(n, n, |i, j| w[i] * lam[(i, j)]);
            let skew = (&wl - wl.transpose()) * 0.5;
            let sym = (&wl + wl.transpose()) * 0.5;
            let defect = spectral_norm(&skew, 30) / spectral_norm(&wl, 30).max(f64::MIN_POSITIVE);
            (lam, sym, SymTridiag::diagonal(w), defect)
        }
    };
    let mut op = DtnOperator {
        grid: grid.clone(),
        route: route.name(),
        matrix,
        stiffness,
        mass,
        asymmetry_defect: defect,
        eigen: None,
        refusal: None,
    };
    if factorize {
        op.factorize();
    }
    Ok(op)
}

#[derive(Clone, Debug, Serialize)]
pub struct DtnDiagnostics {
    pub route: String,
    pub l: f64,
    pub n: usize,
    pub asymmetry_defect: f64,
    pub min_eigenvalue: Option<f64>,
    pub max_eigenvalue: Option<f64>,
    pub factorization_refused: Option<String>,
}

impl DtnOperator {
    pub fn grid(&self) -> &Arc<SurfaceGrid> {
        &self.grid
    }
    pub fn route(&self) -> &'static str {
        self.route
    }
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }
    pub fn stiffness(&self) -> &DMatrix<f64> {
        &self.stiffness
    }
    pub fn mass(&self) -> &SymTridiag {
        &self.mass
    }
    pub fn asymmetry_defect(&self) -> f64 {
        self.asymmetry_defect
    }
    pub fn eigen(&self) -> Result<&GenEigen> {
        self.eigen.as_ref().ok_or_else(|| {
            Error::Solver(self.refusal.clone().unwrap_or_else(|| "operator not factorized".into()))
        })
    }

    /// Generalized eigen-decomposition of (stiffness, mass), unless the
    /// matrix is too far from symmetric.
    pub fn factorize(&mut self) {
        if self.eigen.is_some() {
            return;
        }
        if self.asymmetry_defect > MAX_ASYMMETRY {
            self.refusal = Some(format!(
                "asymmetry defect {:.3e} exceeds {:.1e}; refusing to factorize",
                self.asymmetry_defect, MAX_ASYMMETRY
            ));
            return;
        }
        match GenEigen::new(&self.stiffness, &self.mass) {
            Some(e) => self.eigen = Some(e),
            None => self.refusal = Some("mass matrix is not positive definite".into()),
        }
    }

    pub fn diagnostics(&self) -> DtnDiagnostics {
        DtnDiagnostics {
            route: self.route.into(),
            l: self.grid.l(),
            n: self.grid.n(),
            asymmetry_defect: self.asymmetry_defect,
            min_eigenvalue: self.eigen.as_ref().map(|e| e.min_value()),
            max_eigenvalue: self.eigen.as_ref().map(|e| e.max_value()),
            factorization_refused: self.refusal.clone(),
        }
    }

    /// Nodal Λ_Ω v.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        matvec(&self.matrix, v)
    }

    /// Λ_Ω v through the symmetrized form, mass⁻¹·stiffness·v.
    pub fn apply_sym(&self, v: &[f64]) -> Vec<f64> {
        self.mass.solve(&matvec(&self.stiffness, v))
    }

    pub fn apply_fn(&self, v: &SurfaceFunction) -> Result<SurfaceFunction> {
        self.check(v)?;
        Ok(v.with_values(self.apply(v.values())))
    }

    /// ⟨u, w⟩ in the operator's discrete L² inner product.
    pub fn inner(&self, u: &[f64], w: &[f64]) -> f64 {
        self.mass.dot(u, w)
    }

    /// ⟨Λ u, w⟩ through the symmetric stiffness.
    pub fn form(&self, u: &[f64], w: &[f64]) -> f64 {
        matvec(&self.stiffness, u).iter().zip(w).map(|(a, b)| a * b).sum()
    }

    /// Smallest eigenvalue of I + g·Λ_Ω.
    pub fn min_eigenvalue(&self, g: f64) -> Result<f64> {
        Ok(1.0 + g * self.eigen()?.min_value())
    }

    fn check(&self, v: &SurfaceFunction) -> Result<()> {
        if **v.grid() != *self.grid {
            return Err(Error::GridMismatch("function and operator live on different grids".into()));
        }
        Ok(())
    }

    /// Writes the matrix as CSV (`.csv`) or little-endian f64 rows (anything
    /// else), plus `<path>.json` with grid and diagnostics.
    pub fn dump(&self, path: &Path) -> Result<()> {
        let n = self.matrix.nrows();
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        let csv = path.extension().is_some_and(|e| e == "csv");
        for i in 0..n {
            if csv {
                let row: Vec<String> = (0..n).map(|j| format!("{:.16e}", self.matrix[(i, j)])).collect();
                writeln!(f, "{}", row.join(","))?;
            } else {
                for j in 0..n {
                    f.write_all(&self.matrix[(i, j)].to_le_bytes())?;
                }
            }
        }
        f.flush()?;
        let header = serde_json::json!({
            "rows": n,
            "cols": n,
            "format": if csv { "csv" } else { "f64-le-row-major" },
            "nodes": self.grid.nodes(),
            "diagnostics": self.diagnostics(),
        });
        let mut hp = path.as_os_str().to_owned();
        hp.push(".json");
        std::fs::write(hp, serde_json::to_string_pretty(&header).expect("json"))?;
        Ok(())
    }
}

/// Solves (I + gΛ_Ω) v = f.
pub fn resolvent_solve(f: &SurfaceFunction, g: f64, op: &DtnOperator) -> Result<SurfaceFunction> {
    op.check(f)?;
    if !(g >= 0.0) {
        return Err(invalid(format!("g must be non-negative (got {g})")));
    }
    let e = op.eigen()?;
    let mf = op.mass.mul(f.values());
    let v = e.solve_shifted(1.0, g, &mf);
    let av = matvec(&op.stiffness, &v);
    let r = op.mass.mul(&v);
    let res: f64 = r.iter().zip(&av).zip(&mf).map(|((a, b), c)| (a + g * b - c).powi(2)).sum::<f64>().sqrt();
    let scale = mf.iter().map(|x| x * x).sum::<f64>().sqrt();
    if scale > 0.0 && res / scale > 1e-10 {
        let cond = (1.0 + g * e.max_value()) / (1.0 + g * e.min_value());
        return Err(Error::Solver(format!(
            "resolvent residual {:.2e} (condition estimate {cond:.2e})",
            res / scale
        )));
    }
    Ok(f.with_values(v))
}

/// ‖(I + gΛ_Ω)^{1/2} v‖ = ⟨(I + gΛ_Ω)v, v⟩^{1/2}.
pub fn sqrt_norm(v: &SurfaceFunction, g: f64, op: &DtnOperator) -> Result<f64> {
    op.check(v)?;
    let x = v.values();
    let q = op.inner(x, x) + if g == 0.0 { 0.0 } else { g * op.form(x, x) };
    Ok(q.max(0.0).sqrt())
}

/// Quadrature for [`dirichlet_energy`] on the log-polar rectangle
/// ρ = ln r ∈ [0, ln R], θ ∈ [−π/2, π/2], where the Dirichlet integral reads
/// ∫∫ (ψ_ρ φ_ρ + ψ_θ φ_θ) dρ dθ.
#[derive(Clone, Copy, Debug)]
pub struct EnergyQuadrature {
    pub rho_levels: usize,
    pub theta_levels: usize,
    pub order: usize,
    pub step: f64,
}

impl Default for EnergyQuadrature {
    fn default() -> Self {
        Self { rho_levels: 12, theta_levels: 10, order: 6, step: 1e-5 }
    }
}

/// ∫_{Ω ∩ {r < R}} ∇(D_Ω v)·∇(D_Ω u), gradients by centered differences.
pub fn dirichlet_energy(v: &SurfaceFunction, u: &SurfaceFunction, r_max: f64) -> Result<f64> {
    dirichlet_energy_with(v, u, r_max, EnergyQuadrature::default())
}

pub fn dirichlet_energy_with(
    v: &SurfaceFunction,
    u: &SurfaceFunction,
    r_max: f64,
    q: EnergyQuadrature,
) -> Result<f64> {
    if !(r_max > 1.0) {
        return Err(invalid(format!("outer radius must exceed 1 (got {r_max})")));
    }
    let ev = OmegaExtension::new(v);
    let eu = OmegaExtension::new(u);
    let (rho, wr) = composite(&graded_breaks(0.0, r_max.ln(), q.rho_levels, 0.6), q.order);
    let half = graded_breaks(FRAC_PI_2, 0.0, q.theta_levels, 0.5);
    let mut tb: Vec<f64> = half.iter().map(|t| -t).collect();
    tb.extend(half.iter().rev().skip(1));
    let (th, wt) = composite(&tb, q.order);
    let at = |e: &OmegaExtension, rho: f64, th: f64| {
        let r = rho.exp();
        e.field(r * th.sin(), r * th.cos())
    };
    let total: f64 = (0..th.len())
        .into_par_iter()
        .map(|j| {
            let t = th[j];
            let dt = q.step.min(0.25 * (FRAC_PI_2 - t.abs()));
            let mut s = 0.0;
            for (i, &p) in rho.iter().enumerate() {
                let dr = q.step;
                let grad = |e: &OmegaExtension| {
                    (
                        (at(e, p + dr, t) - at(e, p - dr, t)) / (2.0 * dr),
                        (at(e, p, t + dt) - at(e, p, t - dt)) / (2.0 * dt),
                    )
                };
                let (vr, vt) = grad(&ev);
                let (ur, ut) = grad(&eu);
                s += wr[i] * (vr * ur + vt * ut);
            }
            wt[j] * s
        })
        .collect::<Vec<_>>()
        .iter()
        .sum();
    Ok(total)
}
