//! The half-plane ℍ: Poisson kernel, harmonic extension D_ℍ, Hilbert
//! transform 𝓗 and the Dirichlet-to-Neumann map Λ_ℍ, each by a kernel route
//! and a spectral route.

use crate::error::{invalid, Result};
use crate::grid_space::{FieldPoint, LineFunction};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use std::f64::consts::PI;

pub fn poisson_kernel(x: f64, y: f64, xt: f64) -> Result<f64> {
    if !(y > 0.0) {
        return Err(invalid(format!("Poisson kernel needs y > 0 (got {y})")));
    }
    Ok(y / (PI * ((x - xt) * (x - xt) + y * y)))
}

fn check_upper(points: &[FieldPoint]) -> Result<()> {
    match points.iter().find(|p| !(p.y >= 0.0)) {
        Some(p) => Err(invalid(format!("point ({}, {}) lies below the axis", p.x, p.y))),
        None => Ok(()),
    }
}

/// D_ℍη at each point: the Poisson integral of the cubic interpolant of η
/// (product integration, so it stays accurate as y → 0); η itself on y = 0.
pub fn dirichlet_extend_h(eta: &LineFunction, points: &[FieldPoint]) -> Result<Vec<f64>> {
    check_upper(points)?;
    let p = eta.cubic_interpolant();
    Ok(points
        .par_iter()
        .map(|pt| {
            if pt.y == 0.0 {
                eta.interp(pt.x)
            } else {
                p.cauchy(Complex64::new(pt.x, pt.y)).im / PI
            }
        })
        .collect())
}

/// ∇D_ℍη at points with y > 0, from the derivative of the Cauchy integral.
pub fn dirichlet_extend_h_grad(eta: &LineFunction, points: &[FieldPoint]) -> Result<Vec<[f64; 2]>> {
    if let Some(p) = points.iter().find(|p| !(p.y > 0.0)) {
        return Err(invalid(format!("gradient needs y > 0 (got {})", p.y)));
    }
    let p = eta.cubic_interpolant();
    Ok(points
        .par_iter()
        .map(|pt| {
            let d = p.cauchy_deriv(Complex64::new(pt.x, pt.y));
            [d.im / PI, d.re / PI]
        })
        .collect())
}

/// Output of [`hilbert_pv`].
#[derive(Clone, Debug)]
pub struct PvOutput {
    pub values: Vec<f64>,
    /// Targets farther than M outside [−M, M]; tail truncation dominates there.
    pub far_targets: Vec<f64>,
}

/// (1/π) P.V.∫ f(x̃)/(x − x̃) dx̃ for the piecewise-linear interpolant of f.
pub fn hilbert_pv(f: &LineFunction, targets: &[f64]) -> PvOutput {
    let p = f.linear_interpolant();
    let m = f.grid().m();
    let values = targets.par_iter().map(|&x| -p.cauchy_pv(x).0 / PI).collect();
    let far_targets = targets.iter().copied().filter(|x| x.abs() > 2.0 * m).collect();
    PvOutput { values, far_targets }
}

/// Knobs of the spectral route. The default zero-pads by 4, tapers when the
/// data do not vanish at ±M, and adds the leading periodization correction,
/// so the result approximates the transform on ℝ rather than on the circle.
#[derive(Clone, Copy, Debug)]
pub struct SpectralOptions {
    pub pad: usize,
    pub taper: bool,
    pub line_correction: bool,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self { pad: 4, taper: true, line_correction: true }
    }
}

impl SpectralOptions {
    /// The bare discrete multiplier: no padding, taper or correction.
    pub fn periodic() -> Self {
        Self { pad: 1, taper: false, line_correction: false }
    }
}

#[derive(Clone, Debug)]
pub struct FftOutput {
    pub values: LineFunction,
    /// Largest imaginary part left after the inverse transform.
    pub imag_residue: f64,
}

/// Padded discrete spectrum of a line function.
struct Spectrum {
    coef: Vec<Complex64>,
    period: f64,
    x0: f64,
    dx: f64,
    n: usize,
    // ∫f and ∫x f of the (tapered) data
    m0: f64,
    m1: f64,
}

impl Spectrum {
    fn new(f: &LineFunction, opts: SpectralOptions) -> Self {
        let g = f.grid();
        let n = g.len();
        let np = n * opts.pad.max(1);
        let mut data: Vec<f64> = f.values().to_vec();
        if opts.taper && data[0].abs().max(data[n - 1].abs()) > 1e-12 {
            let m = g.m();
            for (k, d) in data.iter_mut().enumerate() {
                let a = g.x(k).abs();
                if a > 0.9 * m {
                    *d *= 0.5 * (1.0 + (PI * (a - 0.9 * m) / (0.1 * m)).cos());
                }
            }
        }
        let m0 = data.iter().sum::<f64>() * g.dx();
        let m1 = data.iter().enumerate().map(|(k, d)| g.x(k) * d).sum::<f64>() * g.dx();
        let mut coef = vec![Complex64::new(0.0, 0.0); np];
        for (c, d) in coef.iter_mut().zip(&data) {
            c.re = *d;
        }
        FftPlanner::new().plan_fft_forward(np).process(&mut coef);
        Self { coef, period: np as f64 * g.dx(), x0: g.x(0), dx: g.dx(), n, m0, m1 }
    }

    fn xi(&self, k: usize) -> Option<f64> {
        let np = self.coef.len();
        let w = 2.0 * PI / self.period;
        match k.cmp(&(np / 2)) {
            std::cmp::Ordering::Less => Some(w * k as f64),
            std::cmp::Ordering::Greater => Some(-w * (np - k) as f64),
            std::cmp::Ordering::Equal => None,
        }
    }

    fn apply(&mut self, mult: impl Fn(f64) -> Complex64) {
        for k in 0..self.coef.len() {
            let m = match self.xi(k) {
                Some(xi) => mult(xi),
                None => Complex64::new(0.0, 0.0),
            };
            self.coef[k] *= m;
        }
    }

    /// Inverse transform restricted to the original nodes.
    fn inverse(mut self) -> (Vec<f64>, f64) {
        let np = self.coef.len();
        FftPlanner::new().plan_fft_inverse(np).process(&mut self.coef);
        let scale = 1.0 / np as f64;
        let imag = self.coef[..self.n].iter().map(|c| (c.im * scale).abs()).fold(0.0, f64::max);
        (self.coef[..self.n].iter().map(|c| c.re * scale).collect(), imag)
    }

    /// Trigonometric interpolant of the (multiplied) spectrum at `x`.
    fn eval(&self, x: f64) -> f64 {
        let np = self.coef.len();
        let w = 2.0 * PI / self.period;
        let step = Complex64::from_polar(1.0, w * (x - self.x0));
        let mut rot = Complex64::new(1.0, 0.0);
        let mut acc = self.coef[0].re;
        for k in 1..np / 2 {
            rot *= step;
            if k % 64 == 0 {
                rot = Complex64::from_polar(1.0, w * k as f64 * (x - self.x0));
            }
            // coefficient k and its conjugate partner np − k
            acc += 2.0 * (self.coef[k] * rot).re;
        }
        acc / np as f64
    }

    fn hilbert_correction(&self, x: f64) -> f64 {
        PI / (3.0 * self.period * self.period) * (x * self.m0 - self.m1)
    }
}

/// 𝓗f by the multiplier −i·sign(ξ), sign(0) = 0.
pub fn hilbert_fft(f: &LineFunction) -> FftOutput {
    hilbert_fft_with(f, SpectralOptions::default())
}

pub fn hilbert_fft_with(f: &LineFunction, opts: SpectralOptions) -> FftOutput {
    let mut s = Spectrum::new(f, opts);
    s.apply(|xi| Complex64::new(0.0, -xi.signum()));
    let dx = s.dx;
    let x0 = s.x0;
    let corr: Vec<f64> = (0..s.n).map(|k| s.hilbert_correction(x0 + k as f64 * dx)).collect();
    let (mut v, imag) = s.inverse();
    if opts.line_correction {
        v.iter_mut().zip(&corr).for_each(|(v, c)| *v += c);
    }
    FftOutput { values: f.with_values(v), imag_residue: imag }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LambdaHRoute {
    /// 𝓗(η′) with η′ by finite differences.
    Hilbert,
    /// The multiplier |ξ|.
    Multiplier,
}

/// Λ_ℍη on the line nodes.
pub fn lambda_h(eta: &LineFunction, route: LambdaHRoute) -> LineFunction {
    lambda_h_with(eta, route, SpectralOptions::default())
}

pub fn lambda_h_with(eta: &LineFunction, route: LambdaHRoute, opts: SpectralOptions) -> LineFunction {
    match route {
        LambdaHRoute::Hilbert => {
            let eta = if opts.taper { tapered(eta) } else { eta.clone() };
            hilbert_fft_with(&eta.derivative(), SpectralOptions { taper: false, ..opts }).values
        }
        LambdaHRoute::Multiplier => {
            let mut s = Spectrum::new(eta, opts);
            s.apply(|xi| Complex64::new(xi.abs(), 0.0));
            // 𝓗(η′) correction with ∫η′ = 0 and ∫xη′ = −∫η
            let c = PI / (3.0 * s.period * s.period) * s.m0;
            let (mut v, _) = s.inverse();
            if opts.line_correction {
                v.iter_mut().for_each(|v| *v += c);
            }
            eta.with_values(v)
        }
    }
}

/// Λ_ℍη by the multiplier route, evaluated at arbitrary abscissae through
/// the trigonometric interpolant (no resampling error at off-grid points).
pub fn lambda_h_at(eta: &LineFunction, targets: &[f64]) -> Vec<f64> {
    let opts = SpectralOptions::default();
    let mut s = Spectrum::new(eta, opts);
    s.apply(|xi| Complex64::new(xi.abs(), 0.0));
    let c = PI / (3.0 * s.period * s.period) * s.m0;
    targets.par_iter().map(|&x| s.eval(x) + c).collect()
}

fn tapered(f: &LineFunction) -> LineFunction {
    let g = f.grid();
    let n = g.len();
    let v = f.values();
    if v[0].abs().max(v[n - 1].abs()) <= 1e-12 {
        return f.clone();
    }
    let m = g.m();
    f.with_values(
        v.iter()
            .enumerate()
            .map(|(k, d)| {
                let a = g.x(k).abs();
                if a > 0.9 * m {
                    d * 0.5 * (1.0 + (PI * (a - 0.9 * m) / (0.1 * m)).cos())
                } else {
                    *d
                }
            })
            .collect(),
    )
}

/// ∫(1 + |ξ|)|η̂(ξ)|² dξ, the squared H^{1/2}(ℝ) norm on the Fourier side.
pub fn h_half_norm_sq(eta: &LineFunction) -> f64 {
    let s = Spectrum::new(eta, SpectralOptions { pad: 1, taper: false, line_correction: false });
    let dxi = 2.0 * PI / s.period;
    (0..s.coef.len())
        .map(|k| {
            let xi = s.xi(k).unwrap_or(PI / s.dx);
            (1.0 + xi.abs()) * (s.coef[k] * s.dx).norm_sqr() * dxi
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_space::LineGrid;
    use std::sync::Arc;

    fn line(m: f64, n: usize) -> Arc<LineGrid> {
        Arc::new(LineGrid::new(m, n).unwrap())
    }

    #[test]
    fn kernel_basics() {
        assert!((poisson_kernel(0.0, 1.0, 0.0).unwrap() - 1.0 / PI).abs() < 1e-16);
        assert!(poisson_kernel(0.0, 0.0, 0.0).is_err());
        assert!(poisson_kernel(3.0, 1e-3, -40.0).unwrap() > 0.0);
    }

    #[test]
    fn kernel_has_unit_mass() {
        // antiderivative (1/π) atan((x̃ − x)/y)
        let (x, y) = (0.3, 0.7);
        let b = crate::quad::graded_breaks(0.0, 1e4, 60, 0.75);
        let (t, w) = crate::quad::composite(&b, 16);
        let mut s = 0.0;
        for (t, w) in t.iter().zip(&w) {
            s += w * (poisson_kernel(x, y, x + t).unwrap() + poisson_kernel(x, y, x - t).unwrap());
        }
        let exact = 2.0 / PI * (1e4 / y).atan();
        assert!((s - exact).abs() < 1e-12);
        assert!((s - 1.0).abs() < 1e-4);
    }

    #[test]
    fn constant_data_extends_to_constant() {
        let g = line(50.0, 4096);
        let eta = LineFunction::from_fn(&g, |_| 2.5);
        let v = dirichlet_extend_h(&eta, &[FieldPoint::new(0.2, 0.5)]).unwrap();
        assert!((v[0] - 2.5).abs() < 0.05);
        assert!(dirichlet_extend_h(&eta, &[FieldPoint::new(0.0, -0.1)]).is_err());
    }

    #[test]
    fn hilbert_pv_basics() {
        let g = line(100.0, 1 << 14);
        let z = LineFunction::from_fn(&g, |_| 0.0);
        assert!(hilbert_pv(&z, &[0.0, 1.0]).values.iter().all(|v| *v == 0.0));
        let f = LineFunction::from_fn(&g, |x| (-x * x).exp());
        let t = [0.3, 1.7, 2.2];
        let neg: Vec<f64> = t.iter().map(|x| -x).collect();
        let a = hilbert_pv(&f, &t).values;
        let b = hilbert_pv(&f, &neg).values;
        for (a, b) in a.iter().zip(&b) {
            assert!((a + b).abs() < 1e-10);
        }
        assert_eq!(hilbert_pv(&f, &[500.0]).far_targets, vec![500.0]);
    }

    #[test]
    fn discrete_multiplier_squares_to_minus_one() {
        let g = line(20.0, 1024);
        let f = LineFunction::from_fn(&g, |x| (-x * x).exp() * (1.0 + x));
        let o = SpectralOptions::periodic();
        let hh = hilbert_fft_with(&hilbert_fft_with(&f, o).values, o).values;
        let mean = f.values().iter().sum::<f64>() / f.values().len() as f64;
        for (a, b) in hh.values().iter().zip(f.values()) {
            assert!((a + b - mean).abs() < 1e-10);
        }
    }

    #[test]
    fn lambda_h_of_zero() {
        let g = line(10.0, 256);
        let z = LineFunction::from_fn(&g, |_| 0.0);
        for r in [LambdaHRoute::Hilbert, LambdaHRoute::Multiplier] {
            assert!(lambda_h(&z, r).values().iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn off_grid_evaluation_matches_nodes() {
        let g = line(30.0, 2048);
        let eta = LineFunction::from_fn(&g, |x| 1.0 / (1.0 + x * x));
        let nodal = lambda_h(&eta, LambdaHRoute::Multiplier);
        let xs: Vec<f64> = (900..1100).step_by(7).map(|k| g.x(k)).collect();
        let at = lambda_h_at(&eta, &xs);
        for (x, a) in xs.iter().zip(&at) {
            let k = ((x + 30.0) / g.dx()).round() as usize;
            assert!((a - nodal.values()[k]).abs() < 1e-10);
        }
    }
}
