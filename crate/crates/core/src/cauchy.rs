//! Cauchy integrals of piecewise polynomials.
//!
//! Every kernel integral in the crate (Poisson, Hilbert, the two-image D_Ω
//! kernel) is `Im` or `Re` of `C(z) = ∫ p(t)/(t − z) dt` for some piecewise
//! polynomial `p`. Cells close to `z` are integrated in closed form, the rest
//! with a fixed Gauss rule, so the result is an exactly harmonic function of
//! `z` and stays accurate as `Im z → 0`.

use crate::quad::gauss_legendre;
use num_complex::Complex64;

#[derive(Clone, Copy, Debug)]
struct Cell {
    c: f64,
    hw: f64,
    // p(c + hw·s) = p[0] + p[1] s + p[2] s² + p[3] s³,  s ∈ [−1, 1]
    p: [f64; 4],
    far: usize,
}

/// Piecewise cubic (or lower) polynomial with compact support.
#[derive(Clone, Debug)]
pub struct Piecewise {
    cells: Vec<Cell>,
    far_t: Vec<f64>,
    far_w: Vec<f64>,
    gx: Vec<f64>,
    gw: Vec<f64>,
    near: f64,
}

impl Piecewise {
    fn with_order(m: usize, near: f64) -> Self {
        let (gx, gw) = gauss_legendre(m);
        Self { cells: Vec::new(), far_t: Vec::new(), far_w: Vec::new(), gx, gw, near }
    }

    /// Empty container for cells of degree ≤ 1.
    pub fn linear() -> Self {
        Self::with_order(6, 8.0)
    }

    /// Empty container for cells of degree ≤ 3.
    pub fn cubic() -> Self {
        Self::with_order(8, 4.0)
    }

    fn push(&mut self, c: f64, hw: f64, p: [f64; 4]) {
        let far = self.far_t.len();
        for (s, w) in self.gx.iter().zip(&self.gw) {
            let val = p[0] + s * (p[1] + s * (p[2] + s * p[3]));
            self.far_t.push(c + hw * s);
            self.far_w.push(w * hw * val);
        }
        self.cells.push(Cell { c, hw, p, far });
    }

    pub fn push_linear(&mut self, t0: f64, t1: f64, y0: f64, y1: f64) {
        let (c, hw) = (0.5 * (t0 + t1), 0.5 * (t1 - t0));
        self.push(c, hw, [0.5 * (y0 + y1), 0.5 * (y1 - y0), 0.0, 0.0]);
    }

    /// Cubic Hermite cell from end values `y` and end slopes `d` (per unit t).
    pub fn push_hermite(&mut self, t0: f64, t1: f64, y: [f64; 2], d: [f64; 2]) {
        let (c, hw) = (0.5 * (t0 + t1), 0.5 * (t1 - t0));
        let (d0, d1) = (d[0] * hw, d[1] * hw);
        let p2 = 0.25 * (d1 - d0);
        let p3 = 0.25 * ((d0 + d1) - (y[1] - y[0]));
        self.push(c, hw, [0.5 * (y[0] + y[1]) - p2, 0.5 * (y[1] - y[0]) - p3, p2, p3]);
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Point value; zero outside the support.
    pub fn eval(&self, t: f64) -> f64 {
        for cell in &self.cells {
            let s = (t - cell.c) / cell.hw;
            if (-1.0..=1.0).contains(&s) {
                return horner(&cell.p, s);
            }
        }
        0.0
    }

    /// `∫ p(t) dt`.
    pub fn integral(&self) -> f64 {
        self.cells.iter().map(|c| c.hw * (2.0 * c.p[0] + 2.0 / 3.0 * c.p[2])).sum()
    }

    /// `C(z) = ∫ p(t)/(t − z) dt` for `Im z > 0`.
    pub fn cauchy(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        let m = self.gx.len();
        for cell in &self.cells {
            let zs = (z - cell.c) / cell.hw;
            if zs.norm_sqr() < self.near * self.near {
                acc += near_complex(&cell.p, zs);
            } else {
                for k in cell.far..cell.far + m {
                    acc += self.far_w[k] / (self.far_t[k] - z);
                }
            }
        }
        acc
    }

    /// `C'(z) = ∫ p(t)/(t − z)² dt` for `Im z > 0`.
    pub fn cauchy_deriv(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        let m = self.gx.len();
        for cell in &self.cells {
            let zs = (z - cell.c) / cell.hw;
            if zs.norm_sqr() < self.near * self.near {
                let p = &cell.p;
                let dp = [p[1], 2.0 * p[2], 3.0 * p[3], 0.0];
                let ends = -horner(p, 1.0) / (1.0 - zs) + horner(p, -1.0) / (-1.0 - zs);
                acc += (ends + near_complex(&dp, zs)) / cell.hw;
            } else {
                for k in cell.far..cell.far + m {
                    let d = self.far_t[k] - z;
                    acc += self.far_w[k] / (d * d);
                }
            }
        }
        acc
    }

    /// Principal value `PV ∫ p(t)/(t − x) dt` at a real point.
    ///
    /// Where `x` sits on a support end (or a jump) the log-divergent part is
    /// dropped (Hadamard finite part); its coefficient is returned second.
    pub fn cauchy_pv(&self, x: f64) -> (f64, f64) {
        let mut acc = 0.0;
        let mut log_coef = 0.0;
        let m = self.gx.len();
        for cell in &self.cells {
            let zs = (x - cell.c) / cell.hw;
            if zs.abs() < self.near {
                let (pz, q) = divide(&cell.p, Complex64::new(zs, 0.0));
                let pz = pz.re;
                let lg = |d: f64, sign: f64, coef: &mut f64| {
                    if d.abs() < 1e-12 {
                        *coef += sign * pz;
                        -cell.hw.ln()
                    } else {
                        d.abs().ln()
                    }
                };
                let a = lg(1.0 - zs, 1.0, &mut log_coef);
                let b = lg(-1.0 - zs, -1.0, &mut log_coef);
                acc += pz * (a - b) + 2.0 * q[0].re + 2.0 / 3.0 * q[2].re;
            } else {
                for k in cell.far..cell.far + m {
                    acc += self.far_w[k] / (self.far_t[k] - x);
                }
            }
        }
        (acc, log_coef)
    }
}

fn horner(p: &[f64; 4], s: f64) -> f64 {
    p[0] + s * (p[1] + s * (p[2] + s * p[3]))
}

// p(s) = p(zs) + (s − zs) q(s)
fn divide(p: &[f64; 4], zs: Complex64) -> (Complex64, [Complex64; 3]) {
    let q2 = Complex64::new(p[3], 0.0);
    let q1 = p[2] + zs * q2;
    let q0 = p[1] + zs * q1;
    (p[0] + zs * q0, [q0, q1, q2])
}

fn near_complex(p: &[f64; 4], zs: Complex64) -> Complex64 {
    let (pz, q) = divide(p, zs);
    // both 1 − zs and −1 − zs lie in the open lower half-plane: no branch cut
    let lg = (1.0 - zs).ln() - (-1.0 - zs).ln();
    pz * lg + 2.0 * q[0] + 2.0 / 3.0 * q[2]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::composite;

    fn brute(p: &Piecewise, a: f64, b: f64, f: impl Fn(f64) -> Complex64) -> Complex64 {
        let br: Vec<f64> = (0..=4000).map(|k| a + (b - a) * k as f64 / 4000.0).collect();
        let (x, w) = composite(&br, 16);
        x.iter().zip(&w).map(|(&t, &w)| w * p.eval(t) * f(t)).sum()
    }

    #[test]
    fn cauchy_matches_brute_force_near_and_far() {
        let mut p = Piecewise::cubic();
        p.push_hermite(0.0, 0.5, [1.0, 2.0], [0.3, -1.0]);
        p.push_hermite(0.5, 1.0, [2.0, 0.5], [-1.0, 4.0]);
        for z in [
            Complex64::new(0.3, 0.2),
            Complex64::new(0.5, 0.05),
            Complex64::new(-2.0, 1.0),
            Complex64::new(7.0, 0.01),
        ] {
            let c = p.cauchy(z);
            let b = brute(&p, 0.0, 1.0, |t| 1.0 / (t - z));
            assert!((c - b).norm() < 1e-11 * b.norm().max(1.0), "{z}: {c} vs {b}");
            let d = p.cauchy_deriv(z);
            let bd = brute(&p, 0.0, 1.0, |t| 1.0 / ((t - z) * (t - z)));
            assert!((d - bd).norm() < 1e-9 * bd.norm().max(1.0), "{z}: {d} vs {bd}");
        }
    }

    #[test]
    fn pv_of_constant_is_log_ratio() {
        let mut p = Piecewise::linear();
        for k in 0..10 {
            let t = k as f64 * 0.1;
            p.push_linear(t, t + 0.1, 1.0, 1.0);
        }
        for x in [0.25, 0.3, 0.55] {
            let (v, lc) = p.cauchy_pv(x);
            let exact = ((1.0 - x) / x).ln();
            assert!((v - exact).abs() < 1e-12, "{x}: {v} vs {exact}");
            assert!(lc.abs() < 1e-14);
        }
        // finite part at the support end: coefficient of ln|t − x| is −p(0)
        let (_, lc) = p.cauchy_pv(0.0);
        assert!((lc + 1.0).abs() < 1e-14);
    }

    #[test]
    fn pv_is_boundary_limit_of_real_part() {
        let mut p = Piecewise::cubic();
        p.push_hermite(-1.0, 0.0, [0.0, 1.0], [1.0, 0.0]);
        p.push_hermite(0.0, 1.0, [1.0, 0.0], [0.0, -1.0]);
        let x = 0.37;
        let (pv, _) = p.cauchy_pv(x);
        let c = p.cauchy(Complex64::new(x, 1e-9));
        assert!((pv - c.re).abs() < 1e-7);
        // Plemelj: Im C(x + i0) = π p(x)
        assert!((c.im - std::f64::consts::PI * p.eval(x)).abs() < 1e-7);
    }
}
