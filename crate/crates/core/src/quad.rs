//! Gauss–Legendre rules and a few small quadrature helpers.

use std::f64::consts::PI;

/// Nodes and weights of the `m`-point Gauss–Legendre rule on [−1, 1].
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1);
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    for i in 0..(m + 1) / 2 {
        let mut z = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(m, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(m, z);
        if d != 0.0 {
            dp = d;
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[m - 1 - i] = z;
        w[i] = wi;
        w[m - 1 - i] = wi;
    }
    (x, w)
}

fn legendre(m: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    for k in 2..=m {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if m == 0 {
        return (1.0, 0.0);
    }
    let d = m as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Composite rule: `m`-point Gauss–Legendre on each cell of `breaks`.
pub fn composite(breaks: &[f64], m: usize) -> (Vec<f64>, Vec<f64>) {
    let (gx, gw) = gauss_legendre(m);
    let mut x = Vec::with_capacity(m * breaks.len());
    let mut w = Vec::with_capacity(m * breaks.len());
    for c in breaks.windows(2) {
        let (mid, half) = (0.5 * (c[0] + c[1]), 0.5 * (c[1] - c[0]));
        for k in 0..m {
            x.push(mid + half * gx[k]);
            w.push(half * gw[k]);
        }
    }
    (x, w)
}

/// Breakpoints on [a, b] refined geometrically (ratio `q`, `levels` cells)
/// toward `a`.
pub fn graded_breaks(a: f64, b: f64, levels: usize, q: f64) -> Vec<f64> {
    let mut out = vec![a];
    let len = b - a;
    for k in (0..levels).rev() {
        out.push(a + len * q.powi(k as i32));
    }
    out
}
