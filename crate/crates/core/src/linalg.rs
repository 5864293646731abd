//! Small dense/tridiagonal helpers around nalgebra.

use nalgebra::{DMatrix, SymmetricEigen};

/// Symmetric tridiagonal matrix; `off[i]` couples rows i and i + 1.
#[derive(Clone, Debug)]
pub struct SymTridiag {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl SymTridiag {
    pub fn diagonal(d: Vec<f64>) -> Self {
        let n = d.len();
        Self { diag: d, off: vec![0.0; n.saturating_sub(1)] }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let n = self.diag.len();
        let mut y: Vec<f64> = (0..n).map(|i| self.diag[i] * x[i]).collect();
        for i in 0..n - 1 {
            y[i] += self.off[i] * x[i + 1];
            y[i + 1] += self.off[i] * x[i];
        }
        y
    }

    pub fn dot(&self, x: &[f64], y: &[f64]) -> f64 {
        self.mul(x).iter().zip(y).map(|(a, b)| a * b).sum()
    }

    /// Lower bidiagonal Cholesky factor (diagonal, subdiagonal).
    pub fn cholesky(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        let n = self.diag.len();
        let mut d = vec![0.0; n];
        let mut s = vec![0.0; n.saturating_sub(1)];
        for i in 0..n {
            let mut a = self.diag[i];
            if i > 0 {
                s[i - 1] = self.off[i - 1] / d[i - 1];
                a -= s[i - 1] * s[i - 1];
            }
            if !(a > 0.0) {
                return None;
            }
            d[i] = a.sqrt();
        }
        Some((d, s))
    }

    /// Solves `self · x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (d, s) = self.cholesky().expect("mass matrix must be positive definite");
        let mut y = forward(&d, &s, b);
        backward_in_place(&d, &s, &mut y);
        y
    }
}

fn forward(d: &[f64], s: &[f64], b: &[f64]) -> Vec<f64> {
    let mut y = b.to_vec();
    for i in 0..y.len() {
        if i > 0 {
            y[i] -= s[i - 1] * y[i - 1];
        }
        y[i] /= d[i];
    }
    y
}

fn backward_in_place(d: &[f64], s: &[f64], y: &mut [f64]) {
    let n = y.len();
    for i in (0..n).rev() {
        if i + 1 < n {
            y[i] -= s[i] * y[i + 1];
        }
        y[i] /= d[i];
    }
}

/// Generalized symmetric eigenpairs `A v = λ M v` with `VᵀMV = I`.
#[derive(Clone, Debug)]
pub struct GenEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl GenEigen {
    pub fn new(a: &DMatrix<f64>, m: &SymTridiag) -> Option<Self> {
        let n = m.len();
        let (d, s) = m.cholesky()?;
        // B = L⁻¹ A L⁻ᵀ
        let mut x = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            let col: Vec<f64> = a.column(j).iter().copied().collect();
            x.set_column(j, &nalgebra::DVector::from_vec(forward(&d, &s, &col)));
        }
        let xt = x.transpose();
        let mut b = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            let col: Vec<f64> = xt.column(j).iter().copied().collect();
            b.set_column(j, &nalgebra::DVector::from_vec(forward(&d, &s, &col)));
        }
        let b = (&b + b.transpose()) * 0.5;
        let eig = SymmetricEigen::new(b);
        let mut v = eig.eigenvectors;
        for j in 0..n {
            let mut col: Vec<f64> = v.column(j).iter().copied().collect();
            backward_in_place(&d, &s, &mut col);
            v.set_column(j, &nalgebra::DVector::from_vec(col));
        }
        Some(Self { values: eig.eigenvalues.iter().copied().collect(), vectors: v })
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Solves `(αM + βA) x = b` through the eigenbasis.
    pub fn solve_shifted(&self, alpha: f64, beta: f64, b: &[f64]) -> Vec<f64> {
        let n = self.values.len();
        let v = &self.vectors;
        let mut c = vec![0.0; n];
        for k in 0..n {
            let col = v.column(k);
            let mut s = 0.0;
            for i in 0..n {
                s += col[i] * b[i];
            }
            c[k] = s / (alpha + beta * self.values[k]);
        }
        let mut x = vec![0.0; n];
        for k in 0..n {
            let col = v.column(k);
            let ck = c[k];
            for i in 0..n {
                x[i] += col[i] * ck;
            }
        }
        x
    }
}

/// Dense matrix–vector product with a fixed summation order.
pub fn matvec(a: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    let (r, c) = a.shape();
    let mut y = vec![0.0; r];
    for j in 0..c {
        let xj = x[j];
        if xj == 0.0 {
            continue;
        }
        let col = a.column(j);
        for i in 0..r {
            y[i] += col[i] * xj;
        }
    }
    y
}

/// Spectral-norm estimate by power iteration on `AᵀA`.
pub fn spectral_norm(a: &DMatrix<f64>, iters: usize) -> f64 {
    let n = a.ncols();
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    for (i, xi) in x.iter_mut().enumerate() {
        *xi *= 1.0 + 0.1 * ((i * 7919) % 13) as f64 / 13.0;
    }
    let at = a.transpose();
    let mut est = 0.0;
    for _ in 0..iters {
        let y = matvec(a, &x);
        let z = matvec(&at, &y);
        let nz = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        if nz == 0.0 {
            return 0.0;
        }
        est = nz.sqrt();
        x = z.iter().map(|v| v / nz).collect();
    }
    est
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generalized_eigenpairs() {
        let n = 6;
        let m = SymTridiag { diag: vec![2.0; n], off: vec![0.5; n - 1] };
        let a = DMatrix::from_fn(n, n, |i, j| 1.0 / (1.0 + (i as f64 - j as f64).abs()));
        let e = GenEigen::new(&a, &m).unwrap();
        for k in 0..n {
            let v: Vec<f64> = e.vectors.column(k).iter().copied().collect();
            let av = matvec(&a, &v);
            let mv = m.mul(&v);
            for i in 0..n {
                assert!((av[i] - e.values[k] * mv[i]).abs() < 1e-12);
            }
            assert!((m.dot(&v, &v) - 1.0).abs() < 1e-12);
        }
        let b: Vec<f64> = (0..n).map(|i| i as f64 - 2.0).collect();
        let x = e.solve_shifted(1.0, 3.0, &b);
        let r: Vec<f64> = m.mul(&x).iter().zip(matvec(&a, &x)).map(|(p, q)| p + 3.0 * q).collect();
        for i in 0..n {
            assert!((r[i] - b[i]).abs() < 1e-12);
        }
        let y = m.solve(&b);
        let back = m.mul(&y);
        for i in 0..n {
            assert!((back[i] - b[i]).abs() < 1e-13);
        }
    }
}
