//! Galerkin matrix of the Ω energy form on P1 hats.
//!
//! ⟨Λ_Ω v, u⟩ = (1/π) ∫∫_{ℰ×ℰ} v′(t) u′(x) ln|(1 − x t)/(x − t)| dx dt,
//! so with cell slopes `D` the stiffness is `A = Dᵀ S D`, where `S` holds the
//! cell-pair integrals of the log kernel. The outermost hat on each side ramps
//! to zero over one extra cell past ±L.

use crate::grid_space::SurfaceGrid;
use crate::linalg::SymTridiag;
use crate::quad::{composite, gauss_legendre, graded_breaks};
use nalgebra::DMatrix;
use rayon::prelude::*;
use std::f64::consts::PI;

fn f1(u: f64) -> f64 {
    if u == 0.0 {
        0.0
    } else {
        u * u.abs().ln() - u
    }
}

fn f2(u: f64) -> f64 {
    if u == 0.0 {
        0.0
    } else {
        0.5 * u * u * u.abs().ln() - 0.75 * u * u
    }
}

/// ∫_{a}∫_{b} ln|x − t| dt dx, closed form.
pub(crate) fn log_diff_exact(a: (f64, f64), b: (f64, f64)) -> f64 {
    f2(a.1 - b.0) - f2(a.0 - b.0) - f2(a.1 - b.1) + f2(a.0 - b.1)
}

struct Rules {
    gx4: Vec<f64>,
    gw4: Vec<f64>,
    gx8: Vec<f64>,
    gw8: Vec<f64>,
    graded: (Vec<f64>, Vec<f64>),
}

impl Rules {
    fn new() -> Self {
        let (gx4, gw4) = gauss_legendre(4);
        let (gx8, gw8) = gauss_legendre(8);
        // on [0, 1], refined toward 0
        let graded = composite(&graded_breaks(0.0, 1.0, 24, 0.3), 8);
        Self { gx4, gw4, gx8, gw8, graded }
    }
}

fn cell_pair(a: (f64, f64), b: (f64, f64), h: f64, rules: &Rules) -> f64 {
    let ca = 0.5 * (a.0 + a.1);
    let cb = 0.5 * (b.0 + b.1);
    let (ha, hb) = (0.5 * (a.1 - a.0), 0.5 * (b.1 - b.0));
    let same_side = ca * cb > 0.0;

    let ldiff = if same_side && (ca - cb).abs() < 8.5 * h {
        log_diff_exact(a, b)
    } else {
        let mut s = 0.0;
        for i in 0..4 {
            let x = ca + ha * rules.gx4[i];
            for j in 0..4 {
                let t = cb + hb * rules.gx4[j];
                s += rules.gw4[i] * rules.gw4[j] * (x - t).abs().ln();
            }
        }
        s * ha * hb
    };

    // ∫_a ln|1 − x t| dx = |a| ln|t| + F1(a₁ − 1/t) − F1(a₀ − 1/t)
    let inner = |t: f64| (a.1 - a.0) * t.abs().ln() + f1(a.1 - 1.0 / t) - f1(a.0 - 1.0 / t);
    let corner = (b.0.abs() - 1.0).abs() < 1e-12 || (b.1.abs() - 1.0).abs() < 1e-12;
    let lprod = if corner {
        // singular point t = ±1 sits at the end of b with |b| = 1 nearest 0
        let (t0, dir) = if b.0.abs() < b.1.abs() { (b.0, b.1 - b.0) } else { (b.1, b.0 - b.1) };
        let (gx, gw) = &rules.graded;
        gx.iter().zip(gw).map(|(s, w)| w * inner(t0 + dir * s)).sum::<f64>() * dir.abs()
    } else {
        rules.gx8.iter().zip(&rules.gw8).map(|(s, w)| w * inner(cb + hb * s)).sum::<f64>() * hb
    };
    (lprod - ldiff) / PI
}

/// Cells in increasing x: `(left, right)` ends and the nodes at those ends.
pub(crate) struct Cells {
    pub ends: Vec<(f64, f64)>,
    pub nodes: Vec<(Option<usize>, Option<usize>)>,
    pub h: f64,
}

pub(crate) fn cells(grid: &SurfaceGrid) -> Cells {
    let n = grid.n();
    let h = grid.dx();
    let x = grid.nodes();
    let l = grid.l();
    let mut ends = Vec::with_capacity(2 * n);
    let mut nodes = Vec::with_capacity(2 * n);
    ends.push((-l - h, -l));
    nodes.push((None, Some(0)));
    for c in 1..n {
        ends.push((x[c - 1], x[c]));
        nodes.push((Some(c - 1), Some(c)));
    }
    for c in n..2 * n - 1 {
        ends.push((x[c], x[c + 1]));
        nodes.push((Some(c), Some(c + 1)));
    }
    ends.push((l, l + h));
    nodes.push((Some(2 * n - 1), None));
    Cells { ends, nodes, h }
}

/// Stiffness `A` and consistent mass `M` on the grid's hats.
pub fn assemble(grid: &SurfaceGrid) -> (DMatrix<f64>, SymTridiag) {
    let cl = cells(grid);
    let nc = cl.ends.len();
    let rules = Rules::new();
    let rows: Vec<Vec<f64>> = (0..nc)
        .into_par_iter()
        .map(|a| (0..nc).map(|b| cell_pair(cl.ends[a], cl.ends[b], cl.h, &rules)).collect())
        .collect();
    let mut s = DMatrix::<f64>::zeros(nc, nc);
    for a in 0..nc {
        for b in 0..nc {
            s[(a, b)] = 0.5 * (rows[a][b] + rows[b][a]);
        }
    }

    // node → [(cell, slope coefficient)]
    let nn = grid.len();
    let mut touch: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nn];
    for (c, (l, r)) in cl.nodes.iter().enumerate() {
        if let Some(l) = l {
            touch[*l].push((c, -1.0 / cl.h));
        }
        if let Some(r) = r {
            touch[*r].push((c, 1.0 / cl.h));
        }
    }
    // T = S D
    let mut t = DMatrix::<f64>::zeros(nc, nn);
    for j in 0..nn {
        for &(d, coef) in &touch[j] {
            for c in 0..nc {
                t[(c, j)] += coef * s[(d, c)];
            }
        }
    }
    let mut a = DMatrix::<f64>::zeros(nn, nn);
    for j in 0..nn {
        for i in 0..nn {
            let mut v = 0.0;
            for &(c, coef) in &touch[i] {
                v += coef * t[(c, j)];
            }
            a[(i, j)] = v;
        }
    }
    let a = (&a + a.transpose()) * 0.5;

    let mut m = SymTridiag::diagonal(vec![0.0; nn]);
    for (l, r) in &cl.nodes {
        match (l, r) {
            (Some(l), Some(r)) => {
                m.diag[*l] += cl.h / 3.0;
                m.diag[*r] += cl.h / 3.0;
                m.off[*l] += cl.h / 6.0;
            }
            (Some(i), None) | (None, Some(i)) => m.diag[*i] += cl.h / 3.0,
            (None, None) => {}
        }
    }
    (a, m)
}
