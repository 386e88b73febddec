//! Matrix form of the algebra: `X ⋆ Y = h·X·Y`, identity `I/h`, and kernels
//! carried with halved diagonals so that products follow the trapezoid rule.

use crate::error::{Error, Result};

use super::delta::DeltaSeries;
use super::grid::Grid;
use super::kernel::Kernel;
use super::tri::Tri;

pub fn identity(g: &Grid) -> Tri {
    Tri::diagonal(&vec![1.0 / g.h(); g.n()])
}

pub fn from_kernel(k: &Kernel) -> Tri {
    let mut m = k.samples().clone();
    m.scale_diag(0.5);
    m
}

/// Kernel samples of a discrete object (diagonal restored to full weight).
pub fn to_kernel_samples(x: &Tri) -> Tri {
    let mut m = x.clone();
    m.scale_diag(2.0);
    m
}

pub fn product(x: &Tri, y: &Tri, g: &Grid) -> Tri {
    x.matmul(y).scale(g.h())
}

/// First column of the Toeplitz matrix representing `δ^{(m)}`.
fn derivative_column(g: &Grid, m: usize) -> Vec<f64> {
    let n = g.n();
    let h = g.h();
    let mut col = vec![0.0; n];
    col[0] = 1.0 / h;
    if m == 0 {
        return col;
    }
    // Inverse of the halved-diagonal Θ matrix, scaled by h⁻².
    let d: Vec<f64> = (0..n)
        .map(|k| match k {
            0 => 2.0 / (h * h),
            _ => 4.0 * if k % 2 == 0 { 1.0 } else { -1.0 } / (h * h),
        })
        .collect();
    col = d.clone();
    for _ in 1..m {
        let prev = col;
        col = (0..n).map(|i| h * (0..=i).map(|k| d[k] * prev[i - k]).sum::<f64>()).collect();
    }
    col
}

pub fn from_deltas(d: &DeltaSeries, g: &Grid) -> Result<Tri> {
    let mut out = Tri::zeros(g.n());
    for (m, c) in d.coeffs().iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let col = derivative_column(g, m);
        let t = if m == 0 { Tri::diagonal(&col[..1].repeat(g.n())) } else { Tri::toeplitz(&col) };
        out = out.add(&t.scale_rows(&c.samples(g)?));
    }
    Ok(out)
}

/// Inverse under `⋆` together with the 1-norm condition number of `x`.
pub fn inverse(x: &Tri, g: &Grid) -> Result<(Tri, f64)> {
    let inv = x.inverse()?;
    let cond = x.norm1() * inv.norm1();
    if !cond.is_finite() {
        return Err(Error::Singular { node: 0 });
    }
    let h = g.h();
    Ok((inv.scale(1.0 / (h * h)), cond))
}

/// `(1_* − x)^{⋆−1}` in matrix form.
pub fn resolvent(x: &Tri, g: &Grid) -> Result<Tri> {
    let e = identity(g);
    let (r, _) = inverse(&e.sub(x), g)?;
    Ok(r)
}
