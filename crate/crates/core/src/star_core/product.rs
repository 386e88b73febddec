use crate::error::{Error, Result};

use super::delta::{Coeff, DeltaSeries};
use super::discrete;
use super::grid::Grid;
use super::kernel::Kernel;
use super::object::StarObject;

pub const DEFAULT_M_MAX: usize = 8;

/// `(p ∗ q)(t′,t) = ∫ p(t′,τ) q(τ,t) dτ`.
pub fn star_product(p: &StarObject, q: &StarObject) -> Result<StarObject> {
    star_product_capped(p, q, DEFAULT_M_MAX)
}

pub fn star_product_capped(p: &StarObject, q: &StarObject, m_max: usize) -> Result<StarObject> {
    p.grid().check_same(q.grid())?;
    let g = *p.grid();
    if p.is_discrete() || q.is_discrete() {
        let m = discrete::product(&p.to_discrete()?, &q.to_discrete()?, &g);
        return Ok(StarObject::discrete(&g, m));
    }
    let mut kernel: Option<Kernel> = None;
    let mut deltas = DeltaSeries::empty();
    let mut push_kernel = |k: Kernel| {
        kernel = Some(match kernel.take() {
            Some(acc) => acc.add(&k),
            None => k,
        });
    };
    if let (Some(a), Some(b)) = (p.kernel(), q.kernel()) {
        push_kernel(kernel_kernel(a, b));
    }
    if let (Some(d), Some(f)) = (p.deltas(), q.kernel()) {
        let (k, s) = delta_kernel(d, f)?;
        push_kernel(k);
        deltas = deltas.add(&s, &g)?;
    }
    if let (Some(f), Some(d)) = (p.kernel(), q.deltas()) {
        let (k, s) = kernel_delta(f, d)?;
        push_kernel(k);
        deltas = deltas.add(&s, &g)?;
    }
    if let (Some(a), Some(b)) = (p.deltas(), q.deltas()) {
        deltas = deltas.add(&delta_delta(a, b, &g)?, &g)?;
    }
    if let Some(order) = deltas.order() {
        if order > m_max {
            return Err(Error::DeltaOrderOverflow { order, cap: m_max });
        }
    }
    Ok(StarObject::new(&g, kernel, Some(deltas)))
}

/// Trapezoid rule on `[t, t′]`; the result vanishes on the diagonal.
pub fn kernel_kernel(a: &Kernel, b: &Kernel) -> Kernel {
    let g = *a.grid();
    let mut c = discrete::product(&discrete::from_kernel(a), &discrete::from_kernel(b), &g);
    c.set_diag(&vec![0.0; g.n()]);
    Kernel::from_samples(&g, c)
}

/// `Σ c_m(t′) δ^{(m)} ∗ f̃Θ`.
fn delta_kernel(d: &DeltaSeries, f: &Kernel) -> Result<(Kernel, DeltaSeries)> {
    let g = *f.grid();
    let mut kernel = Kernel::zero(&g);
    let mut deltas = DeltaSeries::empty();
    let top = d.order().unwrap_or(0);
    let mut diags: Vec<Coeff> = Vec::with_capacity(top);
    let mut fd = f.clone();
    for (m, c) in d.coeffs().iter().enumerate() {
        while diags.len() < m {
            diags.push(fd.diag_coeff());
            fd = fd.d_tp(1)?;
        }
        if c.is_zero() {
            continue;
        }
        kernel = kernel.add(&fd.mul_left(c)?);
        for (a, e) in diags.iter().enumerate() {
            let s = DeltaSeries::from_right_coefficient(e, m - 1 - a, &g);
            deltas = deltas.add(&s.mul_left(c, &g)?, &g)?;
        }
    }
    Ok((kernel, deltas))
}

/// `f̃Θ ∗ Σ c_m(t′) δ^{(m)}`.
fn kernel_delta(f: &Kernel, d: &DeltaSeries) -> Result<(Kernel, DeltaSeries)> {
    let g = *f.grid();
    let mut kernel = Kernel::zero(&g);
    let mut deltas = DeltaSeries::empty();
    for (m, c) in d.coeffs().iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let mut y = f.mul_right(c)?;
        let mut coeffs = vec![Coeff::zero(); m];
        for a in 0..m {
            let sign = if a % 2 == 0 { 1.0 } else { -1.0 };
            coeffs[m - 1 - a] = y.diag_coeff().scale(sign);
            y = y.d_t(1)?;
        }
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        kernel = kernel.add(&y.scale(sign));
        deltas = deltas.add(&DeltaSeries::new(coeffs), &g)?;
    }
    Ok((kernel, deltas))
}

fn delta_delta(a: &DeltaSeries, b: &DeltaSeries, g: &Grid) -> Result<DeltaSeries> {
    let mut out = DeltaSeries::empty();
    for (m, c) in a.coeffs().iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        out = out.add(&b.differentiate(m, g)?.mul_left(c, g)?, g)?;
    }
    Ok(out)
}

/// Kernel part of `p ∗ φ`.
pub fn apply_to_test(p: &StarObject, phi: &Kernel) -> Result<Kernel> {
    let r = star_product(p, &StarObject::from_kernel(phi.clone()))?;
    Ok(match r.kernel() {
        Some(k) => k.clone(),
        None => Kernel::from_samples(phi.grid(), r.kernel_samples()),
    })
}

/// `F(t′) = ∫_{t_j}^{t′} p(τ, t_j) dτ` for every node `t′ ≥ t_j` (entries
/// below `j` are zero).
pub fn integrate_rows(p: &StarObject, j: usize) -> Result<Vec<f64>> {
    let g = *p.grid();
    let n = g.n();
    if j >= n {
        return Err(Error::Invalid(format!("node index {j} out of range 0..{n}")));
    }
    let h = g.h();
    let mut out = vec![0.0; n];
    if let Some(m) = p.discrete_matrix() {
        let mut acc = 0.0;
        for i in j..n {
            if i > j {
                acc += h * m.get(i - 1, j);
            }
            out[i] = acc + 0.5 * h * m.get(i, j);
            if i == j {
                out[i] = h * m.get(j, j);
            }
        }
        return Ok(out);
    }
    let mut base = 0.0;
    if let Some(d) = p.deltas() {
        for (m, c) in d.coeffs().iter().enumerate() {
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            base += sign * c.derivative(&g, m).eval(&g, j)?;
        }
    }
    let col: Vec<f64> = match p.kernel() {
        Some(k) => k.samples().column(j),
        None => vec![0.0; n - j],
    };
    let mut acc = 0.0;
    out[j] = base;
    for i in j + 1..n {
        acc += 0.5 * h * (col[i - j - 1] + col[i - j]);
        out[i] = base + acc;
    }
    Ok(out)
}

/// Convenience: the kernel of `p` restricted to a node pair.
pub fn evaluate(p: &StarObject, i: usize, j: usize) -> f64 {
    if i < j {
        return 0.0;
    }
    match (p.discrete_matrix(), p.kernel()) {
        (Some(m), _) => {
            let v = m.get(i, j);
            if i == j {
                2.0 * v
            } else {
                v
            }
        }
        (None, Some(k)) => k.get(i, j),
        (None, None) => 0.0,
    }
}
