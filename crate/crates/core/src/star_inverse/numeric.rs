use crate::error::{Error, Result};
use crate::expr::TimeExpr;
use crate::par;
use crate::settings::Settings;
use crate::star_core::discrete;
use crate::star_core::{star_product_capped, Coeff, DeltaSeries, Kernel, StarObject, Tri};

use super::Inverse;

/// Matrix-form inverse with its 1-norm condition estimate.
#[derive(Clone, Debug)]
pub struct NumericInverse {
    pub object: StarObject,
    pub cond: f64,
    /// Nodes whose pivot vanished and was replaced by the nearest regular one.
    pub excluded: Vec<usize>,
}

fn masked_pivots(diag: &[f64]) -> Result<Vec<(usize, f64)>> {
    let m = diag.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if !(m > 0.0) || !m.is_finite() {
        return Err(Error::Singular { node: 0 });
    }
    let good: Vec<usize> = (0..diag.len()).filter(|&i| diag[i].abs() >= 1e-12 * m).collect();
    Ok((0..diag.len())
        .filter(|&i| diag[i].abs() < 1e-12 * m)
        .map(|i| {
            let j = *good.iter().min_by_key(|&&j| j.abs_diff(i)).expect("nonzero pivot exists");
            (i, diag[j])
        })
        .collect())
}

/// Inverse of any object in the discrete algebra.
pub fn invert_discrete(x: &StarObject, settings: &Settings) -> Result<NumericInverse> {
    let g = *x.grid();
    let mut m = x.to_discrete()?;
    let fixes = masked_pivots(&m.diag())?;
    for &(i, v) in &fixes {
        m.set(i, i, v);
    }
    let (inv, cond) = discrete::inverse(&m, &g)?;
    if cond > settings.cond_cap {
        return Err(Error::IllConditioned { cond, cap: settings.cond_cap });
    }
    Ok(NumericInverse {
        object: StarObject::discrete(&g, inv),
        cond,
        excluded: fixes.into_iter().map(|(i, _)| i).collect(),
    })
}

/// `x^{⋆−1} ⋆ φ` by forward substitution, without forming the inverse.
/// Agrees with `apply_to_test(invert_discrete(x), φ)` in exact arithmetic and
/// avoids the cancellation in products with an explicit alternating inverse.
pub fn solve_discrete(x: &StarObject, phi: &Kernel) -> Result<Kernel> {
    let g = *x.grid();
    g.check_same(phi.grid())?;
    let mut m = x.to_discrete()?;
    for (i, v) in masked_pivots(&m.diag())? {
        m.set(i, i, v);
    }
    let y = m.scale(g.h()).solve(&discrete::from_kernel(phi))?;
    Ok(Kernel::from_samples(&g, discrete::to_kernel_samples(&y)))
}

/// Inverse of a kernel through its quadrature matrix. A kernel vanishing on
/// the diagonal is differentiated in `t′` first and the inverse followed by
/// the matching discrete `δ^{(s)}`.
pub fn invert_numeric(f: &Kernel, settings: &Settings) -> Result<NumericInverse> {
    let g = *f.grid();
    let mut q = f.clone();
    let mut stages = 0;
    while diagonal_vanishes(&q, settings) {
        if q.is_zero() || stages == settings.m_max {
            return Err(Error::Singular { node: 0 });
        }
        q = q.d_tp(1)?;
        stages += 1;
    }
    let mut inv = invert_discrete(&StarObject::from_kernel(q), settings)?;
    if stages > 0 {
        let d = discrete::from_deltas(&DeltaSeries::single(stages, Coeff::constant(1.0)), &g)?;
        let x = inv.object.discrete_matrix().expect("discrete inverse");
        inv.object = StarObject::discrete(&g, discrete::product(x, &d, &g));
    }
    Ok(inv)
}

/// Kernel `r̃` of `R_*(k) = δ + r̃Θ`, by the trapezoid rule on `r̃ = k̃ + k ∗ r̃`.
fn volterra(k: &Tri, h: f64) -> Tri {
    let n = k.n();
    let cols = par::map_range(n, |j| {
        let mut r = vec![0.0; n - j];
        r[0] = k.get(j, j);
        for i in j + 1..n {
            let mut s = 0.5 * k.get(i, j) * r[0];
            for mm in j + 1..i {
                s += k.get(i, mm) * r[mm - j];
            }
            r[i - j] = (k.get(i, j) + h * s) / (1.0 - 0.5 * h * k.get(i, i));
        }
        r
    });
    let mut out = Tri::zeros(n);
    for (j, col) in cols.into_iter().enumerate() {
        for (d, v) in col.into_iter().enumerate() {
            out.set(j + d, j, v);
        }
    }
    out
}

/// `R_*(f) = (1_* − f)^{∗−1}` for a kernel-only `f`.
pub fn resolvent(f: &StarObject) -> Result<StarObject> {
    let g = *f.grid();
    if let Some(m) = f.discrete_matrix() {
        return Ok(StarObject::discrete(&g, discrete::resolvent(m, &g)?));
    }
    if f.deltas().is_some() {
        return Err(Error::Invalid("the resolvent needs a kernel-only argument".into()));
    }
    let id = DeltaSeries::identity();
    let Some(k) = f.kernel() else {
        return Ok(StarObject::from_deltas(&g, id));
    };
    let r = volterra(k.samples(), g.h());
    if !r.is_finite() {
        return Err(Error::Singular { node: 0 });
    }
    Ok(StarObject::new(&g, Some(Kernel::from_samples(&g, r)), Some(id)))
}

fn diagonal_vanishes(k: &Kernel, settings: &Settings) -> bool {
    if let Some(e) = k.source() {
        let d = e.diagonal();
        if d.is_zero() {
            return true;
        }
        let g = k.grid();
        return (0..g.n()).all(|i| d.eval(g.node(i), g.node(i)).map_or(true, |v| v == 0.0));
    }
    // Sampled: a diagonal that vanishes up to discretization error is small
    // against the jump to the first subdiagonal.
    let s = k.samples();
    let n = s.n();
    let diag = s.diag().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let jump = (0..n.saturating_sub(1)).map(|i| (s.get(i + 1, i) - s.get(i, i)).abs()).fold(0.0, f64::max);
    diag <= (settings.tau_diag * k.max_abs()).max(0.5 * jump)
}

/// `∂_{t′}` of a kernel whose diagonal vanishes, with sampled diagonals
/// first set to exactly zero.
fn reduce(q: &Kernel) -> Result<Kernel> {
    if q.source().is_some() {
        return q.d_tp(1);
    }
    let mut s = q.samples().clone();
    s.set_diag(&vec![0.0; s.n()]);
    Kernel::from_samples(q.grid(), s).d_tp(1)
}

/// Inverse of `c_0(t′)δ + q̃Θ` (with `c_0` possibly absent) through a
/// second-kind Volterra equation.
pub fn invert_kernel_resolvent(f: &StarObject, settings: &Settings) -> Result<Inverse> {
    if f.is_discrete() {
        return Err(Error::Invalid("structured inversion of a discrete object".into()));
    }
    let g = *f.grid();
    let deltas = f.deltas().cloned().unwrap_or_else(DeltaSeries::empty);
    if deltas.order().is_some_and(|o| o > 0) {
        return Err(Error::Invalid("only a δ term may accompany the kernel".into()));
    }
    let mut q = f.kernel().cloned().unwrap_or_else(|| Kernel::zero(&g));
    let mut stages = 0;
    let lead = if let Some(c0) = deltas.coeff(0) {
        c0.clone()
    } else {
        while diagonal_vanishes(&q, settings) {
            if q.is_zero() || stages == settings.m_max {
                return Err(Error::Singular { node: 0 });
            }
            q = reduce(&q)?;
            stages += 1;
        }
        let d = q.diag_coeff();
        q = q.d_tp(1)?;
        d
    };
    let order = if deltas.coeff(0).is_some() { 0 } else { stages + 1 };

    let mut d = lead.samples(&g)?;
    let fixes = masked_pivots(&d)?;
    for &(i, v) in &fixes {
        d[i] = v;
    }
    let inv_lead = match (lead.expr(), fixes.is_empty()) {
        (Some(e), true) => Coeff::Expr(TimeExpr::constant(1.0).div(e)),
        _ => Coeff::from_samples(d.iter().map(|v| 1.0 / v).collect()),
    };
    let k = q.mul_left(&inv_lead.neg())?;
    let r = resolvent(&StarObject::from_kernel(k))?;
    let tail = DeltaSeries::single(order, inv_lead);
    let object = star_product_capped(&r, &StarObject::from_deltas(&g, tail), settings.m_max)?;
    Ok(Inverse { object, excluded: fixes.into_iter().map(|(i, _)| i).collect(), x_tilde: None, stages })
}
