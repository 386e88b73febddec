use crate::error::{Error, Result};
use crate::expr::{TimeExpr, Var};
use crate::settings::Settings;
use crate::star_core::{star_product_capped, Coeff, DeltaSeries, Grid, StarObject};

use super::separable::{invert_separable, Annihilator};
use super::Inverse;

fn identically_zero(e: &TimeExpr, g: &Grid, diagonal: bool) -> Result<bool> {
    if e.is_zero() {
        return Ok(true);
    }
    for i in 0..g.n() {
        let x = g.node(i);
        let v = if diagonal { e.eval(x, x) } else { e.eval(x, g.a) };
        match v {
            Ok(v) if v != 0.0 => return Ok(false),
            _ => {}
        }
    }
    Ok(true)
}

/// Inverse of `ã(t′)Θ`: `(1/ã)′ δ + (1/ã) δ′`.
pub fn invert_left_variable(a: &TimeExpr, g: &Grid) -> Result<StarObject> {
    if a.depends_on(Var::T) {
        return Err(Error::Invalid(format!("`{a}` depends on t")));
    }
    if identically_zero(a, g, true)? {
        return Err(Error::Invalid(format!("`{a}` vanishes on the grid")));
    }
    let inv = TimeExpr::constant(1.0).div(a);
    Ok(StarObject::from_deltas(g, DeltaSeries::from_exprs(&[inv.diff(Var::Tp, 1), inv])))
}

/// Inverse of `b̃(t)Θ`: `(1/b̃(t′)) δ′`.
pub fn invert_right_variable(b: &TimeExpr, g: &Grid) -> Result<StarObject> {
    if b.depends_on(Var::Tp) {
        return Err(Error::Invalid(format!("`{b}` depends on tp")));
    }
    let b = b.t_as_tp();
    if identically_zero(&b, g, true)? {
        return Err(Error::Invalid(format!("`{b}` vanishes on the grid")));
    }
    let inv = TimeExpr::constant(1.0).div(&b);
    Ok(StarObject::from_deltas(g, DeltaSeries::single(1, Coeff::Expr(inv))))
}

/// Inverse of a kernel polynomial of degree `k ≥ 1` in `tp`.
///
/// While the diagonal vanishes the kernel is replaced by `δ′ ∗ p`; the final
/// inverse is the inverse of the reduced kernel followed by `δ^{(s)}`.
pub fn invert_polynomial(p: &TimeExpr, g: &Grid, settings: &Settings) -> Result<Inverse> {
    let k = p
        .degree_in(Var::Tp, settings.m_max)
        .ok_or_else(|| Error::Invalid(format!("`{p}` is not a polynomial in tp of degree ≤ {}", settings.m_max)))?;
    let mut q = p.clone();
    let mut stages = 0;
    while identically_zero(&q.diagonal(), g, true)? {
        if stages == k {
            return Err(Error::Invalid(format!("`{p}` vanishes identically")));
        }
        q = q.diff(Var::Tp, 1);
        stages += 1;
    }
    let degree = k - stages;
    let mut inv = if degree == 0 {
        Inverse::exact(invert_right_variable(&q, g)?)
    } else {
        let mut l = vec![TimeExpr::constant(0.0); degree + 1];
        l.push(TimeExpr::constant(1.0));
        invert_separable(&q, &Annihilator::new(l)?, g, settings)?
    };
    if stages > 0 {
        let ds = StarObject::from_deltas(g, DeltaSeries::single(stages, Coeff::constant(1.0)));
        inv.object = star_product_capped(&inv.object, &ds, settings.m_max)?;
        inv.stages = stages;
    }
    Ok(inv)
}
