//! Path-sum continued fraction, ordered exponential, and an RK4 reference.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::TimeExpr;
use crate::settings::Settings;
use crate::star_core::{discrete, integrate_rows, star_identity, star_product_capped, Grid, StarObject};
use crate::star_inverse::{invert_discrete, invert_kernel_resolvent, resolvent};
use crate::star_lanczos::TridiagonalStar;

/// `wᴴU(t′,a)v` on the grid, with an optional reference.
#[derive(Clone, Debug)]
pub struct EvolutionResult {
    pub grid: Grid,
    pub u_samples: Vec<f64>,
    pub reference: Option<Vec<f64>>,
    pub errors: Option<Vec<f64>>,
}

#[derive(Serialize)]
struct Row {
    tp: f64,
    u: f64,
    u_ref: Option<f64>,
    abs_err: Option<f64>,
}

impl EvolutionResult {
    pub fn with_reference(mut self, reference: Vec<f64>) -> Result<EvolutionResult> {
        if reference.len() != self.u_samples.len() {
            return Err(Error::Invalid("reference has the wrong length".into()));
        }
        self.errors = Some(self.u_samples.iter().zip(&reference).map(|(a, b)| (a - b).abs()).collect());
        self.reference = Some(reference);
        Ok(self)
    }

    pub fn max_error(&self) -> Option<f64> {
        self.errors.as_ref().map(|e| e.iter().copied().fold(0.0, f64::max))
    }

    /// Columns `tp,u,u_ref,abs_err`; the last two are empty without a reference.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for (i, &u) in self.u_samples.iter().enumerate() {
            out.serialize(Row {
                tp: self.grid.node(i),
                u,
                u_ref: self.reference.as_ref().map(|r| r[i]),
                abs_err: self.errors.as_ref().map(|e| e[i]),
            })?;
        }
        out.flush()?;
        Ok(())
    }
}

/// `(1_* − x)^{∗−1}` for one continued-fraction level.
fn level(x: &StarObject, settings: &Settings) -> Result<StarObject> {
    let g = *x.grid();
    if x.is_discrete() {
        let m = discrete::identity(&g).sub(&x.to_discrete()?);
        return Ok(invert_discrete(&StarObject::discrete(&g, m), settings)?.object);
    }
    let x = x.prune_deltas(settings.tau_diag * x.magnitude()?.max(1.0))?;
    match x.deltas().and_then(|d| d.order()) {
        None => resolvent(&x),
        Some(0) => Ok(invert_kernel_resolvent(&star_identity(&g).sub(&x)?, settings)?.object),
        Some(o) => Err(Error::Invalid(format!(
            "a δ^({o}) term survives in a continued-fraction level; only δ terms can be folded into the kernel"
        ))),
    }
}

/// `R_*(T_n)_{11}` from the continued fraction, innermost level first.
pub fn pathsum_resolvent(t: &TridiagonalStar, settings: &Settings) -> Result<StarObject> {
    let n = t.n();
    if n == 0 {
        return Err(Error::Invalid("empty tridiagonal matrix".into()));
    }
    let numeric = t.alphas.iter().any(StarObject::is_discrete);
    let conv = |o: &StarObject| if numeric { o.as_discrete() } else { Ok(o.clone()) };
    let mut g_next = level(&conv(&t.alphas[n - 1])?, settings)?;
    for k in (0..n - 1).rev() {
        let x = conv(&t.alphas[k])?.add(&star_product_capped(&g_next, &conv(&t.betas[k])?, settings.m_max)?)?;
        g_next = level(&x, settings)?;
    }
    Ok(g_next)
}

/// `wᴴU(t′,a)v = ∫_a^{t′} R_*(T_n)_{11}(τ,a) dτ`, with `u(a) = 1`.
pub fn ordered_exponential(t: &TridiagonalStar, a: f64, settings: &Settings) -> Result<EvolutionResult> {
    let g = *t.grid();
    if (a - g.a).abs() > 1e-12 * g.a.abs().max(1.0) {
        return Err(Error::Invalid(format!("start time {a} is not the grid start {}", g.a)));
    }
    let r = pathsum_resolvent(t, settings)?;
    let mut u = integrate_rows(&r, 0)?;
    u[0] = 1.0;
    Ok(EvolutionResult { grid: g, u_samples: u, reference: None, errors: None })
}

/// `wᴴU(t′,a)v` from `y′ = Ã(t′)y`, `y(a) = v`, by classical RK4 with
/// `substeps` steps per grid interval.
pub fn rk4_reference(a_exprs: &[Vec<TimeExpr>], w: &[f64], v: &[f64], g: &Grid, substeps: usize) -> Result<Vec<f64>> {
    let d = a_exprs.len();
    if substeps == 0 {
        return Err(Error::Invalid("substeps must be at least 1".into()));
    }
    if a_exprs.iter().any(|r| r.len() != d) || w.len() != d || v.len() != d {
        return Err(Error::Invalid("matrix and vectors do not conform".into()));
    }
    let exprs: Vec<TimeExpr> = a_exprs
        .iter()
        .flatten()
        .map(|e| if e.depends_on(crate::expr::Var::Tp) { e.clone() } else { e.t_as_tp() })
        .collect();
    let f = |s: f64, y: &[f64]| -> Result<Vec<f64>> {
        let mut out = vec![0.0; d];
        for i in 0..d {
            for k in 0..d {
                out[i] += exprs[i * d + k].eval(s, s)? * y[k];
            }
        }
        Ok(out)
    };
    let h = g.h() / substeps as f64;
    let mut y = v.to_vec();
    let mut out = Vec::with_capacity(g.n());
    let dotw = |y: &[f64]| w.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
    out.push(dotw(&y));
    for i in 1..g.n() {
        for st in 0..substeps {
            let s = g.node(i - 1) + st as f64 * h;
            let k1 = f(s, &y)?;
            let y2: Vec<f64> = y.iter().zip(&k1).map(|(a, b)| a + 0.5 * h * b).collect();
            let k2 = f(s + 0.5 * h, &y2)?;
            let y3: Vec<f64> = y.iter().zip(&k2).map(|(a, b)| a + 0.5 * h * b).collect();
            let k3 = f(s + 0.5 * h, &y3)?;
            let y4: Vec<f64> = y.iter().zip(&k3).map(|(a, b)| a + h * b).collect();
            let k4 = f(s + h, &y4)?;
            for j in 0..d {
                y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            }
        }
        out.push(dotw(&y));
    }
    Ok(out)
}
