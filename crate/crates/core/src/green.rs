//! Operators `D_G` with `D_G(G) = δ`, built from the ∗-inverse of a separable
//! kernel `G`.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{TimeExpr, Var};
use crate::settings::Settings;
use crate::star_core::io::{read_tri_csv, write_tri_csv, CoeffEnvelope};
use crate::star_core::{apply_to_test, star_product, Coeff, DeltaSeries, Grid, Kernel, StarObject};
use crate::star_inverse::verify::masked_max_diff;
use crate::star_inverse::{build_annihilator, invert_separable};

/// `D_G f = ∫ r̃₋₁(t′,τ) f(τ,t) dτ + Σ_m r̃_m(t′) ∂^m_{t′} f`.
#[derive(Clone, Debug)]
pub struct GreenOperator {
    pub r_minus1: Kernel,
    pub r: DeltaSeries,
    pub order: usize,
    /// Nodes where the construction is undefined.
    pub excluded: Vec<usize>,
}

/// Right-hand side accepted by [`apply_green_operator`].
#[derive(Clone, Copy, Debug)]
pub enum Operand<'a> {
    Kernel(&'a Kernel),
    Expr(&'a TimeExpr),
}

impl<'a> From<&'a Kernel> for Operand<'a> {
    fn from(k: &'a Kernel) -> Self {
        Operand::Kernel(k)
    }
}

impl<'a> From<&'a TimeExpr> for Operand<'a> {
    fn from(e: &'a TimeExpr) -> Self {
        Operand::Expr(e)
    }
}

/// JSON form; `r₋₁` travels separately as a triangular CSV.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct GreenEnvelope {
    pub grid: Grid,
    pub order: usize,
    pub r: Vec<CoeffEnvelope>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub excluded: Vec<usize>,
}

impl GreenOperator {
    pub fn grid(&self) -> &Grid {
        self.r_minus1.grid()
    }

    /// The same operator as an element of the algebra.
    pub fn as_object(&self) -> StarObject {
        let g = *self.grid();
        let kernel = (!self.r_minus1.is_zero()).then(|| self.r_minus1.clone());
        StarObject::new(&g, kernel, Some(self.r.clone()))
    }

    pub fn to_envelope(&self) -> Result<GreenEnvelope> {
        let g = *self.grid();
        let r = (0..=self.order)
            .map(|m| {
                let c = self.r.coeff(m).cloned().unwrap_or_else(Coeff::zero);
                Ok(CoeffEnvelope { order: m, expr: c.expr().cloned(), samples: c.samples(&g)? })
            })
            .collect::<Result<_>>()?;
        Ok(GreenEnvelope { grid: g, order: self.order, r, excluded: self.excluded.clone() })
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, &self.to_envelope()?)?;
        Ok(())
    }

    pub fn write_r_minus1_csv<W: Write>(&self, w: W) -> Result<()> {
        write_tri_csv(self.r_minus1.samples(), w)
    }

    pub fn read<R1: Read, R2: Read>(json: R1, csv: R2) -> Result<GreenOperator> {
        let env: GreenEnvelope = serde_json::from_reader(json)?;
        let g = Grid::new(env.grid.a, env.grid.b, env.grid.n_points)?;
        let tri = read_tri_csv(csv)?;
        if tri.n() != g.n() {
            return Err(Error::GridMismatch);
        }
        let mut coeffs = vec![Coeff::zero(); env.order + 1];
        for c in &env.r {
            if c.order > env.order {
                return Err(Error::Invalid(format!("coefficient r_{} exceeds the order {}", c.order, env.order)));
            }
            coeffs[c.order] = match &c.expr {
                Some(e) => Coeff::Expr(e.clone()),
                None if c.samples.len() == g.n() => Coeff::from_samples(c.samples.clone()),
                None => return Err(Error::Invalid(format!("r_{} has the wrong length", c.order))),
            };
        }
        Ok(GreenOperator {
            r_minus1: Kernel::from_samples(&g, tri),
            r: DeltaSeries::new(coeffs),
            order: env.order,
            excluded: env.excluded,
        })
    }
}

/// Builds `D_G = G^{∗−1}` for `G = G̃Θ` with `G̃` separable over `basis`.
pub fn green_operator_from_kernel(
    g_tilde: &TimeExpr,
    basis: &[TimeExpr],
    grid: &Grid,
    settings: &Settings,
) -> Result<GreenOperator> {
    let l = build_annihilator(basis, grid, settings)?;
    let inv = invert_separable(g_tilde, &l, grid, settings)?;
    let r = inv.object.deltas().cloned().unwrap_or_else(DeltaSeries::empty);
    let r_minus1 = inv.object.kernel().cloned().unwrap_or_else(|| Kernel::zero(grid));
    let order = r.order().unwrap_or(0);
    Ok(GreenOperator { r_minus1, r, order, excluded: inv.excluded })
}

/// `D_G f` on the grid. An expression in `t` alone is read as a function of
/// the left time.
pub fn apply_green_operator<'a>(d: &GreenOperator, f: impl Into<Operand<'a>>) -> Result<Kernel> {
    let g = *d.grid();
    let k = match f.into() {
        Operand::Kernel(k) => {
            g.check_same(k.grid())?;
            k.clone()
        }
        Operand::Expr(e) => {
            let e = if e.depends_on(Var::Tp) { e.clone() } else { e.t_as_tp() };
            Kernel::from_expr(&e, &g)?
        }
    };
    apply_to_test(&d.as_object(), &k)
}

/// `max_φ |D_G(G ∗ φ) − φ|` over `tests`, skipping excluded nodes.
pub fn fundamental_residual(d: &GreenOperator, g_tilde: &TimeExpr, tests: &[TimeExpr]) -> Result<f64> {
    let g = *d.grid();
    let gk = StarObject::from_expr(g_tilde, &g)?;
    let mut worst: f64 = 0.0;
    for phi in tests {
        let pk = Kernel::from_expr(phi, &g)?;
        let conv = star_product(&gk, &StarObject::from_kernel(pk.clone()))?;
        let conv = match conv.kernel() {
            Some(k) => k.clone(),
            None => Kernel::zero(&g),
        };
        let back = apply_green_operator(d, &conv)?;
        worst = worst.max(masked_max_diff(&back, &pk, &d.excluded));
    }
    Ok(worst)
}
