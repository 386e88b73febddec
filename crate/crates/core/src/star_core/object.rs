use std::sync::Arc;

use crate::error::Result;
use crate::expr::TimeExpr;

use super::delta::{Coeff, DeltaSeries};
use super::discrete;
use super::grid::Grid;
use super::kernel::Kernel;
use super::tri::Tri;

/// A generalized function `f̃Θ + Σ c_m δ^{(m)}`, or its matrix form.
#[derive(Clone, Debug)]
pub struct StarObject {
    grid: Grid,
    body: Body,
}

#[derive(Clone, Debug)]
enum Body {
    Parts { kernel: Option<Kernel>, deltas: DeltaSeries },
    Discrete(Arc<Tri>),
}

impl StarObject {
    pub fn new(g: &Grid, kernel: Option<Kernel>, deltas: Option<DeltaSeries>) -> StarObject {
        let kernel = kernel.filter(|k| !k.is_zero());
        StarObject { grid: *g, body: Body::Parts { kernel, deltas: deltas.unwrap_or_default() } }
    }

    pub fn zero(g: &Grid) -> StarObject {
        StarObject::new(g, None, None)
    }

    pub fn from_kernel(k: Kernel) -> StarObject {
        let g = *k.grid();
        StarObject::new(&g, Some(k), None)
    }

    pub fn from_deltas(g: &Grid, d: DeltaSeries) -> StarObject {
        StarObject::new(g, None, Some(d))
    }

    /// Kernel `ẽ(t′,t)Θ` from an expression.
    pub fn from_expr(e: &TimeExpr, g: &Grid) -> Result<StarObject> {
        Ok(StarObject::from_kernel(Kernel::from_expr(e, g)?))
    }

    pub fn theta(g: &Grid) -> StarObject {
        StarObject::from_kernel(Kernel::from_expr(&TimeExpr::constant(1.0), g).expect("constant"))
    }

    pub fn discrete(g: &Grid, m: Tri) -> StarObject {
        StarObject { grid: *g, body: Body::Discrete(Arc::new(m)) }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn kernel(&self) -> Option<&Kernel> {
        match &self.body {
            Body::Parts { kernel, .. } => kernel.as_ref(),
            Body::Discrete(_) => None,
        }
    }

    pub fn deltas(&self) -> Option<&DeltaSeries> {
        match &self.body {
            Body::Parts { deltas, .. } if !deltas.is_empty() => Some(deltas),
            _ => None,
        }
    }

    pub fn discrete_matrix(&self) -> Option<&Tri> {
        match &self.body {
            Body::Discrete(m) => Some(m),
            Body::Parts { .. } => None,
        }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self.body, Body::Discrete(_))
    }

    pub fn is_empty(&self) -> bool {
        match &self.body {
            Body::Parts { kernel, deltas } => kernel.is_none() && deltas.is_empty(),
            Body::Discrete(m) => m.max_abs() == 0.0,
        }
    }

    /// Kernel samples, zero when there is no kernel part.
    pub fn kernel_samples(&self) -> Tri {
        match &self.body {
            Body::Parts { kernel: Some(k), .. } => k.samples().clone(),
            Body::Parts { kernel: None, .. } => Tri::zeros(self.grid.n()),
            Body::Discrete(m) => discrete::to_kernel_samples(m),
        }
    }

    /// Matrix form in the discrete algebra.
    pub fn to_discrete(&self) -> Result<Tri> {
        match &self.body {
            Body::Discrete(m) => Ok((**m).clone()),
            Body::Parts { kernel, deltas } => {
                let mut m = match kernel {
                    Some(k) => discrete::from_kernel(k),
                    None => Tri::zeros(self.grid.n()),
                };
                if !deltas.is_empty() {
                    m = m.add(&discrete::from_deltas(deltas, &self.grid)?);
                }
                Ok(m)
            }
        }
    }

    pub fn as_discrete(&self) -> Result<StarObject> {
        Ok(StarObject::discrete(&self.grid, self.to_discrete()?))
    }

    pub fn add(&self, o: &StarObject) -> Result<StarObject> {
        self.grid.check_same(&o.grid)?;
        match (&self.body, &o.body) {
            (Body::Parts { kernel: k1, deltas: d1 }, Body::Parts { kernel: k2, deltas: d2 }) => {
                let kernel = match (k1, k2) {
                    (Some(a), Some(b)) => Some(a.add(b)),
                    (a, b) => a.clone().or_else(|| b.clone()),
                };
                Ok(StarObject::new(&self.grid, kernel, Some(d1.add(d2, &self.grid)?)))
            }
            _ => Ok(StarObject::discrete(&self.grid, self.to_discrete()?.add(&o.to_discrete()?))),
        }
    }

    pub fn scale(&self, s: f64) -> StarObject {
        match &self.body {
            Body::Parts { kernel, deltas } => {
                StarObject::new(&self.grid, kernel.as_ref().map(|k| k.scale(s)), Some(deltas.scale(s)))
            }
            Body::Discrete(m) => StarObject::discrete(&self.grid, m.scale(s)),
        }
    }

    pub fn neg(&self) -> StarObject {
        self.scale(-1.0)
    }

    pub fn sub(&self, o: &StarObject) -> Result<StarObject> {
        self.add(&o.neg())
    }

    /// `c(t′) · self`.
    pub fn mul_left(&self, c: &Coeff) -> Result<StarObject> {
        match &self.body {
            Body::Parts { kernel, deltas } => Ok(StarObject::new(
                &self.grid,
                kernel.as_ref().map(|k| k.mul_left(c)).transpose()?,
                Some(deltas.mul_left(c, &self.grid)?),
            )),
            Body::Discrete(m) => Ok(StarObject::discrete(&self.grid, m.scale_rows(&c.samples(&self.grid)?))),
        }
    }

    /// Drops delta coefficients whose samples all stay within `tol` of zero.
    pub fn prune_deltas(&self, tol: f64) -> Result<StarObject> {
        let Body::Parts { kernel, deltas } = &self.body else {
            return Ok(self.clone());
        };
        let mut coeffs = Vec::with_capacity(deltas.coeffs().len());
        for c in deltas.coeffs() {
            coeffs.push(if c.max_abs(&self.grid)? <= tol { Coeff::zero() } else { c.clone() });
        }
        Ok(StarObject::new(&self.grid, kernel.clone(), Some(DeltaSeries::new(coeffs))))
    }

    /// Largest sample magnitude over all parts.
    pub fn magnitude(&self) -> Result<f64> {
        match &self.body {
            Body::Parts { kernel, deltas } => {
                let k = kernel.as_ref().map_or(0.0, Kernel::max_abs);
                Ok(k.max(deltas.max_abs(&self.grid)?))
            }
            Body::Discrete(m) => Ok(m.max_abs()),
        }
    }

    /// Component-wise comparison with relative tolerance `tau`.
    pub fn approx_eq(&self, o: &StarObject, tau: f64) -> Result<bool> {
        self.grid.check_same(&o.grid)?;
        if self.is_discrete() || o.is_discrete() {
            let (a, b) = (self.to_discrete()?, o.to_discrete()?);
            let scale = a.max_abs().max(b.max_abs());
            return Ok(a.sub(&b).max_abs() <= tau * scale);
        }
        let scale = self.magnitude()?.max(o.magnitude()?);
        let tol = tau * scale;
        let diff = self.sub(o)?;
        Ok(diff.magnitude()? <= tol)
    }
}

/// `1_* = δ(t′−t)`.
pub fn star_identity(g: &Grid) -> StarObject {
    StarObject::from_deltas(g, DeltaSeries::identity())
}
