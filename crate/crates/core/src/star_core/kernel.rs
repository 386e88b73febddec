use std::sync::Arc;

use crate::error::Result;
use crate::expr::{TimeExpr, Var};

use super::delta::Coeff;
use super::fd;
use super::grid::Grid;
use super::tri::Tri;

/// Samples of `f̃(t′,t)` on the lower triangle `t′ ≥ t`, with the exact form
/// kept when one is known.
#[derive(Clone, Debug)]
pub struct Kernel {
    grid: Grid,
    samples: Arc<Tri>,
    source: Option<TimeExpr>,
}

impl Kernel {
    pub fn from_expr(e: &TimeExpr, g: &Grid) -> Result<Kernel> {
        let nodes = g.nodes();
        let samples = if let Some(c) = e.as_const() {
            Tri::from_fn(g.n(), |_, _| c)
        } else {
            Tri::try_from_fn(g.n(), |i, j| e.eval(nodes[i], nodes[j]))?
        };
        Ok(Kernel { grid: *g, samples: Arc::new(samples), source: Some(e.clone()) })
    }

    pub fn from_samples(g: &Grid, samples: Tri) -> Kernel {
        assert_eq!(samples.n(), g.n(), "sample triangle does not match the grid");
        Kernel { grid: *g, samples: Arc::new(samples), source: None }
    }

    pub fn zero(g: &Grid) -> Kernel {
        Kernel { grid: *g, samples: Arc::new(Tri::zeros(g.n())), source: Some(TimeExpr::constant(0.0)) }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn samples(&self) -> &Tri {
        &self.samples
    }

    pub fn source(&self) -> Option<&TimeExpr> {
        self.source.as_ref()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.samples.get(i, j)
    }

    pub fn without_source(&self) -> Kernel {
        Kernel { grid: self.grid, samples: self.samples.clone(), source: None }
    }

    pub fn is_zero(&self) -> bool {
        match &self.source {
            Some(e) if e.is_zero() => true,
            _ => self.samples.max_abs() == 0.0,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.max_abs()
    }

    /// `f̃^{(order,0)}`.
    pub fn d_tp(&self, order: usize) -> Result<Kernel> {
        if order == 0 {
            return Ok(self.clone());
        }
        match &self.source {
            Some(e) => Kernel::from_expr(&e.diff(Var::Tp, order), &self.grid),
            None => Ok(Kernel::from_samples(&self.grid, fd::d_tp_n(&self.samples, self.grid.h(), order))),
        }
    }

    /// `f̃^{(0,order)}`.
    pub fn d_t(&self, order: usize) -> Result<Kernel> {
        if order == 0 {
            return Ok(self.clone());
        }
        match &self.source {
            Some(e) => Kernel::from_expr(&e.diff(Var::T, order), &self.grid),
            None => Ok(Kernel::from_samples(&self.grid, fd::d_t_n(&self.samples, self.grid.h(), order))),
        }
    }

    /// `f̃(τ,τ)` as a function of one variable.
    pub fn diag_coeff(&self) -> Coeff {
        match &self.source {
            Some(e) => Coeff::Expr(e.diagonal()),
            None => Coeff::from_samples(self.samples.diag()),
        }
    }

    /// `c(t′) f̃(t′,t)`.
    pub fn mul_left(&self, c: &Coeff) -> Result<Kernel> {
        if let (Some(e), Coeff::Expr(ce)) = (&self.source, c) {
            return Kernel::from_expr(&ce.mul(e), &self.grid);
        }
        Ok(Kernel::from_samples(&self.grid, self.samples.scale_rows(&c.samples(&self.grid)?)))
    }

    /// `f̃(t′,t) c(t)`.
    pub fn mul_right(&self, c: &Coeff) -> Result<Kernel> {
        if let (Some(e), Coeff::Expr(ce)) = (&self.source, c) {
            return Kernel::from_expr(&e.mul(&ce.tp_as_t()), &self.grid);
        }
        Ok(Kernel::from_samples(&self.grid, self.samples.scale_cols(&c.samples(&self.grid)?)))
    }

    pub fn add(&self, o: &Kernel) -> Kernel {
        let samples = self.samples.add(&o.samples);
        let source = match (&self.source, &o.source) {
            (Some(a), Some(b)) => Some(a.add(b)),
            _ => None,
        };
        Kernel { grid: self.grid, samples: Arc::new(samples), source }
    }

    pub fn scale(&self, s: f64) -> Kernel {
        Kernel {
            grid: self.grid,
            samples: Arc::new(self.samples.scale(s)),
            source: self.source.as_ref().map(|e| e.mul(&TimeExpr::constant(s))),
        }
    }

    pub fn sub(&self, o: &Kernel) -> Kernel {
        self.add(&o.scale(-1.0))
    }
}
