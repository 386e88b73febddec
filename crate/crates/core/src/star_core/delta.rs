use std::sync::Arc;

use crate::error::Result;
use crate::expr::{TimeExpr, Var};

use super::fd;
use super::grid::Grid;

/// A function of the left time `t′`: symbolic in `tp`, or sampled on the grid.
#[derive(Clone, Debug)]
pub enum Coeff {
    Expr(TimeExpr),
    Samples(Arc<[f64]>),
}

impl Coeff {
    pub fn constant(c: f64) -> Coeff {
        Coeff::Expr(TimeExpr::constant(c))
    }

    pub fn zero() -> Coeff {
        Coeff::constant(0.0)
    }

    pub fn from_samples(v: Vec<f64>) -> Coeff {
        Coeff::Samples(v.into())
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Coeff::Expr(e) => e.is_zero(),
            Coeff::Samples(v) => v.iter().all(|&x| x == 0.0),
        }
    }

    pub fn expr(&self) -> Option<&TimeExpr> {
        match self {
            Coeff::Expr(e) => Some(e),
            Coeff::Samples(_) => None,
        }
    }

    pub fn samples(&self, g: &Grid) -> Result<Vec<f64>> {
        match self {
            Coeff::Expr(e) => {
                if let Some(c) = e.as_const() {
                    return Ok(vec![c; g.n()]);
                }
                (0..g.n())
                    .map(|i| {
                        let x = g.node(i);
                        e.eval(x, x).map_err(Into::into)
                    })
                    .collect()
            }
            Coeff::Samples(v) => Ok(v.to_vec()),
        }
    }

    pub fn eval(&self, g: &Grid, i: usize) -> Result<f64> {
        match self {
            Coeff::Expr(e) => {
                let x = g.node(i);
                Ok(e.eval(x, x)?)
            }
            Coeff::Samples(v) => Ok(v[i]),
        }
    }

    pub fn derivative(&self, g: &Grid, order: usize) -> Coeff {
        if order == 0 {
            return self.clone();
        }
        match self {
            Coeff::Expr(e) => Coeff::Expr(e.diff(Var::Tp, order)),
            Coeff::Samples(v) => Coeff::from_samples(fd::derivative(v, g.h(), order)),
        }
    }

    fn zip(&self, o: &Coeff, g: &Grid, f: impl Fn(f64, f64) -> f64) -> Result<Coeff> {
        let a = self.samples(g)?;
        let b = o.samples(g)?;
        Ok(Coeff::from_samples(a.iter().zip(&b).map(|(&x, &y)| f(x, y)).collect()))
    }

    pub fn add(&self, o: &Coeff, g: &Grid) -> Result<Coeff> {
        if let (Coeff::Expr(a), Coeff::Expr(b)) = (self, o) {
            return Ok(Coeff::Expr(a.add(b)));
        }
        if self.is_zero() {
            return Ok(o.clone());
        }
        if o.is_zero() {
            return Ok(self.clone());
        }
        self.zip(o, g, |x, y| x + y)
    }

    pub fn sub(&self, o: &Coeff, g: &Grid) -> Result<Coeff> {
        self.add(&o.neg(), g)
    }

    pub fn mul(&self, o: &Coeff, g: &Grid) -> Result<Coeff> {
        if let (Coeff::Expr(a), Coeff::Expr(b)) = (self, o) {
            return Ok(Coeff::Expr(a.mul(b)));
        }
        if self.is_zero() || o.is_zero() {
            return Ok(Coeff::zero());
        }
        self.zip(o, g, |x, y| x * y)
    }

    pub fn scale(&self, s: f64) -> Coeff {
        match self {
            Coeff::Expr(e) => Coeff::Expr(e.mul(&TimeExpr::constant(s))),
            Coeff::Samples(v) => Coeff::from_samples(v.iter().map(|x| x * s).collect()),
        }
    }

    pub fn neg(&self) -> Coeff {
        match self {
            Coeff::Expr(e) => Coeff::Expr(e.neg()),
            Coeff::Samples(v) => Coeff::from_samples(v.iter().map(|x| -x).collect()),
        }
    }

    pub fn max_abs(&self, g: &Grid) -> Result<f64> {
        Ok(self.samples(g)?.iter().fold(0.0, |m, x| m.max(x.abs())))
    }
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Left-normalized series `Σ_m c_m(t′) δ^{(m)}(t′−t)`.
#[derive(Clone, Debug, Default)]
pub struct DeltaSeries {
    coeffs: Vec<Coeff>,
}

impl DeltaSeries {
    pub fn new(mut coeffs: Vec<Coeff>) -> DeltaSeries {
        while coeffs.last().is_some_and(Coeff::is_zero) {
            coeffs.pop();
        }
        DeltaSeries { coeffs }
    }

    pub fn empty() -> DeltaSeries {
        DeltaSeries { coeffs: Vec::new() }
    }

    pub fn identity() -> DeltaSeries {
        DeltaSeries::new(vec![Coeff::constant(1.0)])
    }

    /// `c(t′) δ^{(m)}`.
    pub fn single(m: usize, c: Coeff) -> DeltaSeries {
        let mut coeffs = vec![Coeff::zero(); m];
        coeffs.push(c);
        DeltaSeries::new(coeffs)
    }

    pub fn from_exprs(exprs: &[TimeExpr]) -> DeltaSeries {
        DeltaSeries::new(exprs.iter().cloned().map(Coeff::Expr).collect())
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Highest delta-derivative order present.
    pub fn order(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeffs(&self) -> &[Coeff] {
        &self.coeffs
    }

    pub fn coeff(&self, m: usize) -> Option<&Coeff> {
        self.coeffs.get(m)
    }

    pub fn add(&self, o: &DeltaSeries, g: &Grid) -> Result<DeltaSeries> {
        let len = self.coeffs.len().max(o.coeffs.len());
        let zero = Coeff::zero();
        let coeffs = (0..len)
            .map(|m| {
                let a = self.coeffs.get(m).unwrap_or(&zero);
                let b = o.coeffs.get(m).unwrap_or(&zero);
                a.add(b, g)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DeltaSeries::new(coeffs))
    }

    pub fn scale(&self, s: f64) -> DeltaSeries {
        DeltaSeries::new(self.coeffs.iter().map(|c| c.scale(s)).collect())
    }

    /// `c(t′) · self`.
    pub fn mul_left(&self, c: &Coeff, g: &Grid) -> Result<DeltaSeries> {
        Ok(DeltaSeries::new(self.coeffs.iter().map(|x| c.mul(x, g)).collect::<Result<_>>()?))
    }

    /// Left-normalized form of `e(t) δ^{(j)}` where `e` is given as a function
    /// of one variable: `Σ_n C(j,n) e^{(j−n)}(t′) δ^{(n)}`.
    pub fn from_right_coefficient(e: &Coeff, j: usize, g: &Grid) -> DeltaSeries {
        let coeffs = (0..=j).map(|n| e.derivative(g, j - n).scale_if(binom(j, n))).collect();
        DeltaSeries::new(coeffs)
    }

    /// `δ^{(m)} ∗ self`: the m-fold t′-derivative, expanded by Leibniz.
    pub fn differentiate(&self, m: usize, g: &Grid) -> Result<DeltaSeries> {
        let mut out = DeltaSeries::empty();
        for (n, d) in self.coeffs.iter().enumerate() {
            if d.is_zero() {
                continue;
            }
            for i in 0..=m {
                let term = DeltaSeries::single(n + i, d.derivative(g, m - i).scale_if(binom(m, i)));
                out = out.add(&term, g)?;
            }
        }
        Ok(out)
    }

    pub fn samples(&self, g: &Grid) -> Result<Vec<Vec<f64>>> {
        self.coeffs.iter().map(|c| c.samples(g)).collect()
    }

    pub fn max_abs(&self, g: &Grid) -> Result<f64> {
        self.coeffs.iter().try_fold(0.0f64, |m, c| Ok(m.max(c.max_abs(g)?)))
    }
}

impl Coeff {
    fn scale_if(self, s: f64) -> Coeff {
        if s == 1.0 {
            self
        } else {
            self.scale(s)
        }
    }
}

/// Left-normalized series equal to `c(t) δ^{(j)}(t′−t)` for `c` in `t`.
pub fn normalize_right_coefficient(c: &TimeExpr, j: usize, g: &Grid) -> DeltaSeries {
    DeltaSeries::from_right_coefficient(&Coeff::Expr(c.t_as_tp()), j, g)
}
