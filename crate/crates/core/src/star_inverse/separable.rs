use crate::error::{Error, Result};
use crate::expr::{TimeExpr, Var};
use crate::par;
use crate::settings::Settings;
use crate::star_core::{Coeff, DeltaSeries, Grid, Kernel, StarObject, Tri};

use super::ode::HalfGridCoeffs;
use super::Inverse;

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn sign(k: usize) -> f64 {
    if k.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

fn c(x: f64) -> TimeExpr {
    TimeExpr::constant(x)
}

fn eval_or_nan(e: &TimeExpr, tp: f64, t: f64) -> f64 {
    e.eval(tp, t).unwrap_or(f64::NAN)
}

/// `L = Σ_{j=0}^{k+1} g̃_j(t′) δ^{(j)}` with `L ∗ f̃ = 0`.
#[derive(Clone, Debug)]
pub struct Annihilator {
    g: Vec<TimeExpr>,
}

impl Annihilator {
    pub fn new(g: Vec<TimeExpr>) -> Result<Annihilator> {
        if g.len() < 2 {
            return Err(Error::Invalid("an annihilator needs order at least 1".into()));
        }
        if g.iter().any(|e| e.depends_on(Var::T)) {
            return Err(Error::Invalid("annihilator coefficients must depend on tp only".into()));
        }
        if g.last().is_some_and(TimeExpr::is_zero) {
            return Err(Error::Invalid("leading annihilator coefficient is zero".into()));
        }
        Ok(Annihilator { g })
    }

    pub fn coeffs(&self) -> &[TimeExpr] {
        &self.g
    }

    /// `k + 1`.
    pub fn order(&self) -> usize {
        self.g.len() - 1
    }

    /// Multiplies every coefficient by `s(t′)`.
    pub fn scaled(&self, s: &TimeExpr) -> Result<Annihilator> {
        Annihilator::new(self.g.iter().map(|e| s.mul(e)).collect())
    }

    pub fn as_series(&self) -> DeltaSeries {
        DeltaSeries::from_exprs(&self.g)
    }

    /// Largest `|Σ_j g̃_j f̃^{(j,0)}|` over the node pairs, and the largest
    /// individual term for scale.
    pub fn residual(&self, f: &TimeExpr, grid: &Grid) -> (f64, f64) {
        let derivs: Vec<TimeExpr> = (0..self.g.len()).map(|j| f.diff(Var::Tp, j)).collect();
        let rows = par::map_range(grid.n(), |i| {
            let tp = grid.node(i);
            let mut worst: f64 = 0.0;
            let mut scale: f64 = 0.0;
            for jj in 0..=i {
                let t = grid.node(jj);
                let mut s = 0.0;
                for (g, d) in self.g.iter().zip(&derivs) {
                    let term = eval_or_nan(g, tp, tp) * eval_or_nan(d, tp, t);
                    if term.is_finite() {
                        s += term;
                        scale = scale.max(term.abs());
                    }
                }
                worst = worst.max(s.abs());
            }
            (worst, scale)
        });
        rows.into_iter().fold((0.0, 0.0), |(a, b), (x, y)| (a.max(x), b.max(y)))
    }
}

fn det(m: &[Vec<TimeExpr>]) -> TimeExpr {
    match m.len() {
        0 => c(1.0),
        1 => m[0][0].clone(),
        n => {
            let mut acc = c(0.0);
            for col in 0..n {
                let minor: Vec<Vec<TimeExpr>> = m[1..]
                    .iter()
                    .map(|r| r.iter().enumerate().filter(|(j, _)| *j != col).map(|(_, e)| e.clone()).collect())
                    .collect();
                let term = m[0][col].mul(&det(&minor));
                acc = if col % 2 == 0 { acc.add(&term) } else { acc.sub(&term) };
            }
            acc
        }
    }
}

/// Annihilator of span{y_1, …, y_{k+1}} with leading coefficient 1, from the
/// Wronskian system solved by Cramer's rule.
pub fn build_annihilator(basis: &[TimeExpr], grid: &Grid, settings: &Settings) -> Result<Annihilator> {
    if basis.is_empty() {
        return Err(Error::Invalid("empty basis".into()));
    }
    if let Some(b) = basis.iter().find(|b| b.depends_on(Var::T)) {
        return Err(Error::Invalid(format!("basis function `{b}` depends on t")));
    }
    let n = basis.len();
    let w: Vec<Vec<TimeExpr>> = basis.iter().map(|y| (0..n).map(|j| y.diff(Var::Tp, j)).collect()).collect();
    let rhs: Vec<TimeExpr> = basis.iter().map(|y| y.diff(Var::Tp, n).neg()).collect();
    let d = det(&w);
    let row_scale = |i: usize, x: f64| -> f64 { w[i].iter().map(|e| eval_or_nan(e, x, x).abs()).fold(0.0, f64::max) };
    let regular = (0..grid.n()).any(|l| {
        let x = grid.node(l);
        let dv = eval_or_nan(&d, x, x);
        let scale: f64 = (0..n).map(|i| row_scale(i, x)).product();
        dv.is_finite() && scale > 0.0 && dv.abs() > 1e-10 * scale
    });
    if !regular {
        return Err(Error::Wronskian);
    }
    let mut g = Vec::with_capacity(n + 1);
    for j in 0..n {
        let mut wj = w.clone();
        for (i, row) in wj.iter_mut().enumerate() {
            row[j] = rhs[i].clone();
        }
        g.push(det(&wj).div(&d));
    }
    g.push(c(1.0));
    let l = Annihilator::new(g)?;
    for y in basis {
        let (res, scale) = l.residual(y, grid);
        let tol = settings.tau_ann * scale.max(f64::MIN_POSITIVE);
        if !(res <= tol) {
            return Err(Error::Annihilation { residual: res, tol });
        }
    }
    Ok(l)
}

/// The order-k linear ODE in t satisfied by x̃, with its boundary data at t = t′.
#[derive(Clone, Debug)]
pub struct ReducedOde {
    /// h̃_0(t) … h̃_k(t).
    pub h: Vec<TimeExpr>,
    /// x̃^{(0,j)}(t′,t′) for j = 0..k−1, as functions of t′.
    pub boundary: Vec<TimeExpr>,
}

impl ReducedOde {
    pub fn new(f: &TimeExpr, l: &Annihilator) -> ReducedOde {
        let k = l.order() - 1;
        let g = l.coeffs();
        let fd = |p: usize| f.diff(Var::Tp, p).diagonal().tp_as_t();
        let gd = |j: usize, r: usize| g[j].diff(Var::Tp, r).tp_as_t();
        let h: Vec<TimeExpr> = (0..=k)
            .map(|m| {
                let mut acc = c(0.0);
                for j in m + 1..=k + 1 {
                    for ell in m..j {
                        let coef = binom(ell, m) * sign(ell);
                        let term = c(coef).mul(&fd(j - ell - 1)).mul(&gd(j, ell - m));
                        acc = acc.add(&term);
                    }
                }
                acc
            })
            .collect();
        let mut boundary = vec![c(0.0); k];
        if k > 0 {
            boundary[k - 1] = c(1.0).div(&h[k].t_as_tp());
        }
        ReducedOde { h, boundary }
    }

    pub fn order(&self) -> usize {
        self.h.len() - 1
    }

    /// x̃^{(0,q)}(t′,t′) for q = 0..k+1, the top two from the ODE and its derivative.
    fn boundary_derivatives(&self) -> Vec<TimeExpr> {
        let k = self.order();
        let hh: Vec<TimeExpr> = self.h.iter().map(|e| e.t_as_tp()).collect();
        let mut x = self.boundary.clone();
        let mut s = c(0.0);
        for m in 0..k {
            s = s.add(&hh[m].mul(&x[m]));
        }
        x.push(s.neg().div(&hh[k]));
        let mut s = c(0.0);
        for m in 0..=k {
            s = s.add(&self.h[m].diff(Var::T, 1).t_as_tp().mul(&x[m]));
        }
        for m in 0..k {
            s = s.add(&hh[m].mul(&x[m + 1]));
        }
        x.push(s.neg().div(&hh[k]));
        x
    }
}

/// Inverse of a separable kernel through its annihilator.
pub fn invert_separable(f: &TimeExpr, l: &Annihilator, grid: &Grid, settings: &Settings) -> Result<Inverse> {
    let (res, scale) = l.residual(f, grid);
    let tol = settings.tau_ann * scale.max(f64::MIN_POSITIVE);
    if !(res <= tol) {
        return Err(Error::Annihilation { residual: res, tol });
    }
    let fdiag = f.diagonal();
    let n = grid.n();
    let fd_vals: Vec<f64> = (0..n).map(|i| eval_or_nan(&fdiag, grid.node(i), grid.node(i))).collect();
    let fmax = fd_vals.iter().filter(|v| v.is_finite()).fold(0.0f64, |m, v| m.max(v.abs()));
    if fmax == 0.0 {
        return Err(Error::Invalid(format!("`{f}` vanishes on the diagonal; pre-multiply by δ′ before inverting")));
    }
    let k = l.order() - 1;
    let g = l.coeffs();
    if k == 0 {
        let factor = c(1.0).div(&g[1].mul(&fdiag));
        let excluded = mask(grid, &g[1].mul(&fdiag));
        let object = StarObject::from_deltas(grid, l.as_series().mul_left(&Coeff::Expr(factor), grid)?);
        return Ok(Inverse { object, excluded, x_tilde: None, stages: 0 });
    }
    let ode = ReducedOde::new(f, l);
    let xb = ode.boundary_derivatives();
    let s = -1.0;

    // r̃_m(t′) from boundary data only.
    let y_at_diag = |j: usize, ell: usize| -> TimeExpr {
        let mut acc = c(0.0);
        for q in 0..=ell {
            acc = acc.add(&c(binom(ell, q)).mul(&xb[q]).mul(&g[j].diff(Var::Tp, ell - q)));
        }
        acc
    };
    let mut r = Vec::with_capacity(k + 1);
    for m in 0..=k {
        let mut acc = c(0.0);
        for j in m + 1..=k + 1 {
            acc = acc.add(&c(s * sign(j - 1 - m)).mul(&y_at_diag(j, j - 1 - m)));
        }
        r.push(Coeff::Expr(acc));
    }

    // Coefficients on the half grid, derivatives of h̃ and of g̃_j on nodes.
    let half = |e: &TimeExpr| -> Vec<f64> {
        (0..2 * n - 1).map(|l| eval_or_nan(e, 0.0, grid.a + l as f64 * grid.h() / 2.0)).collect()
    };
    let coeffs = HalfGridCoeffs { c: ode.h.iter().map(half).collect() };
    let dh: Vec<Vec<f64>> = ode
        .h
        .iter()
        .map(|e| {
            let d = e.diff(Var::T, 1);
            (0..n).map(|l| eval_or_nan(&d, 0.0, grid.node(l))).collect()
        })
        .collect();
    let gder: Vec<Vec<Vec<f64>>> = g
        .iter()
        .map(|gj| {
            (0..=k + 1)
                .map(|rr| {
                    let d = gj.diff(Var::Tp, rr);
                    (0..n).map(|l| eval_or_nan(&d, grid.node(l), grid.node(l))).collect()
                })
                .collect()
        })
        .collect();
    let lead = &coeffs.c[k];
    let lead_max = (0..n).map(|l| lead[2 * l].abs()).filter(|v| v.is_finite()).fold(0.0, f64::max);
    let excluded: Vec<usize> = (0..n)
        .filter(|&l| {
            let v = lead[2 * l];
            !v.is_finite() || v.abs() <= 1e-12 * lead_max
        })
        .collect();

    let h = grid.h();
    let rows = par::map_range(n, |i| {
        let mut x_row = vec![0.0; i + 1];
        let mut r_row = vec![0.0; i + 1];
        let b = 1.0 / lead[2 * i];
        if !b.is_finite() {
            return (x_row, r_row);
        }
        let mut y0 = vec![0.0; k];
        y0[k - 1] = b;
        let states = coeffs.solve_backward(i, h, &y0);
        let mut xq = vec![0.0; k + 2];
        for (ll, st) in states.iter().enumerate() {
            xq[..k].copy_from_slice(st);
            let lk = lead[2 * ll];
            let lower: f64 = (0..k).map(|m| coeffs.c[m][2 * ll] * xq[m]).sum();
            xq[k] = -lower / lk;
            let mut d: f64 = (0..=k).map(|m| dh[m][ll] * xq[m]).sum();
            d += (0..k).map(|m| coeffs.c[m][2 * ll] * xq[m + 1]).sum::<f64>();
            xq[k + 1] = -d / lk;
            let mut acc = 0.0;
            for (j, gj) in gder.iter().enumerate() {
                let mut yj = 0.0;
                for q in 0..=j {
                    yj += binom(j, q) * xq[q] * gj[j - q][ll];
                }
                acc += sign(j) * yj;
            }
            let (xv, rv) = (xq[0], s * acc);
            x_row[ll] = if xv.is_finite() { xv } else { 0.0 };
            r_row[ll] = if rv.is_finite() { rv } else { 0.0 };
        }
        (x_row, r_row)
    });
    let mut xs = Tri::zeros(n);
    let mut rs = Tri::zeros(n);
    for (i, (xr, rr)) in rows.into_iter().enumerate() {
        for ll in 0..=i {
            xs.set(i, ll, xr[ll]);
            rs.set(i, ll, rr[ll]);
        }
    }
    let object = StarObject::new(grid, Some(Kernel::from_samples(grid, rs)), Some(DeltaSeries::new(r)));
    Ok(Inverse { object, excluded, x_tilde: Some(Kernel::from_samples(grid, xs)), stages: 0 })
}

fn mask(grid: &Grid, e: &TimeExpr) -> Vec<usize> {
    let vals: Vec<f64> = (0..grid.n()).map(|i| eval_or_nan(e, grid.node(i), grid.node(i))).collect();
    let m = vals.iter().filter(|v| v.is_finite()).fold(0.0f64, |a, v| a.max(v.abs()));
    (0..grid.n()).filter(|&i| !vals[i].is_finite() || vals[i].abs() <= 1e-12 * m).collect()
}
