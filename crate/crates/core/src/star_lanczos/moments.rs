use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::TimeExpr;
use crate::settings::Settings;
use crate::star_core::{fd, product::evaluate, Grid, StarObject};

use super::lanczos::TridiagonalStar;
use super::matrix::{scalar_vector, StarMatrix};

/// `wᴴ A^{∗j} v` by repeated ∗-matrix–vector products.
pub fn star_moment(a: &StarMatrix, w: &[f64], v: &[f64], j: usize, settings: &Settings) -> Result<StarObject> {
    let g = *a.grid();
    let disc = a.is_discrete();
    let mut x = scalar_vector(v, &g, disc);
    for _ in 0..j {
        x = a.mul_vec(&x, settings.m_max)?;
    }
    super::matrix::dot(&scalar_vector(w, &g, disc), &x, settings.m_max)
}

/// `e_1ᴴ T^{∗j} e_1`, in the discrete algebra.
pub fn tridiagonal_moment(t: &TridiagonalStar, j: usize, settings: &Settings) -> Result<StarObject> {
    let m = t.as_matrix(true)?;
    let mut e1 = vec![0.0; t.n()];
    e1[0] = 1.0;
    star_moment(&m, &e1, &e1, j, settings)
}

/// `wᴴ A^{∗j} v` at `(t′, t)` from the nested integrals
/// `q_k(s) = ∫_t^s Ã(τ) q_{k−1}(τ) dτ`, `q_0 = v`, by RK4.
pub fn moment_reference(
    exprs: &[TimeExpr],
    w: &[f64],
    v: &[f64],
    j: usize,
    tp: f64,
    t: f64,
    steps: usize,
) -> Result<f64> {
    let d = w.len();
    if exprs.len() != d * d || v.len() != d {
        return Err(Error::Invalid("matrix and vectors do not conform".into()));
    }
    if j == 0 {
        return Ok(0.0);
    }
    let amat = |s: f64| -> Result<Vec<f64>> { exprs.iter().map(|e| Ok(e.eval(s, s)?)).collect() };
    let apply =
        |m: &[f64], x: &[f64]| -> Vec<f64> { (0..d).map(|i| (0..d).map(|k| m[i * d + k] * x[k]).sum()).collect() };
    // state: q_1 … q_{j−1}
    let levels = j - 1;
    let rhs = |s: f64, q: &[Vec<f64>]| -> Result<Vec<Vec<f64>>> {
        let m = amat(s)?;
        Ok((0..levels).map(|k| apply(&m, if k == 0 { v } else { &q[k - 1] })).collect())
    };
    let mut q = vec![vec![0.0; d]; levels];
    if levels > 0 && tp > t {
        let steps = steps.max(1);
        let h = (tp - t) / steps as f64;
        let comb = |q: &[Vec<f64>], k: &[Vec<f64>], c: f64| -> Vec<Vec<f64>> {
            q.iter().zip(k).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + c * y).collect()).collect()
        };
        for st in 0..steps {
            let s = t + st as f64 * h;
            let k1 = rhs(s, &q)?;
            let k2 = rhs(s + h / 2.0, &comb(&q, &k1, h / 2.0))?;
            let k3 = rhs(s + h / 2.0, &comb(&q, &k2, h / 2.0))?;
            let k4 = rhs(s + h, &comb(&q, &k3, h))?;
            for l in 0..levels {
                for i in 0..d {
                    q[l][i] += h / 6.0 * (k1[l][i] + 2.0 * k2[l][i] + 2.0 * k3[l][i] + k4[l][i]);
                }
            }
        }
    }
    let top = if levels == 0 { v.to_vec() } else { q[levels - 1].clone() };
    let y = apply(&amat(tp)?, &top);
    Ok(w.iter().zip(&y).map(|(a, b)| a * b).sum())
}

#[derive(Clone, Debug, Serialize)]
pub struct MomentRow {
    pub j: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub abs_err: f64,
    pub rel_err: f64,
    /// Whether `j ≤ 2n − 1`.
    #[serde(skip)]
    pub guaranteed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct MomentReport {
    pub tp: f64,
    pub t: f64,
    pub n: usize,
    pub rows: Vec<MomentRow>,
}

impl MomentReport {
    /// Largest relative discrepancy among the guaranteed moments.
    pub fn max_rel_err(&self) -> f64 {
        self.rows.iter().filter(|r| r.guaranteed).map(|r| r.rel_err).fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for r in &self.rows {
            out.serialize(r)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Both sides of the matching-moment identity at the node pair nearest
/// `eval_at`, for `j = 0..=2n` (the last row lies outside the guarantee).
///
/// The left side comes from [`moment_reference`] when the matrix was built
/// from expressions and from [`star_moment`] otherwise.
pub fn verify_moments(
    a: &StarMatrix,
    w: &[f64],
    v: &[f64],
    t: &TridiagonalStar,
    eval_at: (f64, f64),
    settings: &Settings,
) -> Result<MomentReport> {
    let g: Grid = *a.grid();
    let (i, k) = (g.nearest(eval_at.0), g.nearest(eval_at.1));
    if i < k {
        return Err(Error::Invalid("moments are evaluated at t′ ≥ t".into()));
    }
    let n = t.n();
    let tm = t.as_matrix(true)?;
    let mut e1 = vec![0.0; n];
    e1[0] = 1.0;
    let mut x = scalar_vector(&e1, &g, true);
    let ad = if a.exprs().is_some() { None } else { Some(a.to_discrete()?) };
    let mut y = scalar_vector(v, &g, true);
    let wv = scalar_vector(w, &g, true);
    let steps = (i - k).max(1) * settings.substeps.max(1);
    let mut rows = Vec::new();
    for j in 0..=2 * n {
        if j > 0 {
            x = tm.mul_vec(&x, settings.m_max)?;
        }
        let rhs = if j == 0 { 0.0 } else { evaluate(&x[0], i, k) };
        let lhs = match (&ad, a.exprs()) {
            (_, Some(ex)) => moment_reference(ex, w, v, j, g.node(i), g.node(k), steps)?,
            (Some(ad), None) => {
                if j > 0 {
                    y = ad.mul_vec(&y, settings.m_max)?;
                }
                if j == 0 {
                    0.0
                } else {
                    evaluate(&super::matrix::dot(&wv, &y, settings.m_max)?, i, k)
                }
            }
            (None, None) => unreachable!("either expressions or a discrete copy"),
        };
        let abs_err = (lhs - rhs).abs();
        let denom = lhs.abs().max(rhs.abs());
        let rel_err = if denom == 0.0 { 0.0 } else { abs_err / denom };
        rows.push(MomentRow { j, lhs, rhs, abs_err, rel_err, guaranteed: j < 2 * n });
    }
    Ok(MomentReport { tp: g.node(i), t: g.node(k), n, rows })
}

/// Largest `|∂^k_{t′} f̃|` for `k = 0..=3` over the kernel part, by finite
/// differences; fast growth with `k` flags a non-smooth coefficient.
pub fn smoothness_profile(o: &StarObject) -> Vec<f64> {
    let g = *o.grid();
    let s = o.kernel_samples();
    (0..=3).map(|k| if k == 0 { s.max_abs() } else { fd::d_tp_n(&s, g.h(), k).max_abs() }).collect()
}
