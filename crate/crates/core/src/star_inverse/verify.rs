//! Test-kernel suites and action residuals used to check inverses.

use crate::error::Result;
use crate::expr::{parse, TimeExpr};
use crate::star_core::{apply_to_test, star_product, Grid, Kernel, StarObject};

const SMOOTH: [&str; 10] = [
    "sin(tp-t)",
    "(tp-t)^2*exp(t)",
    "exp(tp-2*t)",
    "cos(tp)*t+1",
    "tp*t+tp-t",
    "1+tp^2-t^3/3",
    "sin(tp+t)",
    "exp(-(tp-t)^2)",
    "(1+tp)/(2+t)",
    "tp^3-2*tp*t^2+0.5",
];

const POLYNOMIAL: [&str; 5] = ["tp-t", "(tp-t)^2", "tp*t", "1+tp^2", "t^3-tp"];

fn suite(src: &[&str]) -> Vec<TimeExpr> {
    src.iter().map(|s| parse(s).expect("suite expression parses")).collect()
}

/// Ten smooth two-time test kernels.
pub fn smooth_suite() -> Vec<TimeExpr> {
    suite(&SMOOTH)
}

/// Five polynomial test kernels.
pub fn polynomial_suite() -> Vec<TimeExpr> {
    suite(&POLYNOMIAL)
}

/// Largest `|a − b|` over node pairs whose indices both stay more than three
/// nodes away from every excluded node.
pub fn masked_max_diff(a: &Kernel, b: &Kernel, excluded: &[usize]) -> f64 {
    let n = a.grid().n();
    let ok = |i: usize| excluded.iter().all(|&e| i.abs_diff(e) > 3);
    let mut worst: f64 = 0.0;
    for i in (0..n).filter(|&i| ok(i)) {
        for j in (0..=i).filter(|&j| ok(j)) {
            worst = worst.max((a.get(i, j) - b.get(i, j)).abs());
        }
    }
    worst
}

/// Worst `|(p ∗ q) ∗ φ − φ|` over the given test kernels.
pub fn action_residual(p: &StarObject, q: &StarObject, tests: &[TimeExpr], excluded: &[usize]) -> Result<f64> {
    let pq = star_product(p, q)?;
    let g: Grid = *p.grid();
    let mut worst: f64 = 0.0;
    for e in tests {
        let phi = Kernel::from_expr(e, &g)?;
        let out = apply_to_test(&pq, &phi)?;
        worst = worst.max(masked_max_diff(&out, &phi, excluded));
    }
    Ok(worst)
}

/// Both one-sided residuals of a claimed inverse pair.
pub fn two_sided_residual(
    f: &StarObject,
    inv: &StarObject,
    tests: &[TimeExpr],
    excluded: &[usize],
) -> Result<(f64, f64)> {
    Ok((action_residual(inv, f, tests, excluded)?, action_residual(f, inv, tests, excluded)?))
}

/// Worst `|k − f|` after `passes` rounds of averaging adjacent rows, each
/// compared at its shifted `t′`. Nodes near the diagonal are skipped.
///
/// Discrete inverses of kernels act like derivatives whose samples alternate
/// from row to row; pair averages remove the alternation.
pub fn pair_average_err(k: &Kernel, f: impl Fn(f64, f64) -> f64, passes: usize) -> f64 {
    let g = *k.grid();
    let n = g.n();
    let mut rows: Vec<Vec<f64>> =
        (0..n).map(|i| (0..n).map(|j| if j <= i { k.get(i, j) } else { 0.0 }).collect()).collect();
    let mut shift = 0.0;
    for _ in 0..passes {
        rows =
            (1..rows.len()).map(|i| rows[i].iter().zip(&rows[i - 1]).map(|(a, b)| 0.5 * (a + b)).collect()).collect();
        shift += 0.5;
    }
    let mut err: f64 = 0.0;
    for (r, row) in rows.iter().enumerate() {
        let tp = g.a + (r as f64 + shift) * g.h();
        let top = r + passes;
        for (j, v) in row.iter().enumerate().take(top.saturating_sub(2 * passes + 2)) {
            err = err.max((v - f(tp, g.node(j))).abs());
        }
    }
    err
}
