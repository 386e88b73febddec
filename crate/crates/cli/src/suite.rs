//! Regression suite over the worked examples, run by `star verify`.

use serde::Serialize;
use starlanczos::star_core::{apply_to_test, star_product, Coeff, Grid, Kernel, StarObject};
use starlanczos::star_inverse::verify::{pair_average_err, polynomial_suite, smooth_suite, two_sided_residual};
use starlanczos::star_inverse::{
    build_annihilator, invert_left_variable, invert_polynomial, invert_separable, solve_discrete, Annihilator, Inverse,
};
use starlanczos::star_lanczos::{run_lanczos, verify_moments, BetaMode, StarMatrix};
use starlanczos::{parse, Result, Settings, TimeExpr};

/// One measured quantity against its bound.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub example: &'static str,
    pub name: &'static str,
    pub value: f64,
    pub bound: f64,
    /// Whether `bound` is an upper bound.
    pub at_most: bool,
    pub pass: bool,
}

impl Check {
    fn new(example: &'static str, name: &'static str, value: f64, bound: f64) -> Check {
        Check { example, name, value, bound, at_most: true, pass: value.is_finite() && value <= bound }
    }

    fn at_least(example: &'static str, name: &'static str, value: f64, bound: f64) -> Check {
        Check { example, name, value, bound, at_most: false, pass: value.is_finite() && value >= bound }
    }
}

fn e(s: &str) -> TimeExpr {
    parse(s).expect("suite expression parses")
}

fn coeff_err(o: &StarObject, m: usize, g: &Grid, f: impl Fn(f64) -> f64) -> Result<f64> {
    let c = o.deltas().and_then(|d| d.coeff(m)).cloned().unwrap_or_else(Coeff::zero);
    let s = c.samples(g)?;
    Ok(s.iter().enumerate().map(|(i, x)| (x - f(g.node(i))).abs()).fold(0.0, f64::max))
}

fn kernel_err(k: &Kernel, f: impl Fn(f64, f64) -> f64) -> f64 {
    let g = k.grid();
    let mut err: f64 = 0.0;
    for i in 0..g.n() {
        for j in 0..=i {
            err = err.max((k.get(i, j) - f(g.node(i), g.node(j))).abs());
        }
    }
    err
}

fn residual(f: &str, inv: &Inverse, g: &Grid, tests: &[TimeExpr]) -> Result<f64> {
    let fo = StarObject::from_expr(&e(f), g)?;
    let (l, r) = two_sided_residual(&fo, &inv.object, tests, &inv.excluded)?;
    Ok(l.max(r))
}

/// `Θ^{∗−1} ∗ Θ^{∗−1}` applied to `sin(t′ − t)` against `−sin(t′ − t)`, with
/// the discrete inverse of the quadrature matrix of `Θ` and the action read
/// through two rounds of row-pair averaging.
pub fn theta_inverse_squared_error(n_points: usize) -> Result<f64> {
    let g = Grid::new(0.0, 1.0, n_points)?;
    let theta = StarObject::from_expr(&e("1"), &g)?;
    let phi = Kernel::from_expr(&e("sin(tp-t)"), &g)?;
    let once = solve_discrete(&theta, &phi)?;
    let twice = solve_discrete(&theta, &once)?;
    Ok(pair_average_err(&twice, |tp, t| -(tp - t).sin(), 2))
}

pub fn example_suite(settings: &Settings) -> Result<Vec<Check>> {
    let mut out = Vec::new();

    // Θ^{∗−1} = δ′
    let g = Grid::new(0.0, 1.0, 201)?;
    let inv = invert_left_variable(&e("1"), &g)?;
    let shape = coeff_err(&inv, 1, &g, |_| 1.0)?.max(coeff_err(&inv, 0, &g, |_| 0.0)?);
    out.push(Check::new("theta", "delta-prime coefficients", shape, 0.0));
    let sq = star_product(&inv, &inv)?;
    let exact = apply_to_test(&sq, &Kernel::from_expr(&e("sin(tp-t)"), &g)?)?;
    out.push(Check::new("theta", "δ″ action", kernel_err(&exact, |tp, t| -(tp - t).sin()), 1e-12));
    let e201 = theta_inverse_squared_error(201)?;
    let e401 = theta_inverse_squared_error(401)?;
    out.push(Check::new("theta", "discrete second derivative action", e201, 5e-3));
    out.push(Check::at_least("theta", "refinement ratio", e201 / e401, 3.5));

    // b̃(t′) = 2(cos t′ + 1)
    let b = e("2*(cos(tp)+1)");
    let inv = invert_left_variable(&b, &g)?;
    let c = coeff_err(&inv, 0, &g, |x| x.sin() / (2.0 * (x.cos() + 1.0).powi(2)))?
        .max(coeff_err(&inv, 1, &g, |x| 1.0 / (2.0 * (x.cos() + 1.0)))?);
    out.push(Check::new("left factor", "coefficients", c, 1e-12));
    let (l, r) = two_sided_residual(&StarObject::from_expr(&b, &g)?, &inv, &polynomial_suite(), &[])?;
    out.push(Check::new("left factor", "two-sided residual", l.max(r), 1e-3));

    // p̃ = t′ − 2t on [1, 2]
    let g12 = Grid::new(1.0, 2.0, 201)?;
    let inv = invert_polynomial(&e("tp - 2*t"), &g12, settings)?;
    let x = inv.x_tilde.as_ref().map_or(f64::INFINITY, |x| kernel_err(x, |_, t| 1.0 / t));
    out.push(Check::new("polynomial", "x̃ = 1/t", x, 1e-8));
    out.push(Check::new(
        "polynomial",
        "two-sided residual",
        residual("tp - 2*t", &inv, &g12, &polynomial_suite())?,
        1e-3,
    ));

    // t′² + t/t′ with L = δ − (t′²/2)δ″
    let l = Annihilator::new(vec![e("1"), e("0"), e("-tp^2/2")])?;
    let inv = invert_separable(&e("tp^2 + t/tp"), &l, &g12, settings)?;
    let closed = |tp: f64, t: f64| 2.0 * tp * (t * t + 1.0).powf(1.5) / ((tp * tp + 1.0).powf(2.5) * t.powi(3));
    let x = inv.x_tilde.as_ref().map_or(f64::INFINITY, |x| kernel_err(x, closed));
    out.push(Check::new("rational separable", "x̃ closed form", x, 1e-6));
    out.push(Check::new(
        "rational separable",
        "two-sided residual",
        residual("tp^2 + t/tp", &inv, &g12, &smooth_suite())?,
        1e-3,
    ));

    // cos(t′)·t on [1, 1.5]
    let gc = Grid::new(1.0, 1.5, 201)?;
    let l = build_annihilator(&[e("cos(tp)"), e("sin(tp)")], &gc, settings)?;
    let inv = invert_separable(&e("cos(tp)*t"), &l, &gc, settings)?;
    let c = coeff_err(&inv.object, 0, &gc, |x| x.sin() / (x * x.cos().powi(2)))?.max(coeff_err(
        &inv.object,
        1,
        &gc,
        |x| 1.0 / (x * x.cos()),
    )?);
    out.push(Check::new("trigonometric separable", "delta coefficients", c, 1e-8));
    out.push(Check::new(
        "trigonometric separable",
        "two-sided residual",
        residual("cos(tp)*t", &inv, &gc, &smooth_suite())?,
        1e-3,
    ));

    // e^{3t′+t}
    let l = build_annihilator(&[e("exp(3*tp)")], &g, settings)?;
    let inv = invert_separable(&e("exp(3*tp+t)"), &l, &g, settings)?;
    let c = coeff_err(&inv.object, 0, &g, |x| -3.0 * (-4.0 * x).exp())?
        .max(coeff_err(&inv.object, 1, &g, |x| (-4.0 * x).exp())?);
    out.push(Check::new("exponential separable", "delta coefficients", c, 1e-8));
    out.push(Check::new(
        "exponential separable",
        "two-sided residual",
        residual("exp(3*tp+t)", &inv, &g, &smooth_suite())?,
        1e-3,
    ));

    // Matching moments for [[0, 1], [t, 0]].
    let rows = vec![vec![e("0"), e("1")], vec![e("t"), e("0")]];
    let a = StarMatrix::from_exprs(&rows, &g)?;
    let w = [1.0, 0.0];
    let t = run_lanczos(&a, &w, &w, 2, BetaMode::Numeric, settings)?.complete()?;
    let rep = verify_moments(&a, &w, &w, &t, (1.0, 0.0), settings)?;
    out.push(Check::new("moments", "max relative discrepancy j ≤ 2n−1", rep.max_rel_err(), 1e-2));

    Ok(out)
}
