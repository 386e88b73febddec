use starlanczos::star_core::{
    apply_to_test, discrete, star_identity, star_product, Coeff, DeltaSeries, Grid, Kernel, StarObject,
};
use starlanczos::star_inverse::verify::{
    masked_max_diff, pair_average_err, polynomial_suite, smooth_suite, two_sided_residual,
};
use starlanczos::star_inverse::{
    build_annihilator, invert_discrete, invert_kernel_resolvent, invert_left_variable, invert_numeric,
    invert_polynomial, invert_right_variable, invert_separable, resolvent, Annihilator, ReducedOde,
};
use starlanczos::{parse, Error, Settings, TimeExpr};

fn e(s: &str) -> TimeExpr {
    parse(s).unwrap()
}

fn coeff_err(c: &Coeff, g: &Grid, f: impl Fn(f64) -> f64) -> f64 {
    let v = c.samples(g).unwrap();
    v.iter().enumerate().map(|(i, x)| (x - f(g.node(i))).abs()).fold(0.0, f64::max)
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

fn series(o: &StarObject) -> DeltaSeries {
    o.deltas().cloned().unwrap_or_default()
}

fn coeff(o: &StarObject, m: usize) -> Coeff {
    series(o).coeff(m).cloned().unwrap_or_else(Coeff::zero)
}

#[test]
fn theta_inverse_is_delta_prime() {
    let g = Grid::new(0.0, 1.0, 51).unwrap();
    let inv = invert_left_variable(&e("1"), &g).unwrap();
    assert!(inv.kernel().is_none());
    assert_eq!(series(&inv).order(), Some(1));
    assert_eq!(coeff_err(&coeff(&inv, 1), &g, |_| 1.0), 0.0);
    assert!(coeff(&inv, 0).is_zero());
}

#[test]
fn left_variable_inverse_of_cosine_factor() {
    let g = Grid::new(0.0, 1.0, 201).unwrap();
    let a = e("2*(cos(tp)+1)");
    let inv = invert_left_variable(&a, &g).unwrap();
    let c0 = |x: f64| x.sin() / (2.0 * (x.cos() + 1.0).powi(2));
    let c1 = |x: f64| 1.0 / (2.0 * (x.cos() + 1.0));
    assert!(coeff_err(&coeff(&inv, 0), &g, c0) < 1e-14);
    assert!(coeff_err(&coeff(&inv, 1), &g, c1) < 1e-14);
    let f = StarObject::from_expr(&a, &g).unwrap();
    let (l, r) = two_sided_residual(&f, &inv, &polynomial_suite(), &[]).unwrap();
    assert!(l < 1e-3 && r < 1e-3, "{l} {r}");
}

#[test]
fn right_variable_inverse() {
    let g = Grid::new(1.0, 2.0, 201).unwrap();
    let inv = invert_right_variable(&e("t"), &g).unwrap();
    assert!(coeff(&inv, 0).is_zero());
    assert!(coeff_err(&coeff(&inv, 1), &g, |x| 1.0 / x) < 1e-15);
    let f = StarObject::from_expr(&e("t"), &g).unwrap();
    let (l, r) = two_sided_residual(&f, &inv, &polynomial_suite(), &[]).unwrap();
    assert!(l < 1e-3 && r < 1e-3, "{l} {r}");
    assert!(invert_right_variable(&e("0"), &g).is_err());
    assert!(invert_right_variable(&e("tp"), &g).is_err());
}

#[test]
fn polynomial_inverse_of_linear_kernel() {
    let g = Grid::new(1.0, 2.0, 201).unwrap();
    let p = e("tp - 2*t");
    let inv = invert_polynomial(&p, &g, &Settings::default()).unwrap();
    let x = inv.x_tilde.as_ref().unwrap();
    assert!(kernel_err(x, |_, t| 1.0 / t) < 1e-8);
    let k = inv.object.kernel().unwrap();
    assert!(kernel_err(k, |_, t| -2.0 / t.powi(3)) < 1e-6);
    assert!(coeff_err(&coeff(&inv.object, 0), &g, |x| -1.0 / (x * x)) < 1e-12);
    assert!(coeff_err(&coeff(&inv.object, 1), &g, |x| -1.0 / x) < 1e-12);
    let f = StarObject::from_expr(&p, &g).unwrap();
    let (l, r) = two_sided_residual(&f, &inv.object, &polynomial_suite(), &inv.excluded).unwrap();
    assert!(l < 1e-3 && r < 1e-3, "{l} {r}");
}

#[test]
fn degenerate_polynomial_gives_second_delta() {
    let g = Grid::new(0.0, 1.0, 51).unwrap();
    let inv = invert_polynomial(&e("tp - t"), &g, &Settings::default()).unwrap();
    assert_eq!(inv.stages, 1);
    assert!(inv.object.kernel().is_none_or(Kernel::is_zero));
    assert_eq!(series(&inv.object).order(), Some(2));
    assert_eq!(coeff_err(&coeff(&inv.object, 2), &g, |_| 1.0), 0.0);
}

#[test]
fn annihilator_examples() {
    let g = Grid::new(0.0, 1.0, 51).unwrap();
    let s = Settings::default();
    let l = build_annihilator(&[e("cos(tp)"), e("sin(tp)")], &g, &s).unwrap();
    let want = [1.0, 0.0, 1.0];
    for (c, w) in l.coeffs().iter().zip(want) {
        for i in 0..g.n() {
            assert!((c.eval(g.node(i), g.node(i)).unwrap() - w).abs() < 1e-12);
        }
    }
    let l = build_annihilator(&[e("exp(3*tp)")], &g, &s).unwrap();
    assert_eq!(l.order(), 1);
    assert!((l.coeffs()[0].eval(0.3, 0.3).unwrap() + 3.0).abs() < 1e-12);
    let g2 = Grid::new(1.0, 2.0, 51).unwrap();
    let l = build_annihilator(&[e("tp^2"), e("1/tp")], &g2, &s).unwrap();
    let (res, scale) = l.residual(&e("tp^2 + t/tp"), &g2);
    assert!(res <= 1e-10 * scale);
    assert!(matches!(build_annihilator(&[e("tp"), e("2*tp")], &g, &s), Err(Error::Wronskian)));
}

#[test]
fn reduced_ode_coefficients() {
    let l = Annihilator::new(vec![e("1"), e("0"), e("-tp^2/2")]).unwrap();
    let ode = ReducedOde::new(&e("tp^2 + t/tp"), &l);
    for &t in &[1.0, 1.3, 2.0] {
        assert!((ode.h[0].eval(0.0, t).unwrap() - 1.5 * t).abs() < 1e-12);
        assert!((ode.h[1].eval(0.0, t).unwrap() - (t.powi(4) + t * t) / 2.0).abs() < 1e-12);
    }
}

#[test]
fn separable_rational_kernel() {
    let g = Grid::new(1.0, 2.0, 201).unwrap();
    let f = e("tp^2 + t/tp");
    let l = Annihilator::new(vec![e("1"), e("0"), e("-tp^2/2")]).unwrap();
    let inv = invert_separable(&f, &l, &g, &Settings::default()).unwrap();
    let x = inv.x_tilde.as_ref().unwrap();
    let closed = |tp: f64, t: f64| 2.0 * tp * (t * t + 1.0).powf(1.5) / ((tp * tp + 1.0).powf(2.5) * t.powi(3));
    assert!(kernel_err(x, closed) < 1e-6);
    let fo = StarObject::from_expr(&f, &g).unwrap();
    let (a, b) = two_sided_residual(&fo, &inv.object, &smooth_suite(), &inv.excluded).unwrap();
    assert!(a < 1e-3 && b < 1e-3, "{a} {b}");
}

#[test]
fn separable_trigonometric_kernel() {
    let g = Grid::new(1.0, 1.5, 201).unwrap();
    let s = Settings::default();
    let f = e("cos(tp)*t");
    let l = build_annihilator(&[e("cos(tp)"), e("sin(tp)")], &g, &s).unwrap();
    let inv = invert_separable(&f, &l, &g, &s).unwrap();
    let c0 = |x: f64| x.sin() / (x * x.cos().powi(2));
    let c1 = |x: f64| 1.0 / (x * x.cos());
    assert!(coeff_err(&coeff(&inv.object, 0), &g, c0) < 1e-8);
    assert!(coeff_err(&coeff(&inv.object, 1), &g, c1) < 1e-8);
    assert!(kernel_err(inv.x_tilde.as_ref().unwrap(), |tp, t| -t.cos() / (tp * tp.cos().powi(2))) < 1e-8);
    assert!(inv.object.kernel().unwrap().max_abs() < 1e-8);
    let fo = StarObject::from_expr(&f, &g).unwrap();
    let (a, b) = two_sided_residual(&fo, &inv.object, &smooth_suite(), &inv.excluded).unwrap();
    assert!(a < 1e-3 && b < 1e-3, "{a} {b}");
}

#[test]
fn trigonometric_delta_prime_sign_as_printed_fails() {
    let g = Grid::new(1.0, 1.5, 201).unwrap();
    let printed =
        StarObject::from_deltas(&g, DeltaSeries::from_exprs(&[e("sin(tp)/(cos(tp)^2*tp)"), e("-1/(cos(tp)*tp)")]));
    let fo = StarObject::from_expr(&e("cos(tp)*t"), &g).unwrap();
    let (a, _) = two_sided_residual(&fo, &printed, &smooth_suite(), &[]).unwrap();
    assert!(a > 0.1);
}

#[test]
fn separable_exponential_kernel() {
    let g = Grid::new(0.0, 1.0, 201).unwrap();
    let s = Settings::default();
    let f = e("exp(3*tp+t)");
    let l = build_annihilator(&[e("exp(3*tp)")], &g, &s).unwrap();
    let inv = invert_separable(&f, &l, &g, &s).unwrap();
    assert!(inv.object.kernel().is_none());
    assert!(coeff_err(&coeff(&inv.object, 0), &g, |x| -3.0 * (-4.0 * x).exp()) < 1e-8);
    assert!(coeff_err(&coeff(&inv.object, 1), &g, |x| (-4.0 * x).exp()) < 1e-8);
    let fo = StarObject::from_expr(&f, &g).unwrap();
    let (a, b) = two_sided_residual(&fo, &inv.object, &smooth_suite(), &[]).unwrap();
    assert!(a < 1e-3 && b < 1e-3, "{a} {b}");
}

#[test]
fn separable_agrees_with_polynomial_route() {
    let g = Grid::new(1.0, 2.0, 101).unwrap();
    let s = Settings::default();
    let p = e("tp^2*t + tp + 1");
    let a = invert_polynomial(&p, &g, &s).unwrap();
    let l = build_annihilator(&[e("tp^2"), e("tp"), e("1")], &g, &s).unwrap();
    let b = invert_separable(&p, &l, &g, &s).unwrap();
    let po = StarObject::from_expr(&p, &g).unwrap();
    let ra = two_sided_residual(&po, &a.object, &smooth_suite(), &a.excluded).unwrap();
    let rb = two_sided_residual(&po, &b.object, &smooth_suite(), &b.excluded).unwrap();
    let worst = ra.0.max(ra.1).max(rb.0).max(rb.1);
    let mut gap: f64 = 0.0;
    for t in smooth_suite() {
        let phi = Kernel::from_expr(&t, &g).unwrap();
        let x = apply_to_test(&a.object, &phi).unwrap();
        let y = apply_to_test(&b.object, &phi).unwrap();
        gap = gap.max(masked_max_diff(&x, &y, &[]));
    }
    assert!(worst < 1e-3, "{worst}");
    let scale = smooth_suite()
        .iter()
        .map(|t| apply_to_test(&a.object, &Kernel::from_expr(t, &g).unwrap()).unwrap().max_abs())
        .fold(0.0, f64::max);
    assert!(gap <= 2.0 * worst.max(1e-6) * scale.max(1.0), "{gap} {worst}");
}

#[test]
fn resolvent_of_scaled_theta() {
    let g = Grid::new(0.0, 1.0, 401).unwrap();
    for a in [-1.0, 0.5, 2.0] {
        let f = StarObject::from_expr(&TimeExpr::constant(a), &g).unwrap();
        let r = resolvent(&f).unwrap();
        assert!(coeff_err(&coeff(&r, 0), &g, |_| 1.0) == 0.0);
        let err = kernel_err(r.kernel().unwrap(), |tp, t| a * (a * (tp - t)).exp());
        assert!(err < 1e-4, "a={a}: {err}");
    }
    let z = resolvent(&StarObject::zero(&g)).unwrap();
    assert!(z.approx_eq(&star_identity(&g), 0.0).unwrap());
    assert!(resolvent(&star_identity(&g)).is_err());
}

#[test]
fn resolvent_is_two_sided() {
    let g = Grid::new(0.0, 1.0, 201).unwrap();
    let f = StarObject::from_expr(&e("sin(tp)*t + 1"), &g).unwrap();
    let r = resolvent(&f).unwrap();
    let one_minus = star_identity(&g).sub(&f).unwrap();
    let (a, b) = two_sided_residual(&one_minus, &r, &smooth_suite(), &[]).unwrap();
    assert!(a < 1e-3 && b < 1e-3, "{a} {b}");
}

#[test]
fn resolvent_route_matches_closed_forms() {
    let g = Grid::new(1.0, 2.0, 201).unwrap();
    let s = Settings::default();
    let p = StarObject::from_expr(&e("tp - 2*t"), &g).unwrap();
    let inv = invert_kernel_resolvent(&p, &s).unwrap();
    let (a, b) = two_sided_residual(&p, &inv.object, &polynomial_suite(), &inv.excluded).unwrap();
    assert!(a < 1e-3 && b < 1e-3, "{a} {b}");

    let beta = StarObject::from_expr(&e("2*(sin(tp)-sin(t)) + 2*(tp-t)"), &g).unwrap();
    let via_resolvent = invert_kernel_resolvent(&beta, &s).unwrap();
    assert_eq!(via_resolvent.stages, 1);
    let b1 = invert_left_variable(&e("2*(cos(tp)+1)"), &g).unwrap();
    let b2 = invert_left_variable(&e("1"), &g).unwrap();
    let product = star_product(&b1, &b2).unwrap();
    let mut gap: f64 = 0.0;
    for t in smooth_suite() {
        let phi = Kernel::from_expr(&t, &g).unwrap();
        let x = apply_to_test(&via_resolvent.object, &phi).unwrap();
        let y = apply_to_test(&product, &phi).unwrap();
        gap = gap.max(masked_max_diff(&x, &y, &[]));
    }
    assert!(gap < 1e-2, "{gap}");
}

#[test]
fn numeric_inverse_of_theta() {
    let s = Settings::default();
    let mut errs = Vec::new();
    for n in [101, 201] {
        let g = Grid::new(0.0, 1.0, n).unwrap();
        let theta = Kernel::from_expr(&e("1"), &g).unwrap();
        let inv = invert_numeric(&theta, &s).unwrap();
        let x = inv.object.discrete_matrix().unwrap();
        let prod = discrete::product(x, &discrete::from_kernel(&theta), &g);
        let res = prod.sub(&discrete::identity(&g)).max_abs();
        assert!(res <= 1e-8 / g.h(), "{res}");
        assert!(inv.cond < s.cond_cap);
        let phi = Kernel::from_expr(&e("sin(tp-t)"), &g).unwrap();
        let out = apply_to_test(&inv.object, &phi).unwrap();
        errs.push(pair_average_err(&out, |tp, t| (tp - t).cos(), 1));
    }
    assert!(errs[1] < errs[0] / 3.5 && errs[0] < 1e-4, "{errs:?}");
}

#[test]
fn numeric_inverse_of_linear_difference() {
    let s = Settings::default();
    let g = Grid::new(0.0, 1.0, 201).unwrap();
    let f = Kernel::from_expr(&e("tp-t"), &g).unwrap();
    let inv = invert_numeric(&f, &s).unwrap();
    let phi = Kernel::from_expr(&e("sin(tp-t)"), &g).unwrap();
    let out = apply_to_test(&inv.object, &phi).unwrap();
    let err = pair_average_err(&out, |tp, t| -(tp - t).sin(), 2);
    assert!(err < 1e-4, "{err}");
}

#[test]
fn numeric_and_closed_form_agree() {
    let s = Settings::default();
    let f = e("exp(3*tp+t)");
    let exact = |tp: f64, t: f64| (-4.0 * tp).exp() * ((tp - t).cos() - 3.0 * (tp - t).sin());
    let mut errs = Vec::new();
    for n in [101, 201, 401] {
        let g = Grid::new(0.0, 1.0, n).unwrap();
        let l = build_annihilator(&[e("exp(3*tp)")], &g, &s).unwrap();
        let closed = invert_separable(&f, &l, &g, &s).unwrap();
        let numeric = invert_discrete(&StarObject::from_expr(&f, &g).unwrap(), &s).unwrap();
        let phi = Kernel::from_expr(&e("sin(tp-t)"), &g).unwrap();
        let a = apply_to_test(&closed.object, &phi).unwrap();
        assert!(kernel_err(&a, exact) < 1e-8);
        let b = apply_to_test(&numeric.object, &phi).unwrap();
        let err = pair_average_err(&b, exact, 1);
        assert!(err < g.h(), "{err}");
        errs.push(err);
    }
    assert!(errs[0] > 1.8 * errs[1] && errs[1] > 1.8 * errs[2], "{errs:?}");
}

#[test]
fn singular_discrete_matrix_is_reported() {
    let g = Grid::new(0.0, 1.0, 21).unwrap();
    let zero = StarObject::from_kernel(Kernel::zero(&g));
    assert!(matches!(invert_discrete(&zero, &Settings::default()), Err(Error::Singular { .. })));
    let f = StarObject::from_expr(&e("1 + (tp-t)^3"), &g).unwrap();
    let tight = Settings { cond_cap: 10.0, ..Settings::default() };
    assert!(matches!(invert_discrete(&f, &tight), Err(Error::IllConditioned { .. })));
}

#[test]
fn annihilation_failure_is_reported() {
    let g = Grid::new(0.0, 1.0, 21).unwrap();
    let l = Annihilator::new(vec![e("1"), e("0"), e("1")]).unwrap();
    let r = invert_separable(&e("exp(tp)"), &l, &g, &Settings::default());
    assert!(matches!(r, Err(Error::Annihilation { .. })));
}
