use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use starlanczos::star_core::{
    apply_to_test, discrete, integrate_rows, normalize_right_coefficient, star_identity, star_product, Coeff,
    DeltaSeries, Grid, Kernel, StarObject, Tri,
};
use starlanczos::{parse, TimeExpr};

fn e(s: &str) -> TimeExpr {
    parse(s).unwrap()
}

fn kernel(s: &str, g: &Grid) -> StarObject {
    StarObject::from_expr(&e(s), g).unwrap()
}

fn max_kernel_err(k: &Kernel, f: impl Fn(f64, f64) -> f64) -> f64 {
    let g = k.grid();
    let mut err: f64 = 0.0;
    for i in 0..g.n() {
        for j in 0..=i {
            err = err.max((k.get(i, j) - f(g.node(i), g.node(j))).abs());
        }
    }
    err
}

fn coeff_err(c: &Coeff, g: &Grid, f: impl Fn(f64) -> f64) -> f64 {
    let v = c.samples(g).unwrap();
    v.iter().enumerate().map(|(i, x)| (x - f(g.node(i))).abs()).fold(0.0, f64::max)
}

fn nth_central(f: &dyn Fn(f64) -> f64, x: f64, n: usize, h: f64) -> f64 {
    match n {
        0 => f(x),
        _ => {
            let g = |y: f64| nth_central(f, y, n - 1, h);
            (g(x + h) - g(x - h)) / (2.0 * h)
        }
    }
}

fn simpson(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let m = 400;
    let h = (b - a) / m as f64;
    let mut s = f(a) + f(b);
    for k in 1..m {
        s += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// Random polynomial test kernel of total degree three.
fn random_poly(rng: &mut ChaCha8Rng) -> (TimeExpr, [f64; 10]) {
    let c: [f64; 10] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
    let text = format!(
        "{} + {}*tp + {}*t + {}*tp^2 + {}*tp*t + {}*t^2 + {}*tp^3 + {}*tp^2*t + {}*tp*t^2 + {}*t^3",
        c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7], c[8], c[9]
    )
    .replace("+ -", "- ");
    (e(&text), c)
}

#[test]
fn theta_squared() {
    let g = Grid::new(0.0, 1.0, 101).unwrap();
    let th = StarObject::theta(&g);
    let r = star_product(&th, &th).unwrap();
    assert!(r.deltas().is_none());
    assert!(max_kernel_err(r.kernel().unwrap(), |a, b| a - b) < 1e-13);
    let k = r.kernel().unwrap();
    assert!((0..g.n()).all(|i| k.get(i, i) == 0.0));
}

#[test]
fn second_delta_on_linear_kernel() {
    let g = Grid::new(1.0, 2.0, 51).unwrap();
    let d2 = StarObject::from_deltas(&g, DeltaSeries::single(2, Coeff::constant(1.0)));
    let r = star_product(&d2, &kernel("tp - 2*t", &g)).unwrap();
    assert!(r.kernel().is_none_or(|k| k.max_abs() == 0.0));
    let d = r.deltas().unwrap();
    assert_eq!(d.order(), Some(1));
    assert!(coeff_err(&d.coeffs()[0], &g, |_| 0.0) < 1e-14);
    assert!(coeff_err(&d.coeffs()[1], &g, |x| -x) < 1e-14);
}

#[test]
fn first_delta_on_sine_difference() {
    let g = Grid::new(0.0, 1.0, 51).unwrap();
    let d1 = StarObject::from_deltas(&g, DeltaSeries::single(1, Coeff::constant(1.0)));
    let r = star_product(&d1, &kernel("sin(tp) - sin(t)", &g)).unwrap();
    assert!(max_kernel_err(r.kernel().unwrap(), |a, _| a.cos()) < 1e-14);
    assert!(r.deltas().is_none_or(|d| d.max_abs(&g).unwrap() < 1e-15));
}

#[test]
fn identity_laws() {
    let g = Grid::new(0.0, 1.0, 41).unwrap();
    let one = star_identity(&g);
    let f = kernel("exp(tp - t) * cos(t)", &g)
        .add(&StarObject::from_deltas(&g, DeltaSeries::from_exprs(&[e("tp"), e("sin(tp)")])))
        .unwrap();
    for r in [star_product(&one, &f).unwrap(), star_product(&f, &one).unwrap()] {
        assert!(r.approx_eq(&f, 1e-14).unwrap());
    }
    let sampled = StarObject::from_kernel(f.kernel().unwrap().without_source());
    let r = star_product(&sampled, &one).unwrap();
    assert!(r.approx_eq(&sampled, 1e-14).unwrap());
}

#[test]
fn discrete_identity_is_inverse_step() {
    let g = Grid::new(0.0, 2.0, 21).unwrap();
    let m = star_identity(&g).to_discrete().unwrap();
    for i in 0..g.n() {
        assert!((m.get(i, i) - 1.0 / g.h()).abs() < 1e-12);
    }
    let f = kernel("tp*t + 1", &g).as_discrete().unwrap();
    let r = star_product(&star_identity(&g).as_discrete().unwrap(), &f).unwrap();
    assert!(r.approx_eq(&f, 1e-13).unwrap());
}

#[test]
fn discrete_products_associate() {
    let g = Grid::new(0.0, 1.0, 60).unwrap();
    let p = kernel("sin(tp + 2*t)", &g).as_discrete().unwrap();
    let q = kernel("tp^2 - t", &g).add(&star_identity(&g)).unwrap().as_discrete().unwrap();
    let r = kernel("exp(t)", &g).as_discrete().unwrap();
    let left = star_product(&star_product(&p, &q).unwrap(), &r).unwrap();
    let right = star_product(&p, &star_product(&q, &r).unwrap()).unwrap();
    assert!(left.approx_eq(&right, 1e-13).unwrap());
}

#[test]
fn symbolic_delta_products_associate() {
    let g = Grid::new(0.5, 1.5, 31).unwrap();
    let a = StarObject::from_deltas(&g, DeltaSeries::from_exprs(&[e("tp"), e("cos(tp)")]));
    let b = StarObject::from_deltas(&g, DeltaSeries::from_exprs(&[e("1"), e("0"), e("tp^2")]));
    let c = StarObject::from_deltas(&g, DeltaSeries::from_exprs(&[e("exp(tp)"), e("2")]));
    let left = star_product(&star_product(&a, &b).unwrap(), &c).unwrap();
    let right = star_product(&a, &star_product(&b, &c).unwrap()).unwrap();
    let scale = left.magnitude().unwrap();
    let diff = left.sub(&right).unwrap().magnitude().unwrap();
    assert!(diff <= 10.0 * f64::EPSILON * scale * 16.0, "{diff} vs {scale}");
}

#[test]
fn mixed_products_associate_to_quadrature_accuracy() {
    let gap = |n: usize| {
        let g = Grid::new(0.0, 1.0, n).unwrap();
        let a = StarObject::from_deltas(&g, DeltaSeries::from_exprs(&[e("tp"), e("1")]));
        let b = kernel("cos(tp - t) + t", &g);
        let c = kernel("exp(t - tp)", &g);
        let left = star_product(&star_product(&a, &b).unwrap(), &c).unwrap();
        let right = star_product(&a, &star_product(&b, &c).unwrap()).unwrap();
        left.sub(&right).unwrap().magnitude().unwrap()
    };
    let (d1, d2) = (gap(101), gap(201));
    assert!(d2 < 1e-5 && d1 / d2 > 3.5, "{d1} {d2}");
}

#[test]
fn normalization_examples() {
    let g = Grid::new(1.0, 2.0, 21).unwrap();
    let s = normalize_right_coefficient(&e("t"), 0, &g);
    assert_eq!(s.order(), Some(0));
    assert!(coeff_err(&s.coeffs()[0], &g, |x| x) < 1e-15);
    let s = normalize_right_coefficient(&e("t"), 1, &g);
    assert!(coeff_err(&s.coeffs()[0], &g, |_| 1.0) < 1e-15);
    assert!(coeff_err(&s.coeffs()[1], &g, |x| x) < 1e-15);
    let s = normalize_right_coefficient(&e("1/(2*(cos(t)+1))"), 1, &g);
    let b = |x: f64| 2.0 * (x.cos() + 1.0);
    assert!(coeff_err(&s.coeffs()[0], &g, |x| 2.0 * x.sin() / (b(x) * b(x))) < 1e-13);
    assert!(coeff_err(&s.coeffs()[1], &g, |x| 1.0 / b(x)) < 1e-15);
}

/// Pairs `c(t)δ^{(j)}` and its normalized series against test functions by
/// one-dimensional quadrature of the distributional action.
#[test]
fn normalization_pairs_like_its_input() {
    let g = Grid::new(0.5, 1.5, 11).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let cs = ["t", "t^2 + 1", "exp(-t)", "sin(2*t)"];
    for _ in 0..10 {
        let (phi, _) = random_poly(&mut rng);
        for c in cs {
            for j in 0..3 {
                let ce = e(c);
                let series = normalize_right_coefficient(&ce, j, &g);
                let sign = |k: usize| if k.is_multiple_of(2) { 1.0 } else { -1.0 };
                let step = 1e-3;
                let lhs = simpson(g.a, g.b, |t| {
                    let f = |tp: f64| phi.eval(tp, t).unwrap();
                    ce.eval(0.0, t).unwrap() * sign(j) * nth_central(&f, t, j, step)
                });
                let rhs = simpson(g.a, g.b, |t| {
                    series
                        .coeffs()
                        .iter()
                        .enumerate()
                        .map(|(n, cn)| {
                            let ex = cn.expr().unwrap().clone();
                            let f = |tp: f64| ex.eval(tp, tp).unwrap() * phi.eval(tp, t).unwrap();
                            sign(n) * nth_central(&f, t, n, step)
                        })
                        .sum()
                });
                assert!((lhs - rhs).abs() < 1e-5 * (1.0 + lhs.abs()), "{c} j={j}: {lhs} vs {rhs}");
            }
        }
    }
}

#[test]
fn apply_examples() {
    let g = Grid::new(0.0, 1.0, 101).unwrap();
    let d2 = StarObject::from_deltas(&g, DeltaSeries::single(2, Coeff::constant(1.0)));
    let phi = Kernel::from_expr(&e("(tp - t)^2 * sin(tp + t)"), &g).unwrap();
    let r = apply_to_test(&d2, &phi).unwrap();
    let want = e("(tp - t)^2 * sin(tp + t)").diff(starlanczos::Var::Tp, 2);
    assert!(max_kernel_err(&r, |a, b| want.eval(a, b).unwrap()) < 1e-12);
    let r = apply_to_test(&star_identity(&g), &phi).unwrap();
    assert!(max_kernel_err(&r, |a, b| phi.source().unwrap().eval(a, b).unwrap()) < 1e-15);
    let th = Kernel::from_expr(&e("1"), &g).unwrap();
    let r = apply_to_test(&StarObject::theta(&g), &th).unwrap();
    assert!(max_kernel_err(&r, |a, b| a - b) < 1e-13);
}

#[test]
fn sampled_second_derivative_converges() {
    let err = |n: usize| {
        let g = Grid::new(0.0, 1.0, n).unwrap();
        let d2 = StarObject::from_deltas(&g, DeltaSeries::single(2, Coeff::constant(1.0)));
        let phi = Kernel::from_expr(&e("sin(tp - t)"), &g).unwrap().without_source();
        let r = apply_to_test(&d2, &phi).unwrap();
        max_kernel_err(&r, |a, b| -(a - b).sin())
    };
    let (e1, e2) = (err(101), err(201));
    assert!(e1 < 1e-5 && e1 / e2 > 3.5, "{e1} {e2}");
}

#[test]
fn integrate_rows_examples() {
    let g = Grid::new(0.0, 1.0, 101).unwrap();
    let f = integrate_rows(&star_identity(&g), 10).unwrap();
    assert!(f[10..].iter().all(|&x| x == 1.0));
    let f = integrate_rows(&StarObject::theta(&g), 0).unwrap();
    for (i, x) in f.iter().enumerate() {
        assert!((x - g.node(i)).abs() < 1e-14);
    }
    for a in [-1.0, 0.5, 2.0] {
        let r =
            StarObject::from_expr(&e(&format!("{a}*exp({a}*(tp - t))")), &g).unwrap().add(&star_identity(&g)).unwrap();
        let f = integrate_rows(&r, 0).unwrap();
        for (i, x) in f.iter().enumerate() {
            assert!((x - (a * g.node(i)).exp()).abs() < 1e-3 * a * a);
        }
    }
    assert!(integrate_rows(&star_identity(&g), 101).is_err());
}

#[test]
fn grid_mismatch_is_an_error() {
    let g1 = Grid::new(0.0, 1.0, 11).unwrap();
    let g2 = Grid::new(0.0, 1.0, 12).unwrap();
    assert!(star_product(&StarObject::theta(&g1), &StarObject::theta(&g2)).is_err());
}

#[test]
fn delta_order_cap() {
    let g = Grid::new(0.0, 1.0, 11).unwrap();
    let d5 = StarObject::from_deltas(&g, DeltaSeries::single(5, Coeff::constant(1.0)));
    assert!(star_product(&d5, &d5).is_err());
    assert!(starlanczos::star_core::star_product_capped(&d5, &d5, 10).is_ok());
}

#[test]
fn zero_object_equals_zero_kernel() {
    let g = Grid::new(0.0, 1.0, 11).unwrap();
    let z = StarObject::zero(&g);
    let zk = StarObject::from_kernel(Kernel::from_samples(&g, Tri::zeros(11)));
    assert!(z.is_empty());
    assert!(z.approx_eq(&zk, 1e-10).unwrap());
}

#[test]
fn discrete_derivative_of_theta_is_identity() {
    let g = Grid::new(0.0, 1.0, 31).unwrap();
    let d1 = StarObject::from_deltas(&g, DeltaSeries::single(1, Coeff::constant(1.0)));
    let prod = discrete::product(&d1.to_discrete().unwrap(), &StarObject::theta(&g).to_discrete().unwrap(), &g);
    assert!(prod.sub(&discrete::identity(&g)).max_abs() < 1e-9);
}
