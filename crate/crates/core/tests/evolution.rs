use starlanczos::evolution::{ordered_exponential, pathsum_resolvent, rk4_reference};
use starlanczos::star_core::star_identity;
use starlanczos::star_lanczos::{run_lanczos, BetaMode, StarMatrix};
use starlanczos::{parse, Grid, Settings, TimeExpr};

fn m(rows: &[&[&str]]) -> Vec<Vec<TimeExpr>> {
    rows.iter().map(|r| r.iter().map(|s| parse(s).unwrap()).collect()).collect()
}

fn run(rows: &[&[&str]], w: &[f64], g: &Grid, mode: BetaMode) -> (Vec<f64>, Vec<f64>) {
    let s = Settings::default();
    let ex = m(rows);
    let a = StarMatrix::from_exprs(&ex, g).unwrap();
    let t = run_lanczos(&a, w, w, w.len(), mode, &s).unwrap();
    let u = ordered_exponential(&t, g.a, &s).unwrap();
    let r = rk4_reference(&ex, w, w, g, 8).unwrap();
    (u.u_samples, r)
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn zero_generator_gives_identity() {
    let g = Grid::new(0.0, 1.0, 21).unwrap();
    let s = Settings::default();
    let a = StarMatrix::from_exprs(&m(&[&["0"]]), &g).unwrap();
    let t = run_lanczos(&a, &[1.0], &[1.0], 1, BetaMode::Resolvent, &s).unwrap();
    let r = pathsum_resolvent(&t, &s).unwrap();
    assert!(r.sub(&star_identity(&g)).unwrap().magnitude().unwrap() < 1e-15);
    let u = ordered_exponential(&t, 0.0, &s).unwrap();
    assert!(u.u_samples.iter().all(|&x| (x - 1.0).abs() < 1e-14));
}

#[test]
fn constant_scalar_resolvent() {
    let g = Grid::new(0.0, 1.0, 401).unwrap();
    let s = Settings::default();
    for a in [-1.0, 0.5, 2.0] {
        let am = StarMatrix::from_exprs(&m(&[&[&a.to_string()]]), &g).unwrap();
        let t = run_lanczos(&am, &[1.0], &[1.0], 1, BetaMode::Resolvent, &s).unwrap();
        let r = pathsum_resolvent(&t, &s).unwrap();
        let k = r.kernel_samples();
        let mut err: f64 = 0.0;
        for i in 0..g.n() {
            for j in 0..=i {
                err = err.max((k.get(i, j) - a * (a * (g.node(i) - g.node(j))).exp()).abs());
            }
        }
        assert!(err < 1e-4, "{a}: {err}");
    }
}

#[test]
fn commuting_scalar_matches_closed_form() {
    let g = Grid::new(0.0, 1.0, 401).unwrap();
    let (u, _) = run(&[&["cos(t)"]], &[1.0], &g, BetaMode::Resolvent);
    let exact: Vec<f64> = (0..g.n()).map(|i| g.node(i).sin().exp()).collect();
    assert!(max_diff(&u, &exact) < 1e-3);
    assert_eq!(u[0], 1.0);
}

#[test]
fn rotation_generator_gives_cosine() {
    let g = Grid::new(0.0, 1.0, 401).unwrap();
    for mode in [BetaMode::Numeric, BetaMode::Resolvent] {
        let (u, _) = run(&[&["0", "1"], &["-1", "0"]], &[1.0, 0.0], &g, mode);
        let exact: Vec<f64> = (0..g.n()).map(|i| g.node(i).cos()).collect();
        assert!(max_diff(&u, &exact) < 1e-3, "{mode}");
    }
}

#[test]
fn two_by_two_matches_dense_discrete_solve() {
    // With n equal to the dimension, the continued fraction is the (1,1) entry
    // of the block resolvent; compare against a direct block solve.
    let g = Grid::new(0.0, 1.0, 61).unwrap();
    let s = Settings::default();
    let ex = m(&[&["0", "1"], &["t", "0"]]);
    let a = StarMatrix::from_exprs(&ex, &g).unwrap().to_discrete().unwrap();
    let t = run_lanczos(&a, &[1.0, 0.0], &[1.0, 0.0], 2, BetaMode::Numeric, &s).unwrap();
    let r = pathsum_resolvent(&t, &s).unwrap();

    let n = g.n();
    let h = g.h();
    let blocks: Vec<Vec<f64>> = (0..4)
        .map(|k| {
            let x = a.get(k / 2, k % 2).to_discrete().unwrap();
            let mut d = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..=i {
                    d[i * n + j] = x.get(i, j);
                }
            }
            d
        })
        .collect();
    // (I/h − A) in the ⋆ algebra is h·(I/h − A) as a matrix acting on h-weighted vectors.
    let big = 2 * n;
    let mut mat = vec![0.0; big * big];
    for bi in 0..2 {
        for bj in 0..2 {
            for i in 0..n {
                for j in 0..n {
                    let id = if bi == bj && i == j { 1.0 / h } else { 0.0 };
                    mat[(bi * n + i) * big + bj * n + j] = h * (id - blocks[bi * 2 + bj][i * n + j]);
                }
            }
        }
    }
    // Solve for the first block column of the ⋆-inverse: mat · X = I/h.
    let inv_col = |c: usize| -> Vec<f64> {
        let mut aug = mat.clone();
        let mut b = vec![0.0; big];
        b[c] = 1.0 / h;
        for k in 0..big {
            let p = (k..big).max_by(|&x, &y| aug[x * big + k].abs().total_cmp(&aug[y * big + k].abs())).unwrap();
            for j in 0..big {
                aug.swap(k * big + j, p * big + j);
            }
            b.swap(k, p);
            for i in k + 1..big {
                let f = aug[i * big + k] / aug[k * big + k];
                if f != 0.0 {
                    for j in k..big {
                        aug[i * big + j] -= f * aug[k * big + j];
                    }
                    b[i] -= f * b[k];
                }
            }
        }
        let mut x = vec![0.0; big];
        for k in (0..big).rev() {
            let s: f64 = (k + 1..big).map(|j| aug[k * big + j] * x[j]).sum();
            x[k] = (b[k] - s) / aug[k * big + k];
        }
        x
    };
    let rd = r.to_discrete().unwrap();
    let mut err: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for c in 0..n {
        let x = inv_col(c);
        for i in c..n {
            err = err.max((x[i] - rd.get(i, c)).abs());
            scale = scale.max(x[i].abs());
        }
    }
    assert!(err < 1e-9 * scale, "{err} {scale}");
}

#[test]
fn non_commuting_converges_quadratically() {
    let mut prev: Option<f64> = None;
    for n in [101, 201, 401] {
        let g = Grid::new(0.0, 1.0, n).unwrap();
        let (u, r) = run(&[&["0", "1"], &["t", "0"]], &[1.0, 0.0], &g, BetaMode::Resolvent);
        let e = max_diff(&u, &r);
        assert!(e < 5e-3);
        if let Some(p) = prev {
            assert!(p / e > 3.0, "{p} {e}");
        }
        prev = Some(e);
    }
}

#[test]
fn start_time_must_be_the_grid_start() {
    let g = Grid::new(0.0, 1.0, 21).unwrap();
    let s = Settings::default();
    let a = StarMatrix::from_exprs(&m(&[&["1"]]), &g).unwrap();
    let t = run_lanczos(&a, &[1.0], &[1.0], 1, BetaMode::Resolvent, &s).unwrap();
    assert!(ordered_exponential(&t, 0.5, &s).is_err());
}

#[test]
fn evolution_csv_columns() {
    let g = Grid::new(0.0, 1.0, 5).unwrap();
    let s = Settings::default();
    let ex = m(&[&["1"]]);
    let a = StarMatrix::from_exprs(&ex, &g).unwrap();
    let t = run_lanczos(&a, &[1.0], &[1.0], 1, BetaMode::Resolvent, &s).unwrap();
    let u = ordered_exponential(&t, 0.0, &s).unwrap();
    let r = rk4_reference(&ex, &[1.0], &[1.0], &g, 4).unwrap();
    let u = u.with_reference(r).unwrap();
    let mut buf = Vec::new();
    u.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("tp,u,u_ref,abs_err"));
    assert_eq!(lines.count(), 5);
    assert!(u.max_error().unwrap() < 5e-2);
}

#[test]
fn reference_solver_is_fourth_order() {
    let g = Grid::new(0.0, 1.0, 11).unwrap();
    let ex = m(&[&["0", "1"], &["-1", "0"]]);
    let e1 = max_diff(
        &rk4_reference(&ex, &[1.0, 0.0], &[1.0, 0.0], &g, 1).unwrap(),
        &(0..11).map(|i| g.node(i).cos()).collect::<Vec<_>>(),
    );
    let e2 = max_diff(
        &rk4_reference(&ex, &[1.0, 0.0], &[1.0, 0.0], &g, 2).unwrap(),
        &(0..11).map(|i| g.node(i).cos()).collect::<Vec<_>>(),
    );
    assert!(e1 / e2 > 12.0, "{e1} {e2}");
}
