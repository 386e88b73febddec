//! Fourth-order finite differences on the grid and on the sample triangle.

use std::sync::OnceLock;

use super::tri::Tri;

const WIDTH: usize = 5;

/// Weights of the first derivative at offset 0 for unit-spaced nodes
/// `start, start+1, …, start+len-1`.
fn weights(start: i64, len: usize) -> &'static [f64] {
    static TABLE: OnceLock<Vec<Vec<Vec<f64>>>> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        (0..=WIDTH).map(|len| (0..len.max(1)).map(|k| lagrange_first_derivative(-(k as i64), len)).collect()).collect()
    });
    &table[len][(-start) as usize]
}

fn lagrange_first_derivative(start: i64, len: usize) -> Vec<f64> {
    let xs: Vec<f64> = (0..len).map(|k| (start + k as i64) as f64).collect();
    (0..len)
        .map(|k| {
            let mut w = 0.0;
            for l in 0..len {
                if l == k {
                    continue;
                }
                let mut term = 1.0 / (xs[k] - xs[l]);
                for m in 0..len {
                    if m != k && m != l {
                        term *= (0.0 - xs[m]) / (xs[k] - xs[m]);
                    }
                }
                w += term;
            }
            w
        })
        .collect()
}

/// Most centred window of up to five offsets inside `[lo, hi]` (which contains 0).
fn window(lo: i64, hi: i64) -> (i64, usize) {
    let len = ((hi - lo + 1) as usize).min(WIDTH);
    let start = (-2i64).clamp(lo, hi - len as i64 + 1);
    (start, len)
}

fn stencil(lo: i64, hi: i64, h: f64, at: impl Fn(i64) -> f64) -> f64 {
    let (start, len) = window(lo, hi);
    if len < 2 {
        return 0.0;
    }
    weights(start, len).iter().enumerate().map(|(k, w)| w * at(start + k as i64)).sum::<f64>() / h
}

/// Derivative of grid samples.
pub fn derivative(v: &[f64], h: f64, order: usize) -> Vec<f64> {
    let mut cur = v.to_vec();
    let n = v.len() as i64;
    for _ in 0..order {
        let prev = cur;
        cur = (0..n).map(|i| stencil(-i, n - 1 - i, h, |d| prev[(i + d) as usize])).collect();
    }
    cur
}

/// ∂/∂t′ of triangle samples. Columns too short for a stencil combine the
/// diagonal direction with the row direction.
pub fn d_tp(s: &Tri, h: f64) -> Tri {
    let n = s.n() as i64;
    Tri::from_fn(s.n(), |i, j| {
        let (i, j) = (i as i64, j as i64);
        let g = |a: i64, b: i64| s.get(a as usize, b as usize);
        if n - j >= WIDTH as i64 || n < WIDTH as i64 + 3 && n - j >= 2 {
            stencil(j - i, n - 1 - i, h, |d| g(i + d, j))
        } else {
            let diag = stencil(-j, n - 1 - i, h, |d| g(i + d, j + d));
            let row = stencil(-j, i - j, h, |d| g(i, j + d));
            diag - row
        }
    })
}

/// ∂/∂t of triangle samples. Rows too short for a stencil combine the
/// diagonal direction with the column direction.
pub fn d_t(s: &Tri, h: f64) -> Tri {
    let n = s.n() as i64;
    Tri::from_fn(s.n(), |i, j| {
        let (i, j) = (i as i64, j as i64);
        let g = |a: i64, b: i64| s.get(a as usize, b as usize);
        if i + 1 >= WIDTH as i64 || n < WIDTH as i64 + 3 && i >= 1 {
            stencil(-j, i - j, h, |d| g(i, j + d))
        } else {
            let diag = stencil(-j, n - 1 - i, h, |d| g(i + d, j + d));
            let col = stencil(j - i, n - 1 - i, h, |d| g(i + d, j));
            diag - col
        }
    })
}

pub fn d_tp_n(s: &Tri, h: f64, order: usize) -> Tri {
    (0..order).fold(s.clone(), |acc, _| d_tp(&acc, h))
}

pub fn d_t_n(s: &Tri, h: f64, order: usize) -> Tri {
    (0..order).fold(s.clone(), |acc, _| d_t(&acc, h))
}
