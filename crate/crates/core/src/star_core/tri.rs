//! Dense lower-triangular matrices with row/column parallel kernels.

use crate::error::{Error, Result};
use crate::par;

#[derive(Clone, Debug, PartialEq)]
pub struct Tri {
    n: usize,
    data: Vec<f64>,
}

impl Tri {
    pub fn zeros(n: usize) -> Tri {
        Tri { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Tri {
        Tri::diagonal(&vec![1.0; n])
    }

    pub fn diagonal(d: &[f64]) -> Tri {
        let mut m = Tri::zeros(d.len());
        for (i, &v) in d.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    /// Builds the matrix from `f(i, j)` for `i >= j`.
    pub fn from_fn<F>(n: usize, f: F) -> Tri
    where
        F: Fn(usize, usize) -> f64 + Sync + Send,
    {
        let mut m = Tri::zeros(n);
        par::for_each_row(&mut m.data, n.max(1), |i, row| {
            for (j, x) in row.iter_mut().enumerate().take(i + 1) {
                *x = f(i, j);
            }
        });
        m
    }

    /// Fallible variant of [`Tri::from_fn`]; the first error in row order wins.
    pub fn try_from_fn<F, E>(n: usize, f: F) -> std::result::Result<Tri, E>
    where
        F: Fn(usize, usize) -> std::result::Result<f64, E> + Sync + Send,
        E: Send,
    {
        let rows = par::map_range(n, |i| (0..=i).map(|j| f(i, j)).collect::<std::result::Result<Vec<f64>, E>>());
        let mut m = Tri::zeros(n);
        for (i, r) in rows.into_iter().enumerate() {
            m.data[i * n..i * n + i + 1].copy_from_slice(&r?);
        }
        Ok(m)
    }

    /// Lower-triangular Toeplitz matrix with first column `c`.
    pub fn toeplitz(c: &[f64]) -> Tri {
        Tri::from_fn(c.len(), |i, j| c[i - j])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(j <= i);
        self.data[i * self.n + j] = v;
    }

    /// Entries `0..=i` of row `i`.
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..i * self.n + i + 1]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (j..self.n).map(|i| self.get(i, j)).collect()
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn set_diag(&mut self, d: &[f64]) {
        for (i, &v) in d.iter().enumerate() {
            self.set(i, i, v);
        }
    }

    pub fn scale_diag(&mut self, s: f64) {
        for i in 0..self.n {
            self.data[i * self.n + i] *= s;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tri {
        Tri { n: self.n, data: self.data.iter().map(|&x| f(x)).collect() }
    }

    pub fn zip(&self, o: &Tri, f: impl Fn(f64, f64) -> f64) -> Tri {
        assert_eq!(self.n, o.n);
        Tri { n: self.n, data: self.data.iter().zip(&o.data).map(|(&a, &b)| f(a, b)).collect() }
    }

    pub fn add(&self, o: &Tri) -> Tri {
        self.zip(o, |a, b| a + b)
    }

    pub fn sub(&self, o: &Tri) -> Tri {
        self.zip(o, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Tri {
        self.map(|x| x * s)
    }

    /// `diag(d) · self`.
    pub fn scale_rows(&self, d: &[f64]) -> Tri {
        let mut m = self.clone();
        let n = self.n;
        par::for_each_row(&mut m.data, n.max(1), |i, row| {
            for x in row.iter_mut() {
                *x *= d[i];
            }
        });
        m
    }

    /// `self · diag(d)`.
    pub fn scale_cols(&self, d: &[f64]) -> Tri {
        let mut m = self.clone();
        let n = self.n;
        par::for_each_row(&mut m.data, n.max(1), |_, row| {
            for (x, s) in row.iter_mut().zip(d) {
                *x *= s;
            }
        });
        m
    }

    /// Lower-triangular product, parallel over output rows.
    pub fn matmul(&self, o: &Tri) -> Tri {
        assert_eq!(self.n, o.n);
        let n = self.n;
        let mut c = Tri::zeros(n);
        par::for_each_row(&mut c.data, n.max(1), |i, out| {
            let a = self.row(i);
            for (k, &aik) in a.iter().enumerate() {
                if aik == 0.0 {
                    continue;
                }
                let b = o.row(k);
                for (x, &bkj) in out[..=k].iter_mut().zip(b) {
                    *x += aik * bkj;
                }
            }
        });
        c
    }

    /// Solves `self · X = rhs` for lower-triangular `X`, parallel over columns.
    pub fn solve(&self, rhs: &Tri) -> Result<Tri> {
        assert_eq!(self.n, rhs.n);
        let n = self.n;
        if let Some(node) = (0..n).find(|&i| self.get(i, i) == 0.0 || !self.get(i, i).is_finite()) {
            return Err(Error::Singular { node });
        }
        let cols = par::map_range(n, |j| {
            let mut x = vec![0.0; n - j];
            for i in j..n {
                let row = self.row(i);
                let mut s = rhs.get(i, j);
                for k in j..i {
                    s -= row[k] * x[k - j];
                }
                x[i - j] = s / row[i];
            }
            x
        });
        Ok(Tri::from_columns(n, cols))
    }

    pub fn inverse(&self) -> Result<Tri> {
        self.solve(&Tri::identity(self.n))
    }

    fn from_columns(n: usize, cols: Vec<Vec<f64>>) -> Tri {
        let mut m = Tri::zeros(n);
        for (j, c) in cols.into_iter().enumerate() {
            for (k, v) in c.into_iter().enumerate() {
                m.data[(j + k) * n + j] = v;
            }
        }
        m
    }

    /// Induced 1-norm (maximum absolute column sum).
    pub fn norm1(&self) -> f64 {
        let mut col = vec![0.0; self.n];
        for i in 0..self.n {
            for (j, x) in self.row(i).iter().enumerate() {
                col[j] += x.abs();
            }
        }
        col.into_iter().fold(0.0, f64::max)
    }

    /// Lower triangle as nested rows.
    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Tri> {
        let n = rows.len();
        let mut m = Tri::zeros(n);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != i + 1 {
                return Err(Error::Invalid(format!(
                    "row {i} of a lower triangle must have {} entries, found {}",
                    i + 1,
                    r.len()
                )));
            }
            m.data[i * n..i * n + i + 1].copy_from_slice(r);
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize, seed: f64) -> Tri {
        Tri::from_fn(n, |i, j| ((i * 7 + j * 3) as f64 * seed).sin() + if i == j { 2.0 } else { 0.0 })
    }

    #[test]
    fn product_matches_naive() {
        let (a, b) = (sample(9, 0.3), sample(9, 0.7));
        let c = a.matmul(&b);
        for i in 0..9 {
            for j in 0..=i {
                let s: f64 = (j..=i).map(|k| a.get(i, k) * b.get(k, j)).sum();
                assert!((c.get(i, j) - s).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn inverse_round_trip() {
        let a = sample(12, 0.4);
        let p = a.matmul(&a.inverse().unwrap());
        assert!(p.sub(&Tri::identity(12)).max_abs() < 1e-12);
    }

    #[test]
    fn zero_pivot_is_reported() {
        let mut a = sample(5, 0.2);
        a.set(3, 3, 0.0);
        assert!(matches!(a.inverse(), Err(Error::Singular { node: 3 })));
    }
}
