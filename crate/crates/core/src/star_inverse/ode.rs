//! Classical RK4 for `Σ_{m≤k} c_m(t) x^{(m)}(t) = 0`, integrated backward in t.

/// Coefficients sampled on the half grid `a + l·h/2`, `l = 0..2n−1`.
pub(crate) struct HalfGridCoeffs {
    pub c: Vec<Vec<f64>>,
}

impl HalfGridCoeffs {
    fn k(&self) -> usize {
        self.c.len() - 1
    }

    fn rhs(&self, l: usize, y: &[f64], out: &mut [f64]) {
        let k = self.k();
        let lead = self.c[k][l];
        for m in 0..k - 1 {
            out[m] = y[m + 1];
        }
        let s: f64 = (0..k).map(|m| self.c[m][l] * y[m]).sum();
        out[k - 1] = -s / lead;
    }

    /// States `[x, x′, …, x^{(k−1)}]` at nodes `0..=i`, starting from `y0` at node `i`.
    pub fn solve_backward(&self, i: usize, h: f64, y0: &[f64]) -> Vec<Vec<f64>> {
        let k = self.k();
        let mut states = vec![vec![0.0; k]; i + 1];
        states[i] = y0.to_vec();
        let mut y = y0.to_vec();
        let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; k], vec![0.0; k], vec![0.0; k], vec![0.0; k]);
        let mut tmp = vec![0.0; k];
        for node in (1..=i).rev() {
            let l = 2 * node;
            self.rhs(l, &y, &mut k1);
            for m in 0..k {
                tmp[m] = y[m] - 0.5 * h * k1[m];
            }
            self.rhs(l - 1, &tmp, &mut k2);
            for m in 0..k {
                tmp[m] = y[m] - 0.5 * h * k2[m];
            }
            self.rhs(l - 1, &tmp, &mut k3);
            for m in 0..k {
                tmp[m] = y[m] - h * k3[m];
            }
            self.rhs(l - 2, &tmp, &mut k4);
            for m in 0..k {
                y[m] -= h / 6.0 * (k1[m] + 2.0 * k2[m] + 2.0 * k3[m] + k4[m]);
            }
            states[node - 1] = y.clone();
        }
        states
    }
}
