use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform partition of `[a, b]` into `n_points` nodes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub a: f64,
    pub b: f64,
    pub n_points: usize,
}

impl Grid {
    pub fn new(a: f64, b: f64, n_points: usize) -> Result<Grid> {
        if n_points < 2 {
            return Err(Error::Invalid(format!("n_points must be at least 2, got {n_points}")));
        }
        if !(a.is_finite() && b.is_finite() && b > a) {
            return Err(Error::Invalid(format!("interval [{a}, {b}] must satisfy a < b")));
        }
        Ok(Grid { a, b, n_points })
    }

    pub fn n(&self) -> usize {
        self.n_points
    }

    pub fn h(&self) -> f64 {
        (self.b - self.a) / (self.n_points - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        self.a + i as f64 * self.h()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.node(i)).collect()
    }

    /// Trapezoid weights over the whole interval.
    pub fn weights(&self) -> Vec<f64> {
        let h = self.h();
        let mut w = vec![h; self.n_points];
        w[0] = h / 2.0;
        w[self.n_points - 1] = h / 2.0;
        w
    }

    /// Index of the node closest to `x`, clamped to the grid.
    pub fn nearest(&self, x: f64) -> usize {
        let r = ((x - self.a) / self.h()).round();
        r.clamp(0.0, (self.n_points - 1) as f64) as usize
    }

    pub fn check_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Same interval with twice as many steps.
    pub fn refined(&self) -> Grid {
        Grid { a: self.a, b: self.b, n_points: 2 * self.n_points - 1 }
    }
}
