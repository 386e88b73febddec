use serde::{Deserialize, Serialize};

/// Numerical thresholds shared by the solvers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    /// Maximum delta-derivative order kept in a series.
    pub m_max: usize,
    /// Relative annihilation tolerance.
    pub tau_ann: f64,
    /// Relative breakdown threshold.
    pub tau_bd: f64,
    /// Largest accepted condition estimate for discrete inversions.
    pub cond_cap: f64,
    /// RK4 substeps per grid step in the reference integrator.
    pub substeps: usize,
    /// Relative tolerance for object equality.
    pub tau_eq: f64,
    /// Tolerance on wᴴv = 1.
    pub bilinear_tol: f64,
    /// Relative size below which a diagonal is treated as identically zero.
    pub tau_diag: f64,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            m_max: 8,
            tau_ann: 1e-8,
            tau_bd: 1e-10,
            cond_cap: 1e12,
            substeps: 10,
            tau_eq: 1e-10,
            bilinear_tol: 1e-12,
            tau_diag: 1e-7,
        }
    }
}
