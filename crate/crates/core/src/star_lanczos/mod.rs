//! The ∗-Lanczos recurrence, its tridiagonal output, and moment checks.

mod lanczos;
mod matrix;
mod moments;

pub use lanczos::{
    run_lanczos, run_lanczos_with_state, BetaMode, LanczosState, StepDiagnostic, TridiagonalEnvelope, TridiagonalStar,
};
pub use matrix::{dot, scalar_vector, StarMatrix};
pub use moments::{
    moment_reference, smoothness_profile, star_moment, tridiagonal_moment, verify_moments, MomentReport, MomentRow,
};
