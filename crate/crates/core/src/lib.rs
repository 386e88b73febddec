//! Time-ordered exponentials of time-dependent matrices through the ∗-Lanczos
//! algorithm, on top of an algebra of two-time distributions
//! `f̃(t′,t)Θ(t′−t) + Σ c_m(t′)δ^{(m)}(t′−t)`.

pub mod error;
pub mod evolution;
pub mod expr;
pub mod green;
pub mod par;
pub mod settings;
pub mod star_core;
pub mod star_inverse;
pub mod star_lanczos;

pub use error::{Error, Result};
pub use expr::{parse, TimeExpr, Var};
pub use settings::Settings;
pub use star_core::{Coeff, DeltaSeries, Grid, Kernel, StarObject};
