//! Constructive ∗-inverses, the numeric fallback, and Volterra resolvents.

mod closed;
mod numeric;
mod ode;
mod separable;
pub mod verify;

pub use closed::{invert_left_variable, invert_polynomial, invert_right_variable};
pub use numeric::{
    invert_discrete, invert_kernel_resolvent, invert_numeric, resolvent, solve_discrete, NumericInverse,
};
pub use separable::{build_annihilator, invert_separable, Annihilator, ReducedOde};

use crate::star_core::{Kernel, StarObject};

/// A ∗-inverse together with what was learned while building it.
#[derive(Clone, Debug)]
pub struct Inverse {
    pub object: StarObject,
    /// Nodes where the construction is undefined; masked in the output.
    pub excluded: Vec<usize>,
    /// Solution of the reduced ODE, when one was solved.
    pub x_tilde: Option<Kernel>,
    /// Number of δ′ pre-multiplications applied to a vanishing diagonal.
    pub stages: usize,
}

impl Inverse {
    fn exact(object: StarObject) -> Inverse {
        Inverse { object, excluded: Vec::new(), x_tilde: None, stages: 0 }
    }
}
