//! Two-time generalized functions and the ∗-product.

pub mod delta;
pub mod discrete;
pub mod fd;
pub mod grid;
pub mod io;
pub mod kernel;
pub mod object;
pub mod product;
pub mod tri;

pub use delta::{normalize_right_coefficient, Coeff, DeltaSeries};
pub use grid::Grid;
pub use io::ObjectEnvelope;
pub use kernel::Kernel;
pub use object::{star_identity, StarObject};
pub use product::{apply_to_test, integrate_rows, star_product, star_product_capped};
pub use tri::Tri;
