//! Shared numerical primitives: quadrature, special functions, random
//! variates, small symmetric-matrix algebra, finite differences and
//! goodness-of-fit tests.
//!
//! Everything here is pure given its inputs; random streams are explicit
//! values passed in, never global state.

pub mod fd;
pub mod poly;
pub mod quad;
pub mod rng;
pub mod special;
pub mod stats;
pub mod sym;

pub use quad::{integrate, QuadratureSpec};
pub use rng::Streams;
pub use special::{hermite, log_bessel_i};
pub use stats::{ks_test, sample_noncentral_chisq};
pub use sym::SymMatrix;
