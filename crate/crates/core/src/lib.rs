//! Maximum likelihood estimation for scalar diffusion processes observed at
//! discrete times.
//!
//! The transition density of a diffusion `dX = mu(X; theta) dt + sigma(X; theta) dB`
//! rarely has a closed form, so the exact likelihood of a sampled path is
//! unavailable for most models. This crate implements a closed-form expansion
//! of the transition density (a Gaussian leading term corrected by a
//! recursively-defined coefficient series in powers of the sampling interval),
//! the approximate likelihood built from it, and the estimation and simulation
//! machinery needed to study the resulting estimators:
//!
//! - [`numerics`]: adaptive quadrature, special functions, small symmetric
//!   eigensystems, finite differences, seeded random streams and
//!   goodness-of-fit tests.
//! - [`model`] / [`models`]: the diffusion-model contract plus the Vasicek and
//!   Cox-Ingersoll-Ross reference models with exact transition laws, exact
//!   samplers and closed-form information matrices.
//! - [`expansion`]: the unit-diffusion transform, the coefficient recursion
//!   and the truncated log transition density.
//! - [`likelihood`]: exact and approximate log-likelihood surfaces, scores and
//!   truncation diagnostics.
//! - [`estimation`]: maximizers, observed information, Wald statistics, the
//!   order-selection rule and asymptotic moment estimates.
//! - [`simulate`]: exact and Euler path generation with deterministic seeding.
//! - [`experiment`]: a declarative runner for replication studies with CSV and
//!   JSON reporting (also exposed through the `dmle` command-line tool).

pub mod error;
pub mod estimation;
pub mod expansion;
pub mod experiment;
pub mod likelihood;
pub mod model;
pub mod models;
pub mod numerics;
pub mod simulate;

pub use error::{Error, Result};
pub use model::{DiffusionModel, ParamPartition, ParamVector};
